"""Write the default config of every scenario kind to configs/<kind>.cfg."""

import argparse
from pathlib import Path

from backhaul import config as cf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "configs"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in cf.KINDS:
        path = cf.save(cf.default_config(kind), out / f"{kind}.cfg")
        print(path)


if __name__ == "__main__":
    main()
