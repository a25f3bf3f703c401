"""Reuse-factor sweep and rate distribution on the 529-BS lattice.

Runs the default ``fig_reuse`` and ``rate_pdf`` scenarios, writes CSV and SVG
files, and prints the summary tables. ``--quick`` cuts the trial counts
for a smoke run.
"""

import argparse

from backhaul import config as cf
from backhaul.experiments import run_scenario
from backhaul.output import emit_outputs


def show(result):
    table = result.tables[""]
    print(",".join(table.header))
    for row in table.rows:
        print(",".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    print(f"# {result.scenario}: {result.runtime_s:.1f} s\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="output")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args()
    for kind in ("fig_reuse", "rate_pdf"):
        cfg = cf.default_config(kind)
        cfg.workers, cfg.formats = args.workers, ["csv", "svg"]
        if args.quick:
            cfg.trials = [40] if kind == "fig_reuse" else [200, 20]
        result = run_scenario(cfg)
        emit_outputs(result, args.out, cfg.formats, cf.dumps(cfg))
        show(result)


if __name__ == "__main__":
    main()
