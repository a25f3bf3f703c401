"""Cut-set sweep, highway census, short- versus long-hop routing, and gateways.

Each default scenario is run in turn and its main table printed. Outputs go
to ``--out``.
"""

import argparse

from backhaul import config as cf
from backhaul.experiments import run_scenario
from backhaul.output import emit_outputs

KINDS = ("cutset_sweep", "highway_census", "strategy_compare", "gateway_boundary", "gateway_grid")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="output")
    ap.add_argument("--workers", type=int, default=0)
    ap.add_argument("kinds", nargs="*", default=list(KINDS))
    args = ap.parse_args()
    for kind in args.kinds:
        cfg = cf.default_config(kind)
        cfg.workers, cfg.formats = args.workers, ["csv", "svg"]
        result = run_scenario(cfg)
        emit_outputs(result, args.out, cfg.formats, cf.dumps(cfg))
        table = result.tables["ratio"] if kind == "cutset_sweep" else result.tables[""]
        rows = table.rows if kind != "highway_census" else table.rows[:10]
        print(",".join(table.header))
        for row in rows:
            print(",".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
        for note in result.notices:
            print(f"# notice: {note}")
        print(f"# {kind}: {result.runtime_s:.1f} s\n")


if __name__ == "__main__":
    main()
