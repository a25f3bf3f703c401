"""Command line entry point: ``backhaul run|validate|list-scenarios|seed-report``."""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from .errors import ConfigError, NumericalError, ParameterError
from .experiments import reuse_points, run_scenario, PATTERN_CODES, KIND_CODES
from .output import emit_outputs
from .seeding import derive_seed

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

DESCRIPTIONS = {
    "fig_reuse": "mean center-link rate vs reuse factor (random and lattice-coset patterns)",
    "rate_pdf": "rate distribution over antenna placements with ergodic lower bound",
    "cutset_sweep": "numeric cut-set bound chain and strip-sum scaling law",
    "strategy_compare": "short-hop highways vs greedy long hops across network sizes",
    "highway_census": "highway counts on PPP networks and highway loads on the lattice",
    "gateway_boundary": "load of sqrt(n) boundary gateways",
    "gateway_grid": "per-connection rate inside n^beta mini-networks",
}


def _load(path) -> cfgmod.ScenarioConfig:
    return cfgmod.validate(cfgmod.load(path))


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    result = run_scenario(cfg)
    files = emit_outputs(result, cfg.resolved_output_dir(), cfg.formats, cfgmod.dumps(cfg))
    for note in result.notices:
        print(f"notice: {note}", file=sys.stderr)
    for f in files:
        print(f)
    print(f"{cfg.kind}: {len(result.points)} points in {result.runtime_s:.1f} s", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"ok: {cfg.kind}")
    return EXIT_OK


def cmd_list(args) -> int:
    for kind in cfgmod.KINDS:
        print(f"{kind:18s} {DESCRIPTIONS[kind]}")
    if args.defaults:
        print()
        for kind in cfgmod.KINDS:
            print(f"# --- {kind}")
            print(cfgmod.dumps(cfgmod.default_config(kind)))
    return EXIT_OK


def seed_report(cfg: cfgmod.ScenarioConfig, limit: int = 3) -> list:
    """First few derived seeds of every axis point, as printable lines."""
    m = cfg.master_seed
    lines = [f"master_seed = {m}", "trial seed = derive_seed(master_seed, *point_key, trial)"]
    keys = []
    if cfg.kind == "fig_reuse":
        for pat, p in reuse_points(cfg):
            eff = "full" if p == 1 else pat
            keys.append((f"pattern={pat} p={p}", (PATTERN_CODES[eff], p), cfg.trials_for(0)))
    elif cfg.kind == "rate_pdf":
        keys = [(f"psi={psi}", (int(psi),), cfg.trials_for(k)) for k, psi in enumerate(cfg.channel.psi)]
    elif cfg.kind == "cutset_sweep":
        keys = [(f"n={n} psi={psi}", (KIND_CODES["cutset"], n, psi), cfg.trials_for(0))
                for n in cfg.bounds.realization_n for psi in cfg.bounds.realization_psi]
    elif cfg.kind == "highway_census":
        keys = [(f"n={n}", (KIND_CODES["census"], n), cfg.trials_for(0)) for n in cfg.routing.n_grid]
    elif cfg.kind == "strategy_compare":
        keys = [(f"pairings n={n}", (KIND_CODES["pairing"], n), cfg.routing.pairings) for n in cfg.routing.n_grid]
    for label, key, trials in keys:
        seeds = [derive_seed(m, *key, t) for t in range(min(limit, trials))]
        lines.append(f"{label}: key={key} trials={trials} first={seeds}")
    if not keys:
        lines.append("(no Monte-Carlo seeds beyond pairings for this scenario)")
    return lines


def cmd_seed_report(args) -> int:
    cfg = _load(args.config)
    print("\n".join(seed_report(cfg, args.limit)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="backhaul", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario and write its outputs")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(fn=cmd_run)
    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("config")
    p.set_defaults(fn=cmd_validate)
    p = sub.add_parser("list-scenarios", help="list scenario kinds")
    p.add_argument("--defaults", action="store_true", help="also print each default config")
    p.set_defaults(fn=cmd_list)
    p = sub.add_parser("seed-report", help="show the derived per-trial seeds")
    p.add_argument("config")
    p.add_argument("--limit", type=int, default=3)
    p.set_defaults(fn=cmd_seed_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
