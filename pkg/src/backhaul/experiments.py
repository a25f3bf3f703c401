"""Seeded Monte-Carlo scenarios built from the lattice, routing and bounds modules.

Every random draw is seeded by ``derive_seed(master_seed, *point_key, trial)``.
A point key is made of the axis values that define the point, never its
position in a list, so a sub-config reproduces the matching samples of a
larger one. Results are gathered by trial index, so they do not depend on
execution order or worker count.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bounds, geometry, routing
from .channel import LinkBudget
from .config import ScenarioConfig, psi_for, validate, wavelength_for
from .errors import DomainError, DomainWarning, ParameterError
from .lattice import LatticeLink, pattern_reuse_factor, REUSE_BASES
from .linkrate import long_hop_range
from .seeding import derive_seed

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
PATTERN_CODES = {"full": 0, "random": 1, "det4": 2, "det4_square": 3, "det9": 4}
KIND_CODES = {"cutset": 11, "census": 12, "pairing": 13, "gateway": 14, "strategy": 15}


@dataclass
class SweepPoint:
    label: dict
    samples: np.ndarray

    @property
    def count(self) -> int:
        return int(len(self.samples))

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples)) if self.count else math.nan

    @property
    def std(self) -> float:
        return float(np.std(self.samples, ddof=1)) if self.count > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.count) if self.count else math.nan

    def quantiles(self, qs=QUANTILES) -> np.ndarray:
        return np.quantile(self.samples, qs) if self.count else np.full(len(qs), math.nan)


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.header.index(name)
        return [r[k] for r in self.rows]


@dataclass
class SweepResult:
    scenario: str
    master_seed: int
    axis_name: str
    points: list
    tables: dict  # "" is the main table; other keys become filename suffixes
    plot: dict | None = None
    metadata: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def axis(self) -> list:
        return [p.label for p in self.points]

    @property
    def means(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    @property
    def stds(self) -> np.ndarray:
        return np.array([p.std for p in self.points])

    @property
    def counts(self) -> np.ndarray:
        return np.array([p.count for p in self.points])

    def point(self, **label) -> SweepPoint:
        for p in self.points:
            if all(p.label.get(k) == v for k, v in label.items()):
                return p
        raise KeyError(label)


def _pmap(fn, args: list, workers: int) -> list:
    if workers <= 1 or len(args) < 2:
        return [fn(*a) for a in args]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*args), chunksize=max(1, len(args) // (4 * workers))))


def lattice_link(cfg: ScenarioConfig, psi: int, grid_dim: int | None = None) -> LatticeLink:
    ch, g = cfg.channel, cfg.geometry
    budget = LinkBudget(ch.alpha, ch.mu_db, g.spacing, wavelength_for(cfg, psi))
    return LatticeLink(grid_dim or g.grid_dim, g.spacing, budget, math.sqrt(ch.array_area),
                       int(psi), tuple(ch.tx_offset), g.perturbation, ch.precision)


def _sample_rate(link, seed, pattern, p, with_bounds):
    return link.sample(seed, pattern, p, with_bounds)


def _timed(fn):
    def run(cfg: ScenarioConfig) -> SweepResult:
        validate(cfg)
        t0 = time.perf_counter()
        res = fn(cfg)
        res.runtime_s = time.perf_counter() - t0
        return res
    run.__name__, run.__doc__ = fn.__name__, fn.__doc__
    return run


# -- reuse factor ----------------------------------------------------------------

def reuse_points(cfg: ScenarioConfig) -> list:
    """``(pattern, p)`` pairs a fig_reuse config evaluates, in output order."""
    out = []
    for pat in cfg.reuse.patterns:
        own = pattern_reuse_factor(pat)
        for p in cfg.reuse.p:
            if own is None or p in (1, own):
                out.append((pat, int(p)))
    return out


@_timed
def run_fig_reuse(cfg: ScenarioConfig) -> SweepResult:
    """Mean center-link rate versus reuse factor for each activation pattern.

    At ``p = 1`` every pattern activates all BSs and shares one set of seeds,
    so those points coincide exactly.
    """
    psi = int(cfg.channel.psi[0])
    link = lattice_link(cfg, psi)
    trials = cfg.trials_for(0)
    cache, points = {}, []
    for pat, p in reuse_points(cfg):
        eff = "full" if p == 1 else pat
        if (eff, p) not in cache:
            seeds = [derive_seed(cfg.master_seed, PATTERN_CODES[eff], p, t) for t in range(trials)]
            out = _pmap(_sample_rate, [(link, s, eff, p, False) for s in seeds], cfg.resolved_workers())
            cache[(eff, p)] = (seeds, np.array([o.rate for o in out]))
        seeds, rates = cache[(eff, p)]
        points.append(SweepPoint({"pattern": pat, "p": p, "seeds": seeds}, rates))
    main = Table(["pattern", "p", "mean_rate", "std_rate", "trials"],
                 [[pt.label["pattern"], pt.label["p"], pt.mean, pt.std, pt.count] for pt in points])
    samples = Table(["pattern", "p", "trial", "seed", "rate_bps_hz"])
    for pt in points:
        for t, (s, r) in enumerate(zip(pt.label["seeds"], pt.samples)):
            samples.rows.append([pt.label["pattern"], pt.label["p"], t, s, r])
    series = {}
    for pt in points:
        series.setdefault(pt.label["pattern"], []).append((pt.label["p"], pt.mean))
    plot = {"type": "line", "title": "center link rate vs reuse factor",
            "xlabel": "reuse factor p", "ylabel": "mean rate [bps/Hz]", "series": series}
    meta = {"psi": psi, "trials": trials, "wavelength": wavelength_for(cfg, psi),
            "reuse_bases": {k: REUSE_BASES[k] for k in cfg.reuse.patterns if k in REUSE_BASES}}
    return SweepResult("fig_reuse", cfg.master_seed, "pattern,p", points,
                       {"": main, "samples": samples}, plot, meta)


# -- rate distribution -------------------------------------------------------------

@_timed
def run_rate_pdf(cfg: ScenarioConfig) -> SweepResult:
    """Distribution of the full-reuse center-link rate over antenna placements."""
    points, rows, samples, hist = [], [], Table(["seed", "psi", "p", "rate_bps_hz"]), \
        Table(["psi", "bin_lo", "bin_hi", "count", "density"])
    notices, plot_series = [], {}
    for k, psi in enumerate(cfg.channel.psi):
        psi = int(psi)
        trials = cfg.trials_for(k)
        if trials < 100:
            msg = f"psi = {psi}: only {trials} trials, the histogram is unstable"
            warnings.warn(msg, DomainWarning, stacklevel=2)
            notices.append(msg)
        link = lattice_link(cfg, psi)
        seeds = [derive_seed(cfg.master_seed, psi, t) for t in range(trials)]
        out = _pmap(_sample_rate, [(link, s, "full", 1, True) for s in seeds], cfg.resolved_workers())
        rates = np.array([o.rate for o in out])
        ring = np.array([o.ergodic_ring for o in out])
        exact = np.array([o.ergodic_exact for o in out])
        pt = SweepPoint({"psi": psi, "ergodic_ring": ring, "ergodic_exact": exact}, rates)
        points.append(pt)
        q = pt.quantiles()
        rows.append([psi, link.budget.wavelength, trials, pt.mean, pt.std, pt.std / pt.mean,
                     q[0], q[2], q[4], ring.mean(), ring.max(), exact.mean(), exact.max()])
        samples.rows.extend([s, psi, 1, r] for s, r in zip(seeds, rates))
        counts, edges = np.histogram(rates, bins=cfg.hist_bins)
        dens = counts / (counts.sum() * np.diff(edges))
        hist.rows.extend([psi, lo, hi, int(c), d] for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, dens))
        plot_series[f"psi={psi}"] = {"edges": edges.tolist(), "density": dens.tolist(),
                                     "markers": {"mean": pt.mean, "ergodic bound": float(ring.mean())}}
    main = Table(["psi", "wavelength", "trials", "mean_rate", "std_rate", "cv", "q05", "q50", "q95",
                  "ergodic_ring_mean", "ergodic_ring_max", "ergodic_exact_mean", "ergodic_exact_max"], rows)
    plot = {"type": "hist", "title": "center link rate distribution", "xlabel": "rate [bps/Hz]",
            "ylabel": "density", "series": plot_series}
    meta = {"trials": [cfg.trials_for(k) for k in range(len(cfg.channel.psi))]}
    return SweepResult("rate_pdf", cfg.master_seed, "psi", points,
                       {"": main, "samples": samples, "hist": hist}, plot, meta, notices)


# -- cut-set sweep -------------------------------------------------------------------

def _cutset_trial(n, psi, seed, alpha, array_side, max_size):
    real = geometry.make_ppp_network(math.sqrt(n), 1.0, seed)
    if real.n_bs * psi > max_size:
        return None
    return bounds.cutset_numeric(real, psi, bounds.unit_budget(alpha), seed=derive_seed(seed, 2),
                                 array_side=array_side, max_size=max_size)


@_timed
def run_cutset_sweep(cfg: ScenarioConfig) -> SweepResult:
    """Numeric cut-set levels on small PPP networks and the strip-sum scaling law."""
    bd = cfg.bounds
    rows, ratio, points, notices = [], Table(["n", "psi", "alpha", "cs_series", "cs_formula", "ratio"]), [], []
    trials = cfg.trials_for(0)
    for n in bd.realization_n:
        for psi in bd.realization_psi:
            seeds = [derive_seed(cfg.master_seed, KIND_CODES["cutset"], n, psi, t) for t in range(trials)]
            args = [(n, psi, s, bd.realization_alpha, bd.array_side, bd.max_size) for s in seeds]
            res = _pmap(_cutset_trial, args, cfg.resolved_workers())
            kept = [r for r in res if r is not None]
            if len(kept) < len(res):
                notices.append(f"n = {n}, psi = {psi}: {len(res) - len(kept)} realizations skipped "
                               f"(n_bs * psi above {bd.max_size})")
            for r in kept:
                rows.append({"n": r.n, "psi": psi, "alpha": bd.realization_alpha, "exact": r.exact_logdet,
                             "hadamard": r.hadamard_bound, "strip": r.strip_bound})
            gaps = np.array([r.strip_bound - r.exact_logdet for r in kept])
            points.append(SweepPoint({"n": n, "psi": psi, "results": kept}, gaps))
    for n in bd.n_grid:
        psi = n ** bd.psi_exponent
        row = {"n": n, "psi": psi, "alpha": bd.alpha}
        series = bounds.cs_series(n, psi, bd.alpha)
        try:
            row["cs_formula"] = bounds.eval_cs_lemma2(n, psi, bd.alpha)
            row["t_ub_formula"] = bounds.eval_throughput_ub(n, psi, bd.alpha)
            ratio.rows.append([n, psi, bd.alpha, series, row["cs_formula"], series / row["cs_formula"]])
        except DomainError as exc:
            notices.append(f"n = {n}: {exc}")
            ratio.rows.append([n, psi, bd.alpha, series, None, None])
        rows.append(row)
    main = Table(list(bounds.CUTSET_HEADER), [[r.get(k) for k in bounds.CUTSET_HEADER] for r in rows])
    rr = [(r[0], r[5]) for r in ratio.rows if r[5] is not None]
    plot = {"type": "line", "title": "strip series / scaling law", "xlabel": "log10 n",
            "ylabel": "ratio", "series": {"ratio": [(math.log10(n), v) for n, v in rr]}}
    return SweepResult("cutset_sweep", cfg.master_seed, "n,psi", points, {"": main, "ratio": ratio},
                       plot, {"trials": trials}, notices)


# -- short hop versus long hop -----------------------------------------------------

def _worst_connection_rate(grid, spacing, seed, highway_rate):
    real = geometry.make_lattice_network(grid, spacing, seed, 0.0)
    hs = routing.build_highways(real, spacing)
    plan = routing.plan_routes(real, hs)
    rates = routing.per_connection_rate(plan, highway_rate, highway_rate)
    return min(r.rate for r in rates.values()), plan.max_highway_load


def _long_hop(grid, spacing, seed, d_c):
    real = geometry.make_lattice_network(grid, spacing, seed, 0.0)
    return routing.long_hop_route(real, d_c)


def _mean_link_rate(cfg, psi, grid, trials, key) -> np.ndarray:
    link = lattice_link(cfg, psi, grid)
    seeds = [derive_seed(cfg.master_seed, KIND_CODES["strategy"], key, psi, grid, t) for t in range(trials)]
    out = _pmap(_sample_rate, [(link, s, "full", 1, False) for s in seeds], cfg.resolved_workers())
    return np.array([o.rate for o in out])


@_timed
def run_strategy_compare(cfg: ScenarioConfig) -> SweepResult:
    """Per-connection rate of highway short hops versus greedy long hops.

    Short hops: the highway link rate is the Monte-Carlo mean center-link rate
    on the ``sqrt(n)``-side lattice. It is shared at the busiest highway BS,
    and the reported value is the worst connection averaged over pairings.
    Long hops: greedy routing with range ``d_c`` and unit-rate hops shared at
    the busiest relay.
    """
    ro, g = cfg.routing, cfg.geometry
    rows, points = [], []
    p0 = 1.0 / ro.power_ratio
    for k, n in enumerate(ro.n_grid):
        grid = int(round(math.sqrt(n)))
        psi = psi_for(cfg, n, k)
        link_rates = _mean_link_rate(cfg, psi, grid, ro.link_trials, 1)
        hr = float(link_rates.mean())
        pair_seeds = [derive_seed(cfg.master_seed, KIND_CODES["pairing"], n, t) for t in range(ro.pairings)]
        short = _pmap(_worst_connection_rate, [(grid, g.spacing, s, hr) for s in pair_seeds],
                      cfg.resolved_workers())
        d_c = long_hop_range(1.0, p0, psi, ro.long_hop_alpha) * g.spacing
        longs = _pmap(_long_hop, [(grid, g.spacing, s, d_c) for s in pair_seeds], cfg.resolved_workers())
        short_rate = np.array([s[0] for s in short])
        long_rate = np.array([lh.per_connection_rate for lh in longs])
        stuck = sum(lh.stuck for lh in longs)
        points.append(SweepPoint({"n": n, "psi": psi, "strategy": "short"}, short_rate))
        points.append(SweepPoint({"n": n, "psi": psi, "strategy": "long"}, long_rate))
        rows.append([n, psi, wavelength_for(cfg, psi), hr, short_rate.mean(), d_c, long_rate.mean(),
                     stuck, short_rate.mean() / long_rate.mean()])
    main = Table(["n", "psi", "wavelength", "link_rate", "short_hop_rate", "long_hop_dc",
                  "long_hop_rate", "long_hop_stuck", "short_over_long"], rows)
    sweep = Table(["psi", "wavelength", "mean_rate", "std_rate", "trials"])
    for psi in ro.psi_sweep:
        r = _mean_link_rate(cfg, int(psi), g.grid_dim, ro.link_trials, 2)
        sweep.rows.append([int(psi), wavelength_for(cfg, int(psi)), r.mean(), r.std(ddof=1) if len(r) > 1 else 0.0, len(r)])
        points.append(SweepPoint({"psi": int(psi), "strategy": "link"}, r))
    plot = {"type": "line", "title": "per-connection rate", "xlabel": "log2 n", "ylabel": "rate [bps/Hz]",
            "series": {"short hop": [(math.log2(r[0]), r[4]) for r in rows],
                       "long hop": [(math.log2(r[0]), r[6]) for r in rows]}}
    return SweepResult("strategy_compare", cfg.master_seed, "n", points, {"": main, "psi": sweep}, plot,
                       {"pairings": ro.pairings, "link_trials": ro.link_trials})


# -- highway census ---------------------------------------------------------------

def _census_trial(n, density, cell_side, seed):
    real = geometry.make_ppp_network(math.sqrt(n / density), density, seed)
    hs = routing.build_highways(real, cell_side)
    return len(hs.horizontal_highways), len(hs.vertical_highways), hs.failed_slabs, hs.num_slabs


def _lattice_load(grid, spacing, seed):
    real = geometry.make_lattice_network(grid, spacing, seed, 0.0)
    plan = routing.plan_routes(real, routing.build_highways(real, spacing))
    return plan.max_highway_load, int(plan.bs_load.max())


@_timed
def run_highway_census(cfg: ScenarioConfig) -> SweepResult:
    """Highway counts on PPP networks and highway loads on the lattice."""
    ro, g = cfg.routing, cfg.geometry
    census = Table(["seed", "n", "horizontal", "vertical", "failed_slabs"])
    points = []
    trials = cfg.trials_for(0)
    for n in ro.n_grid:
        seeds = [derive_seed(cfg.master_seed, KIND_CODES["census"], n, t) for t in range(trials)]
        out = _pmap(_census_trial, [(n, g.density, ro.cell_side, s) for s in seeds], cfg.resolved_workers())
        census.rows.extend([s, n, h, v, f] for s, (h, v, f, _) in zip(seeds, out))
        h = np.array([o[0] for o in out], float)
        failed = sum(o[2] for o in out) / max(1, sum(2 * o[3] for o in out))
        points.append(SweepPoint({"n": n, "failed_fraction": failed,
                                  "vertical": np.array([o[1] for o in out], float)}, h))
    seeds = [derive_seed(cfg.master_seed, KIND_CODES["pairing"], g.grid_dim ** 2, t) for t in range(ro.pairings)]
    loads = _pmap(_lattice_load, [(g.grid_dim, g.spacing, s) for s in seeds], cfg.resolved_workers())
    load = Table(["seed", "n", "max_highway_load", "max_bs_load"],
                 [[s, g.grid_dim ** 2, a, b] for s, (a, b) in zip(seeds, loads)])
    points.append(SweepPoint({"n": g.grid_dim ** 2, "lattice_load": True}, np.array([a for a, _ in loads], float)))
    plot = {"type": "line", "title": "mean horizontal highways", "xlabel": "n", "ylabel": "count",
            "series": {"horizontal": [(p.label["n"], p.mean) for p in points[:-1]]}}
    return SweepResult("highway_census", cfg.master_seed, "n", points, {"": census, "load": load}, plot,
                       {"trials": trials, "pairings": ro.pairings})


# -- wired gateways ---------------------------------------------------------------

def boundary_gateways(grid: int, count: int) -> np.ndarray:
    """``count`` BS indices spread evenly along the lattice perimeter."""
    ring = ([(i, 0) for i in range(grid)] + [(grid - 1, j) for j in range(1, grid)]
            + [(i, grid - 1) for i in range(grid - 2, -1, -1)] + [(0, j) for j in range(grid - 2, 0, -1)])
    count = max(1, min(int(count), len(ring)))
    pick = np.floor(np.arange(count) * len(ring) / count).astype(int)
    return np.array([ring[k][0] * grid + ring[k][1] for k in pick])


def gateway_loads(grid: int, spacing: float, gateways: np.ndarray, rho: float) -> np.ndarray:
    """Traffic per gateway when every BS sends ``1 - rho`` to its nearest gateway."""
    pos = geometry.sample_perturbed_lattice(grid, spacing, 0, 0.0)
    d = np.linalg.norm(pos[:, None, :] - pos[gateways][None, :, :], axis=2)
    nearest = np.argmin(d, axis=1)  # first minimum = lowest-listed gateway
    return np.bincount(nearest, minlength=len(gateways)) * (1.0 - rho)


def _mini_rates(sub, spacing, seeds, highway_rate):
    return [_worst_connection_rate(sub, spacing, s, highway_rate)[0] for s in seeds]


@_timed
def run_gateway_scenarios(cfg: ScenarioConfig) -> SweepResult:
    """Boundary gateways (load versus the sqrt(n) rule) or a grid of mini-networks."""
    gw, g = cfg.gateway, cfg.geometry
    points = []
    if cfg.kind == "gateway_boundary":
        rows = []
        for n in gw.n:
            grid = int(round(math.sqrt(n)))
            gates = boundary_gateways(grid, round(gw.gateway_factor * math.sqrt(n)))
            load = gateway_loads(grid, g.spacing, gates, gw.rho)
            points.append(SweepPoint({"n": n, "gateways": len(gates)}, load))
            rows.append([n, len(gates), gw.rho, load.max(), load.mean(), load.max() / math.sqrt(n)])
        main = Table(["n", "gateways", "rho", "max_load", "mean_load", "max_load_over_sqrt_n"], rows)
        plot = {"type": "line", "title": "gateway load / sqrt(n)", "xlabel": "log2 n", "ylabel": "load",
                "series": {"max": [(math.log2(r[0]), r[5]) for r in rows]}}
        return SweepResult(cfg.kind, cfg.master_seed, "n", points, {"": main}, plot, {})
    if cfg.kind != "gateway_grid":
        raise ParameterError(f"not a gateway scenario: {cfg.kind}")
    rows, per_mini = [], Table(["n", "beta", "mini", "worst_rate"])
    for n in gw.n:
        side = int(round(math.sqrt(n)))
        for beta in gw.beta:
            k = int(round(n ** (beta / 2)))
            sub = side // k
            n_mini, bs_per = k * k, sub * sub
            psi = max(1, int(round(math.sqrt(bs_per))))
            if bs_per < 4:
                # every BS is its own gateway: no wireless backhaul left
                rows.append([n, beta, n_mini, bs_per, psi, None, None, None, None])
                points.append(SweepPoint({"n": n, "beta": beta, "degenerate": True}, np.zeros(0)))
                continue
            hr = float(_mean_link_rate(cfg, psi, side, cfg.trials_for(0), 3).mean())
            args = [(sub, g.spacing,
                     [derive_seed(cfg.master_seed, KIND_CODES["gateway"], n, int(round(beta * 1e6)), m, t)
                      for t in range(cfg.routing.pairings)], hr) for m in range(n_mini)]
            worst = np.array([np.mean(w) for w in _pmap(_mini_rates, args, cfg.resolved_workers())])
            per_mini.rows.extend([n, beta, m, w] for m, w in enumerate(worst))
            points.append(SweepPoint({"n": n, "beta": beta, "degenerate": False}, worst))
            rows.append([n, beta, n_mini, bs_per, psi, hr, worst.min(), worst.mean(), worst.max()])
    main = Table(["n", "beta", "mini_networks", "bs_per_mini", "psi", "link_rate",
                  "min_rate", "mean_rate", "max_rate"], rows)
    plot = {"type": "line", "title": "mini-network per-connection rate", "xlabel": "beta",
            "ylabel": "rate [bps/Hz]", "series": {"mean": [(r[1], r[7]) for r in rows if r[7] is not None]}}
    return SweepResult(cfg.kind, cfg.master_seed, "beta", points, {"": main, "minis": per_mini}, plot, {})


RUNNERS = {
    "fig_reuse": run_fig_reuse,
    "rate_pdf": run_rate_pdf,
    "cutset_sweep": run_cutset_sweep,
    "strategy_compare": run_strategy_compare,
    "highway_census": run_highway_census,
    "gateway_boundary": run_gateway_scenarios,
    "gateway_grid": run_gateway_scenarios,
}


def run_scenario(cfg: ScenarioConfig) -> SweepResult:
    return RUNNERS[cfg.kind](cfg)
