"""Scenario configuration: dataclasses, a flat key-value text format, validation.

A config file holds one ``section.key = value`` pair per line. ``#`` starts
a comment. Lists are comma separated, and booleans are ``true``/``false``.
The top-level fields live in the ``scenario`` section. Every field has a
default, so a file only needs the keys it changes::

    scenario.kind = rate_pdf
    scenario.trials = 2000, 500
    channel.psi = 64, 256
"""

from __future__ import annotations

import dataclasses
import math
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .lattice import REUSE_BASES, PATTERNS, pattern_reuse_factor

KINDS = ("fig_reuse", "rate_pdf", "cutset_sweep", "strategy_compare",
         "highway_census", "gateway_boundary", "gateway_grid")
PSI_RULES = ("fixed", "sqrt_n", "n_alpha_over_4")
FORMATS = ("csv", "svg")
OUTPUT_DIR_ENV = "BACKHAUL_OUTPUT_DIR"
MAX_PSI = 1024


def _lst(*values):
    return field(default_factory=lambda: list(values))


@dataclass
class GeometryParams:
    grid_dim: int = 23
    spacing: float = 100.0
    perturbation: float = 0.0
    density: float = 1.0


@dataclass
class ChannelParams:
    alpha: float = 5.0
    mu_db: float = 0.0
    carrier_hz: float = 30e9
    wavelength: float = 0.0  # > 0 overrides carrier_hz
    array_area: float = 64.0
    psi: list[int] = _lst(64)
    psi_rule: str = "fixed"
    lambda_coupling: bool = False
    base_psi: int = 64
    precision: str = "single"
    tx_offset: list[int] = _lst(-1, 0)


@dataclass
class ReuseParams:
    p: list[int] = _lst(1)
    patterns: list[str] = _lst("full")


@dataclass
class RoutingParams:
    n_grid: list[int] = _lst(64, 256, 1024)
    cell_side: float = 2.0
    pairings: int = 10
    link_trials: int = 20
    long_hop_alpha: float = 4.0
    power_ratio: float = 1.0
    psi_sweep: list[int] = _lst(16, 32, 64)


@dataclass
class GatewayParams:
    n: list[int] = _lst(4096)
    beta: list[float] = _lst(0.0, 0.5, 1.0)
    rho: float = 0.5
    gateway_factor: float = 1.0


@dataclass
class BoundsParams:
    n_grid: list[float] = _lst(1e2, 1e3, 1e4, 1e5, 1e6)
    alpha: float = 6.0
    psi_exponent: float = 0.25
    realization_n: list[int] = _lst(16, 36, 64)
    realization_psi: list[int] = _lst(2, 4)
    realization_alpha: float = 5.0
    array_side: float = 0.05
    max_size: int = 4096


@dataclass
class ScenarioConfig:
    kind: str = "rate_pdf"
    trials: list[int] = _lst(100)
    master_seed: int = 2014
    output_dir: str = "output"
    formats: list[str] = _lst("csv")
    workers: int = 0  # 0: one process per CPU
    hist_bins: int = 40
    geometry: GeometryParams = field(default_factory=GeometryParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    reuse: ReuseParams = field(default_factory=ReuseParams)
    routing: RoutingParams = field(default_factory=RoutingParams)
    gateway: GatewayParams = field(default_factory=GatewayParams)
    bounds: BoundsParams = field(default_factory=BoundsParams)

    def trials_for(self, k: int) -> int:
        """Trial count of axis point ``k`` (the last entry repeats)."""
        return int(self.trials[min(k, len(self.trials) - 1)])

    def resolved_workers(self) -> int:
        return self.workers or (os.cpu_count() or 1)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)


_SECTION_TYPES = {"geometry": GeometryParams, "channel": ChannelParams, "reuse": ReuseParams,
                  "routing": RoutingParams, "gateway": GatewayParams, "bounds": BoundsParams}


# -- text format -----------------------------------------------------------------

def _format_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_scalar(text: str, typ, key: str):
    text = text.strip()
    try:
        if typ is bool:
            if text.lower() not in ("true", "false"):
                raise ValueError(text)
            return text.lower() == "true"
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        if not text:
            raise ValueError("empty value")
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {typ.__name__}") from exc


def _field_types(cls) -> dict:
    return typing.get_type_hints(cls)


def _items(cfg: ScenarioConfig):
    for f in dataclasses.fields(ScenarioConfig):
        if f.name in _SECTION_TYPES:
            sec = getattr(cfg, f.name)
            for g in dataclasses.fields(sec):
                yield f"{f.name}.{g.name}", getattr(sec, g.name)
        else:
            yield f"scenario.{f.name}", getattr(cfg, f.name)


def dumps(cfg: ScenarioConfig) -> str:
    lines = []
    for key, v in _items(cfg):
        text = ", ".join(_format_scalar(x) for x in v) if isinstance(v, list) else _format_scalar(v)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        section, _, name = key.partition(".")
        if section == "scenario":
            target = cfg
        elif section in _SECTION_TYPES:
            target = getattr(cfg, section)
        else:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        hints = _field_types(type(target))
        if name not in hints or name in _SECTION_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        typ = hints[name]
        if typing.get_origin(typ) is list:
            (inner,) = typing.get_args(typ)
            parts = [s for s in value.split(",")]
            if not value.strip():
                raise ConfigError(f"{key}: empty list")
            setattr(target, name, [_parse_scalar(s, inner, key) for s in parts])
        else:
            setattr(target, name, _parse_scalar(value, typ, key))
    return cfg


def load(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def save(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps(cfg))
    return path


# -- derived quantities ----------------------------------------------------------

def carrier_wavelength(cfg: ScenarioConfig) -> float:
    ch = cfg.channel
    return ch.wavelength if ch.wavelength > 0 else 299_792_458.0 / ch.carrier_hz


def wavelength_for(cfg: ScenarioConfig, psi: int) -> float:
    lam = carrier_wavelength(cfg)
    return lam * cfg.channel.base_psi / psi if cfg.channel.lambda_coupling else lam


def psi_for(cfg: ScenarioConfig, n: int, k: int = 0, alpha: float | None = None) -> int:
    rule = cfg.channel.psi_rule
    if rule == "fixed":
        return int(cfg.channel.psi[min(k, len(cfg.channel.psi) - 1)])
    if rule == "sqrt_n":
        return max(1, int(round(math.sqrt(n))))
    a = cfg.routing.long_hop_alpha if alpha is None else alpha
    return max(1, int(math.ceil(n ** (a / 4.0) - 1e-9)))


# -- validation ------------------------------------------------------------------

def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _is_square(n: int) -> bool:
    r = int(round(math.sqrt(n)))
    return r * r == n


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Reject any parameter that a downstream module would refuse."""
    _need(cfg.kind in KINDS, f"scenario.kind must be one of {KINDS}, got {cfg.kind!r}")
    _need(len(cfg.trials) >= 1 and all(t >= 1 for t in cfg.trials), "scenario.trials must be >= 1")
    _need(cfg.workers >= 0, "scenario.workers must be >= 0")
    _need(cfg.hist_bins >= 1, "scenario.hist_bins must be >= 1")
    _need(all(f in FORMATS for f in cfg.formats), f"scenario.formats must be within {FORMATS}")
    _need(cfg.master_seed >= 0, "scenario.master_seed must be non-negative")
    g, ch = cfg.geometry, cfg.channel
    _need(g.grid_dim >= 3, "geometry.grid_dim must be >= 3")
    _need(g.spacing > 0, "geometry.spacing must be positive")
    _need(0.0 <= g.perturbation <= 1.0, "geometry.perturbation must be in [0, 1]")
    _need(g.density > 0, "geometry.density must be positive")
    _need(ch.alpha > 2, "channel.alpha must exceed 2")
    _need(math.isfinite(ch.mu_db), "channel.mu_db must be finite")
    _need(ch.wavelength > 0 or ch.carrier_hz > 0, "need channel.wavelength or channel.carrier_hz > 0")
    _need(ch.array_area >= 0, "channel.array_area must be non-negative")
    _need(math.sqrt(ch.array_area) <= g.spacing * (1 - g.perturbation),
          "channel.array_area too large: arrays of neighbouring BSs could overlap")
    _need(all(1 <= p <= MAX_PSI for p in ch.psi), f"channel.psi must lie in [1, {MAX_PSI}]")
    _need(ch.psi_rule in PSI_RULES, f"channel.psi_rule must be one of {PSI_RULES}")
    _need(ch.base_psi >= 1, "channel.base_psi must be >= 1")
    _need(ch.precision in ("single", "double"), "channel.precision must be single or double")
    _need(len(ch.tx_offset) == 2 and tuple(ch.tx_offset) != (0, 0)
          and all(abs(o) <= g.grid_dim // 2 for o in ch.tx_offset),
          "channel.tx_offset must be a nonzero in-grid (dx, dy) offset")
    rp = cfg.reuse
    _need(all(p >= 1 for p in rp.p), "reuse.p must be >= 1")
    for pat in rp.patterns:
        _need(pat in PATTERNS, f"reuse.patterns: unknown pattern {pat!r}")
        own = pattern_reuse_factor(pat)
        if pat in REUSE_BASES:
            bad = [p for p in rp.p if p not in (1, own)]
            _need(own in rp.p or not bad,
                  f"pattern {pat} is defined only for p = {own}, reuse.p has {rp.p}")
        if pat == "full":
            _need(1 in rp.p, "pattern full needs p = 1 in reuse.p")
    ro = cfg.routing
    _need(all(n >= 9 and _is_square(n) for n in ro.n_grid), "routing.n_grid entries must be squares >= 9")
    _need(ro.cell_side > 0, "routing.cell_side must be positive")
    _need(ro.pairings >= 1 and ro.link_trials >= 1, "routing.pairings and link_trials must be >= 1")
    _need(ro.long_hop_alpha > 2, "routing.long_hop_alpha must exceed 2")
    _need(ro.power_ratio > 0, "routing.power_ratio must be positive")
    _need(all(1 <= p <= MAX_PSI for p in ro.psi_sweep), "routing.psi_sweep out of range")
    gw = cfg.gateway
    _need(0.0 < gw.rho < 1.0, f"gateway.rho must lie in (0, 1), got {gw.rho}")
    _need(all(0.0 <= b <= 1.0 for b in gw.beta), f"gateway.beta must lie in [0, 1], got {gw.beta}")
    _need(gw.gateway_factor > 0, "gateway.gateway_factor must be positive")
    _need(all(n >= 4 and _is_square(n) for n in gw.n), "gateway.n entries must be perfect squares")
    if cfg.kind == "gateway_grid":
        for n in gw.n:
            side = int(round(math.sqrt(n)))
            for b in gw.beta:
                k = n ** (b / 2)
                _need(abs(k - round(k)) < 1e-9 and side % int(round(k)) == 0,
                      f"n = {n}, beta = {b}: n^(beta/2) must be an integer dividing sqrt(n)")
    bd = cfg.bounds
    _need(all(n >= 3 for n in bd.n_grid), "bounds.n_grid entries must be >= 3")
    _need(bd.alpha > 2 and bd.realization_alpha > 2, "bounds alphas must exceed 2")
    _need(all(n >= 8 for n in bd.realization_n), "bounds.realization_n entries must be >= 8")
    _need(all(p >= 1 for p in bd.realization_psi), "bounds.realization_psi must be >= 1")
    _need(bd.array_side >= 0 and bd.max_size >= 1, "bounds.array_side/max_size out of range")
    if cfg.kind == "strategy_compare" and ch.psi_rule == "fixed":
        _need(len(ch.psi) in (1, len(ro.n_grid)), "channel.psi must have one entry or one per n")
    if cfg.kind in ("fig_reuse", "rate_pdf", "strategy_compare", "gateway_grid"):
        for psi in _psis_in_use(cfg):
            _need(wavelength_for(cfg, psi) > 0, "wavelength must be positive")
    return cfg


def _psis_in_use(cfg: ScenarioConfig) -> list:
    if cfg.kind == "strategy_compare":
        return [psi_for(cfg, n, k) for k, n in enumerate(cfg.routing.n_grid)] + list(cfg.routing.psi_sweep)
    return list(cfg.channel.psi)


# -- defaults --------------------------------------------------------------------

def default_config(kind: str) -> ScenarioConfig:
    """Default configuration of each scenario (the lattice experiment constants)."""
    if kind not in KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    cfg = ScenarioConfig(kind=kind)
    if kind == "fig_reuse":
        cfg.trials = [400]
        cfg.reuse = ReuseParams(p=[1, 2, 4, 9], patterns=["random", "det4", "det9"])
    elif kind == "rate_pdf":
        cfg.trials = [2000, 500]
        cfg.channel.psi = [64, 256]
    elif kind == "cutset_sweep":
        cfg.trials = [10]
    elif kind == "strategy_compare":
        cfg.trials = [1]
        cfg.channel.psi_rule = "sqrt_n"
        cfg.channel.lambda_coupling = True
        cfg.routing.link_trials = 20
        cfg.routing.pairings = 10
    elif kind == "highway_census":
        cfg.trials = [100]
        cfg.routing.n_grid = [400]
        cfg.routing.pairings = 50
    elif kind == "gateway_boundary":
        cfg.trials = [1]
        cfg.gateway.n = [256, 1024, 4096]
    elif kind == "gateway_grid":
        cfg.trials = [5]
        cfg.channel.lambda_coupling = True
        cfg.routing.pairings = 3
    return cfg
