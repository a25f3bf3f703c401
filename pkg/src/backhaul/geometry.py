"""Base-station point patterns, source-destination pairing and strip partitions.

Coordinates are in meters. For Poisson networks the box side is ``sqrt(n)`` in
units where the density is one BS per unit area; :func:`strip_decompose`
rescales any realization to unit density before partitioning.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .seeding import derive_seed


@dataclass(frozen=True)
class Box:
    side_length: float

    def __post_init__(self):
        if not (self.side_length > 0 and math.isfinite(self.side_length)):
            raise ParameterError(f"box side must be positive, got {self.side_length}")

    @property
    def area(self) -> float:
        return self.side_length**2

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        return np.all((points >= 0) & (points <= self.side_length), axis=-1)


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    """BS positions inside a box together with a source -> destination map.

    ``pairing[i]`` is the destination of the connection sourced at BS ``i``.
    """

    box: Box
    bs_positions: np.ndarray
    pairing: np.ndarray
    density: float
    seed: int | None = None
    kind: str = "ppp"
    grid_dim: int | None = None
    spacing: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "bs_positions", _frozen(np.asarray(self.bs_positions, float).reshape(-1, 2)))
        object.__setattr__(self, "pairing", _frozen(np.asarray(self.pairing, np.int64)))
        if len(self.pairing) != len(self.bs_positions):
            raise ParameterError("pairing length must equal the number of BSs")
        if not np.all(self.box.contains(self.bs_positions)):
            raise ParameterError("every BS must lie inside the box")
        if len(self.pairing) and not is_derangement(self.pairing):
            raise ParameterError("pairing must be a bijection without fixed points")

    @property
    def n_bs(self) -> int:
        return len(self.bs_positions)

    @property
    def n(self) -> float:
        """Network size parameter: expected BS count ``density * area``."""
        return self.density * self.box.area

    @property
    def ref_distance(self) -> float:
        """Lattice-equivalent spacing ``density ** -1/2``."""
        return 1.0 / math.sqrt(self.density)

    def separations(self) -> np.ndarray:
        """Euclidean source-destination distance for every connection."""
        return np.linalg.norm(self.bs_positions - self.bs_positions[self.pairing], axis=1)

    def to_bytes(self) -> bytes:
        return self.bs_positions.tobytes() + self.pairing.tobytes()


def sample_ppp(box: Box, density: float, seed: int) -> np.ndarray:
    """Homogeneous Poisson point process in ``box``; returns an ``(N, 2)`` array."""
    if not (density > 0 and math.isfinite(density)):
        raise ParameterError(f"density must be positive, got {density}")
    rng = np.random.default_rng(seed)
    count = rng.poisson(density * box.area)
    return rng.uniform(0.0, box.side_length, size=(count, 2))


def sample_perturbed_lattice(grid_dim: int, spacing: float, seed: int,
                             perturbation: float = 1.0) -> np.ndarray:
    """One BS per lattice cell, uniform in a centered sub-square of the cell.

    ``perturbation`` is the sub-square side as a fraction of ``spacing``: 1 spreads
    the BS over the whole cell, 0 puts it at the cell center. BS ``(i, j)`` is
    row ``i * grid_dim + j`` of the result and has x-cell ``i``, y-cell ``j``.
    """
    if int(grid_dim) != grid_dim or grid_dim < 1:
        raise ParameterError(f"grid_dim must be a positive integer, got {grid_dim}")
    if not spacing > 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    if not 0.0 <= perturbation <= 1.0:
        raise ParameterError(f"perturbation must be in [0, 1], got {perturbation}")
    grid_dim = int(grid_dim)
    idx = np.arange(grid_dim)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    centers = (np.stack([ii.ravel(), jj.ravel()], axis=1) + 0.5) * spacing
    if perturbation == 0.0:
        return centers
    rng = np.random.default_rng(seed)
    half = 0.5 * perturbation * spacing
    pts = centers + rng.uniform(-half, half, size=centers.shape)
    # keep points on the half-open cell even after rounding
    lo = (np.stack([ii.ravel(), jj.ravel()], axis=1)) * spacing
    return np.clip(pts, lo, np.nextafter(lo + spacing, lo))


def is_derangement(perm) -> bool:
    perm = np.asarray(perm)
    n = len(perm)
    return (np.array_equal(np.sort(perm), np.arange(n))
            and not np.any(perm == np.arange(n)))


def pair_sources_destinations(n_bs: int, seed: int) -> np.ndarray:
    """Uniformly random fixed-point-free permutation (rejection sampling)."""
    if n_bs < 2:
        raise ParameterError(f"need at least 2 BSs to pair, got {n_bs}")
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(n_bs)
        if not np.any(perm == np.arange(n_bs)):
            return perm


def make_ppp_network(side_length: float, density: float, seed: int) -> NetworkRealization:
    box = Box(side_length)
    pos = sample_ppp(box, density, seed)
    if len(pos) < 2:
        raise ParameterError("PPP realization has fewer than 2 BSs; enlarge the box")
    pairing = pair_sources_destinations(len(pos), derive_seed(seed, 1))
    return NetworkRealization(box, pos, pairing, density, seed, kind="ppp")


def make_lattice_network(grid_dim: int, spacing: float, seed: int,
                         perturbation: float = 1.0) -> NetworkRealization:
    pos = sample_perturbed_lattice(grid_dim, spacing, seed, perturbation)
    if len(pos) < 2:
        raise ParameterError("lattice needs at least 2 BSs")
    pairing = pair_sources_destinations(len(pos), derive_seed(seed, 1))
    return NetworkRealization(Box(grid_dim * spacing), pos, pairing, 1.0 / spacing**2,
                              seed, kind="lattice", grid_dim=int(grid_dim), spacing=float(spacing))


# -- exponential stripping ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class StripDecomposition:
    """Vertical strips on both sides of the center cut, in unit-density units.

    ``strip_membership[b]`` is the 1-based strip of BS ``b``; strips shrink
    geometrically toward the cut and the last one touches it.
    ``side[b]`` is -1 left of the cut and +1 on or right of it.
    """

    n: float
    num_strips: int
    strip_min_distance: np.ndarray
    strip_membership: np.ndarray
    side: np.ndarray
    distance_to_cut: np.ndarray
    scale: float = 1.0

    def members(self, strip: int, side: int) -> np.ndarray:
        return np.nonzero((self.strip_membership == strip) & (self.side == side))[0]


def num_strips_for(n: float) -> int:
    return int(math.floor(math.log(math.sqrt(n) / 2.0))) + 1


def strip_min_distances(n: float) -> np.ndarray:
    """Minimum distance from the cut of each strip; the last entry is 0."""
    k = num_strips_for(n)
    d = np.array([math.sqrt(n) / (2.0 * math.exp(i)) for i in range(1, k + 1)])
    d[-1] = 0.0
    return d


def strip_decompose(realization: NetworkRealization) -> StripDecomposition:
    scale = math.sqrt(realization.density)
    side_len = realization.box.side_length * scale
    if side_len < 2.0:
        raise ParameterError(
            f"box side {side_len:.4g} (unit density) is below 2; no strip fits")
    n = side_len**2
    x = realization.bs_positions[:, 0] * scale
    cut = side_len / 2.0
    dist = np.abs(x - cut)
    mins = strip_min_distances(n)
    k = len(mins)
    membership = np.full(len(x), k, dtype=np.int64)
    for i in range(k - 1, 0, -1):
        membership[dist >= mins[i - 1]] = i
    side = np.where(x < cut, -1, 1)
    return StripDecomposition(n, k, _frozen(mins), _frozen(membership), _frozen(side),
                              _frozen(dist), scale)


# -- concentration -------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationReport:
    upper_violation_freq: float
    lower_violation_freq: float
    chernoff_upper: float
    chernoff_lower: float
    trials: int


def chernoff_upper(mean: float) -> float:
    """Bound on P(N >= 2 * mean) for N ~ Poisson(mean)."""
    return (math.e / 4.0) ** mean


def chernoff_lower(mean: float) -> float:
    """Bound on P(N <= mean / 2) for N ~ Poisson(mean)."""
    return (2.0 / math.e) ** (mean / 2.0)


def check_concentration(counts, area: float, density: float) -> ConcentrationReport:
    counts = np.asarray(counts)
    if counts.size == 0:
        raise ParameterError("no counts supplied")
    mean = area * density
    return ConcentrationReport(
        upper_violation_freq=float(np.mean(counts >= 2 * mean)),
        lower_violation_freq=float(np.mean(counts <= mean / 2)),
        chernoff_upper=chernoff_upper(mean),
        chernoff_lower=chernoff_lower(mean),
        trials=int(counts.size),
    )


def ppp_counts(box: Box, density: float, trials: int, seed: int) -> np.ndarray:
    """BS counts of ``trials`` independent PPP realizations."""
    return np.array([len(sample_ppp(box, density, derive_seed(seed, t))) for t in range(trials)])


# -- CSV -----------------------------------------------------------------------

def write_realization_csv(realization: NetworkRealization, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "dest_index"])
        for i, ((x, y), d) in enumerate(zip(realization.bs_positions, realization.pairing)):
            w.writerow([i, f"{x:.17g}", f"{y:.17g}", int(d)])
    return path


def read_realization_csv(path, side_length: float, density: float, **kw) -> NetworkRealization:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    pos = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    pairing = np.array([int(r["dest_index"]) for r in rows])
    return NetworkRealization(Box(side_length), pos, pairing, density, **kw)
