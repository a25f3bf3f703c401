"""Monte-Carlo link rate of the center link of a square BS lattice.

The receiver sits at the lattice center and the transmitter at a fixed
neighbour offset. Every trial redraws all antenna placements, and for random
reuse it also redraws the set of active interferers. Interferer channels are
streamed in column chunks. The chunks are formed in single or double
precision and accumulated into a double-precision covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg.blas as blas

from .channel import LinkBudget, los_phase_factor, pair_distances
from .errors import ParameterError
from .linkrate import (ergodic_lower_bound, exact_interference_constant, link_rate,
                       ring_interference_constant)
from .seeding import rng_for

# sublattice bases (rows are generators) for deterministic reuse, as offsets
# from the desired transmitter in (x, y) lattice steps
REUSE_BASES = {
    "det4": ((2, 1), (0, 2)),
    "det4_square": ((2, 0), (0, 2)),
    "det9": ((3, 0), (0, 3)),
}
PATTERNS = ("full", "random") + tuple(REUSE_BASES)


def pattern_reuse_factor(pattern: str) -> int | None:
    """Reuse factor a deterministic pattern implies (None when p is free)."""
    if pattern in REUSE_BASES:
        B = np.asarray(REUSE_BASES[pattern])
        return int(round(abs(np.linalg.det(B))))
    if pattern == "full":
        return 1
    if pattern == "random":
        return None
    raise ParameterError(f"unknown reuse pattern {pattern!r}")


def in_sublattice(offsets: np.ndarray, basis) -> np.ndarray:
    """Whether each integer offset lies in the lattice spanned by ``basis`` rows."""
    B = np.asarray(basis, dtype=np.int64)
    det = int(B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])
    if det == 0:
        raise ParameterError("degenerate sublattice basis")
    # coefficients a with a @ B = v  <=>  a = v @ adj(B) / det
    adj = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]], dtype=np.int64)
    num = np.asarray(offsets, dtype=np.int64) @ adj
    return np.all(num % det == 0, axis=-1)


def _phase_block(rx_ant, ant, wavelength, dtype) -> np.ndarray:
    """In-place version of ``los_phase_factor(pair_distances(rx_ant, ant))``."""
    d = np.subtract.outer(rx_ant[:, 0], ant[:, 0])
    dy = np.subtract.outer(rx_ant[:, 1], ant[:, 1])
    np.multiply(d, d, out=d)
    np.multiply(dy, dy, out=dy)
    d += dy
    np.sqrt(d, out=d)
    d *= 1.0 / wavelength
    np.floor(d, out=dy)
    d -= dy
    d *= -2.0 * np.pi
    real = np.float32 if dtype == np.complex64 else np.float64
    ph = d.astype(real, copy=False)
    out = np.empty(ph.shape, dtype)
    np.cos(ph, out=out.real)
    np.sin(ph, out=out.imag)
    return out


@dataclass(frozen=True)
class LinkSample:
    rate: float
    ergodic_ring: float
    ergodic_exact: float
    n_active: int


@dataclass(frozen=True)
class LatticeLink:
    grid_dim: int = 23
    spacing: float = 100.0
    budget: LinkBudget = field(default_factory=LinkBudget)
    array_side: float = 8.0
    psi: int = 64
    tx_offset: tuple = (-1, 0)
    perturbation: float = 0.0
    precision: str = "single"
    P: float = 1.0
    chunk_columns: int = 2048

    def __post_init__(self):
        if self.grid_dim < 2:
            raise ParameterError("grid_dim must be >= 2")
        if int(self.psi) != self.psi or self.psi < 1:
            raise ParameterError(f"psi must be a positive integer, got {self.psi}")
        if self.precision not in ("single", "double"):
            raise ParameterError("precision must be 'single' or 'double'")
        if not 0.0 <= self.perturbation <= 1.0:
            raise ParameterError("perturbation must be in [0, 1]")
        if self.array_side > self.spacing * (1.0 - self.perturbation):
            # arrays of distinct BSs could overlap
            raise ParameterError("array side too large for the lattice spacing")
        ij = self.rx_ij + np.asarray(self.tx_offset)
        if tuple(self.tx_offset) == (0, 0) or np.any(ij < 0) or np.any(ij >= self.grid_dim):
            raise ParameterError(f"transmitter offset {self.tx_offset} leaves the grid")

    @property
    def n_bs(self) -> int:
        return self.grid_dim ** 2

    @property
    def rx_ij(self) -> np.ndarray:
        return np.array([self.grid_dim // 2, self.grid_dim // 2])

    @property
    def rx_index(self) -> int:
        i, j = self.rx_ij
        return int(i * self.grid_dim + j)

    @property
    def tx_index(self) -> int:
        i, j = self.rx_ij + np.asarray(self.tx_offset)
        return int(i * self.grid_dim + j)

    def grid_ij(self) -> np.ndarray:
        idx = np.arange(self.grid_dim)
        ii, jj = np.meshgrid(idx, idx, indexing="ij")
        return np.stack([ii.ravel(), jj.ravel()], axis=1)

    def active_mask(self, pattern: str, p: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """Interferers transmitting alongside the desired link (excludes TX and RX)."""
        if int(p) != p or p < 1:
            raise ParameterError(f"reuse factor must be a positive integer, got {p}")
        n = self.n_bs
        if p == 1 or pattern == "full":
            if pattern == "full" and p != 1:
                raise ParameterError("full reuse means p = 1")
            mask = np.ones(n, bool)
        elif pattern == "random":
            if rng is None:
                raise ParameterError("random reuse needs a generator")
            mask = rng.random(n) < 1.0 / p
        elif pattern in REUSE_BASES:
            if pattern_reuse_factor(pattern) != p:
                raise ParameterError(f"pattern {pattern} only supports p = {pattern_reuse_factor(pattern)}")
            off = self.grid_ij() - (self.rx_ij + np.asarray(self.tx_offset))
            mask = in_sublattice(off, REUSE_BASES[pattern])
        else:
            raise ParameterError(f"unknown reuse pattern {pattern!r}")
        mask[[self.rx_index, self.tx_index]] = False
        return mask

    def centers(self, rng: np.random.Generator) -> np.ndarray:
        ij = self.grid_ij().astype(float)
        c = (ij + 0.5) * self.spacing
        if self.perturbation > 0:
            half = 0.5 * self.perturbation * self.spacing
            c = c + rng.uniform(-half, half, size=c.shape)
        return c

    def _covariance(self, rx_ant, ant, amp, scale) -> np.ndarray:
        """``I + scale * sum_k amp_k^2 h_k h_k^dagger`` over interferer antennas ``ant``."""
        psi = len(rx_ant)
        dtype = np.complex64 if self.precision == "single" else np.complex128
        herk = blas.cherk if self.precision == "single" else blas.zherk
        acc = np.zeros((psi, psi), np.complex128)
        lam = self.budget.wavelength
        step = max(self.chunk_columns, psi)
        for s in range(0, len(ant), step):
            G = _phase_block(rx_ant, ant[s:s + step], lam, dtype)
            G *= amp[s:s + step].astype(G.real.dtype)
            # herk with trans=0 gives the upper triangle of G G^H
            acc += herk(1.0, G, lower=0)
        acc = np.triu(acc) + np.triu(acc, 1).conj().T
        acc *= scale
        acc[np.diag_indices(psi)] += 1.0
        return acc

    def sample(self, seed: int, pattern: str = "full", p: int = 1,
               with_bounds: bool = False) -> LinkSample:
        """One trial: rate of the desired link given active interferers."""
        rng = np.random.default_rng(seed)
        centers = self.centers(rng)
        half = self.array_side / 2
        offsets = rng.uniform(-half, half, size=(self.n_bs, self.psi, 2))
        mask = self.active_mask(pattern, p, rng)
        rx, tx = self.rx_index, self.tx_index
        rx_ant = centers[rx] + offsets[rx]
        tx_ant = centers[tx] + offsets[tx]
        amp_tx = float(self.budget.amplitude(np.linalg.norm(centers[tx] - centers[rx])))
        H = amp_tx * los_phase_factor(pair_distances(rx_ant, tx_ant), self.budget.wavelength)
        idx = np.nonzero(mask)[0]
        d_int = np.linalg.norm(centers[idx] - centers[rx], axis=1)
        ant = (centers[idx, None, :] + offsets[idx]).reshape(-1, 2)
        amp = np.repeat(self.budget.amplitude(d_int), self.psi)
        R = self._covariance(rx_ant, ant, amp, p * self.P / self.psi)
        rate = link_rate(H, R, self.P, self.psi, p)
        ring = exact = float("nan")
        if with_bounds:
            q_ring = ring_interference_constant(self.budget.pathloss_exponent,
                                                self.P * self.budget.mu, num_rings=self.grid_dim).q
            ring = ergodic_lower_bound(H, q_ring, self.P, self.psi)
            q_exact = exact_interference_constant(d_int, self.budget, self.P)
            exact = ergodic_lower_bound(H, q_exact, self.P, self.psi)
        return LinkSample(rate, ring, exact, int(mask.sum()))


def run_trials(link: LatticeLink, seeds, pattern: str = "full", p: int = 1,
               with_bounds: bool = False, workers: int = 1) -> list:
    """Samples for ``seeds`` in order; ``workers > 1`` uses a process pool."""
    seeds = [int(s) for s in seeds]
    if workers <= 1 or len(seeds) < 2:
        return [link.sample(s, pattern, p, with_bounds) for s in seeds]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(link.sample, s, pattern, p, with_bounds) for s in seeds]
        return [f.result() for f in futs]
