"""Achievable MIMO link rates under interference.

All rates are in bps/Hz (log base 2). Transmitters spread power ``P`` equally
over their ``psi`` antennas; no waterfilling is performed anywhere here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .channel import ChannelMatrix
from .errors import NumericalError, ParameterError


def _as_array(H) -> np.ndarray:
    return H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)


def cholesky_lower(M: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(M, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"matrix is not positive definite: {exc}") from exc


def logdet2_hpd(M: np.ndarray) -> float:
    """``log2 det M`` for a Hermitian positive-definite ``M`` via Cholesky."""
    L = cholesky_lower(M)
    return float(2.0 * np.sum(np.log2(np.abs(np.diag(L)).astype(float))))


def logdet2_identity_plus(A: np.ndarray, scale: float = 1.0) -> float:
    """``log2 det(I + scale * A A^dagger)`` using the smaller Gram matrix."""
    A = np.asarray(A)
    G = A @ A.conj().T if A.shape[0] <= A.shape[1] else A.conj().T @ A
    M = scale * G.astype(np.complex128)
    M[np.diag_indices_from(M)] += 1.0
    return logdet2_hpd(M)


@dataclass(eq=False)
class InterferenceField:
    interferer_channels: Sequence
    per_antenna_power: float

    def stacked(self) -> np.ndarray:
        """All interferer matrices side by side: ``[H1, H2, ...]``."""
        return np.hstack([_as_array(h) for h in self.interferer_channels])

    def distances(self) -> np.ndarray:
        return np.array([h.tx_center_distance for h in self.interferer_channels])


def covariance_from_stack(G: np.ndarray, per_antenna_power: float, psi_rx: int | None = None) -> np.ndarray:
    """``I + per_antenna_power * G G^dagger`` accumulated in double precision."""
    G = np.asarray(G)
    n = G.shape[0] if psi_rx is None else psi_rx
    R = np.eye(n, dtype=np.complex128)
    if G.size:
        R += per_antenna_power * (G @ G.conj().T).astype(np.complex128)
    return R


def interference_covariance(field: InterferenceField, psi_rx: int | None = None) -> np.ndarray:
    """Noise-plus-interference covariance ``I + (P/psi) sum_i H_i H_i^dagger``."""
    mats = [_as_array(h) for h in field.interferer_channels]
    if not mats:
        if psi_rx is None:
            raise ParameterError("psi_rx is required when there are no interferers")
        return np.eye(psi_rx, dtype=np.complex128)
    rows = {m.shape[0] for m in mats}
    if len(rows) != 1 or (psi_rx is not None and rows != {psi_rx}):
        raise ParameterError(f"interferer matrices disagree on receive dimension: {sorted(rows)}")
    R = covariance_from_stack(np.hstack(mats), field.per_antenna_power)
    return 0.5 * (R + R.conj().T)


def link_rate(H, R: np.ndarray, P: float, psi: int, p: int = 1) -> float:
    """Rate ``(1/p) log2 det(I + (p P / psi) R^-1 H H^dagger)`` with reuse factor ``p``.

    ``R`` is whitened through its Cholesky factor; a non-PD ``R`` raises
    :class:`NumericalError` instead of being regularized.
    """
    if p < 1:
        raise ParameterError(f"reuse factor must be >= 1, got {p}")
    A = _as_array(H)
    if not np.any(A):
        return 0.0
    L = cholesky_lower(np.asarray(R, dtype=np.complex128))
    W = scipy.linalg.solve_triangular(L, A.astype(np.complex128), lower=True)
    return logdet2_identity_plus(W, p * P / psi) / p


def ergodic_lower_bound(H, q, P: float, psi: int) -> float:
    """``log2 det(I + P/(q psi) H H^dagger)`` for an averaged covariance ``q I``."""
    if np.ndim(q) == 2:
        q_mat = np.asarray(q)
        q = float(np.real(q_mat[0, 0]))
        if not np.allclose(q_mat, q * np.eye(len(q_mat))):
            raise ParameterError("expected covariance must be a multiple of the identity")
    q = float(q)
    if q < 1:
        raise ParameterError(f"averaged covariance scale must be >= 1, got {q}")
    if math.isinf(q):
        return 0.0
    return logdet2_identity_plus(_as_array(H), P / (q * psi))


@dataclass(frozen=True)
class RingConstant:
    q: float
    tail_bound: float
    converged: bool

    def __float__(self):
        return self.q


def ring_tail_bound(alpha: float, num_rings: int, P: float = 1.0, c: float = 1.0) -> float:
    """Upper bound on the rings beyond ``num_rings`` (integral test)."""
    N = float(num_rings)
    s = N ** (1 - alpha) + N ** (2 - alpha) / (alpha - 2) + N ** (-alpha) + N ** (1 - alpha) / (alpha - 1)
    return 8.0 * P * c ** (-alpha) * s


def ring_interference_constant(alpha: float, P: float = 1.0, num_rings: int = 64,
                               c: float = 1.0, tol: float = 1e-9) -> RingConstant:
    """Interference scale ``q = 1 + 8P + 8 c^-alpha P sum_{i=2}^{N} i (i-1)^-alpha``.

    The first ring of at most 8 lattice neighbours contributes at most ``8P``
    (bounded pathloss); ring ``i`` holds at most ``8i`` interferers at distance
    at least ``(i-1) c``. Distances are in units of the lattice spacing, so
    ``c`` is 1 unless a different unit is used.
    """
    if not alpha > 2:
        raise ParameterError(f"ring sum diverges for alpha <= 2 (got {alpha})")
    if num_rings < 1:
        raise ParameterError("num_rings must be >= 1")
    i = np.arange(2, int(num_rings) + 1, dtype=float)
    partial = float(np.sum(i * (i - 1) ** (-alpha)))
    q = 1.0 + 8.0 * P + 8.0 * c ** (-alpha) * P * partial
    tail = ring_tail_bound(alpha, num_rings, P, c)
    return RingConstant(q, tail, tail < tol)


def exact_interference_constant(distances, budget, P: float = 1.0) -> float:
    """Averaged covariance scale ``1 + P sum_i mu l(d_i)`` for a known interferer set."""
    return 1.0 + P * float(np.sum(budget.mu * budget.pathloss(np.asarray(distances))))


@dataclass(frozen=True)
class BeamformingRate:
    exact: float
    trace_upper: float


def beamforming_rate(H, P: float) -> BeamformingRate:
    """Single-stream eigen-beamforming rate and its trace upper bound."""
    A = _as_array(H)
    G = A @ A.conj().T
    lam_max = float(np.max(np.linalg.eigvalsh(G)))
    tr = float(np.real(np.trace(G)))
    return BeamformingRate(math.log2(1 + P * lam_max), math.log2(1 + P * tr))


def long_hop_range(P: float, P0: float, psi: int, alpha: float) -> float:
    """Longest hop, in units of the reference distance, keeping received power at ``P0``."""
    if min(P, P0, psi, alpha) <= 0:
        raise ParameterError("long-hop range inputs must be positive")
    return (P / P0) ** (1.0 / alpha) * psi ** (2.0 / alpha)


@dataclass(frozen=True)
class SpectralRadiusReport:
    lambda_max_numeric: float
    heuristic_bound: float
    alpha_valid: bool
    rigorous: bool = False


def spectral_radius_diagnostic(field: InterferenceField, alpha: float, d_max: float | None = None,
                               a: float | None = None, lam: float | None = None,
                               P: float = 1.0, psi_rx: int | None = None) -> SpectralRadiusReport:
    """Numeric spectral radius of ``R`` next to a heuristic estimate of it.

    The heuristic assumes every interferer spreads its channel energy evenly
    over ``a/(lam d)`` significant eigenvalues, with ``d_max = a/(lam psi)`` the
    full-DoF range, giving ``1 + P sum_i mu l(d_i) d_i / d_max``. That premise
    is a conjecture; the report is always marked non-rigorous and the two
    numbers are not compared here. The estimate stays finite only for alpha > 3.
    """
    mats = [_as_array(h) for h in field.interferer_channels]
    if not mats:
        return SpectralRadiusReport(1.0, 1.0, alpha > 3)
    if d_max is None:
        if a is None or lam is None:
            raise ParameterError("give d_max or both a and lam")
        d_max = a / (lam * mats[0].shape[1])
    R = interference_covariance(field, psi_rx)
    lam_num = float(np.max(np.linalg.eigvalsh(R)))
    bound = 1.0
    for m, h in zip(mats, field.interferer_channels):
        energy = float(np.mean(np.abs(m) ** 2))  # mu * l(d): amplitude is shared per link
        d = getattr(h, "tx_center_distance", d_max)
        bound += P * energy * d / d_max
    return SpectralRadiusReport(lam_num, bound, alpha > 3)


@dataclass(frozen=True)
class RateSample:
    rate_bps_hz: float
    reuse_factor: int = 1
    seed: int | None = None
    psi: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.rate_bps_hz) and self.rate_bps_hz >= 0):
            raise ParameterError(f"rate must be finite and non-negative, got {self.rate_bps_hz}")
        if self.reuse_factor < 1:
            raise ParameterError("reuse factor must be >= 1")


def write_rate_csv(samples: Sequence[RateSample], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "psi", "p", "rate_bps_hz"])
        for s in samples:
            w.writerow([s.seed, s.psi, s.reuse_factor, f"{s.rate_bps_hz:.12g}"])
    return path
