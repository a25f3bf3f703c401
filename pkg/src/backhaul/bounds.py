"""Cut-set upper bounds on network throughput and closed-form scaling laws.

The numeric bound works on a realization rescaled to unit BS density, with
one vertical cut through the box center. BSs left of the cut form a
distributed transmitter and BSs right of it a distributed receiver. Three
successively looser values are computed:

* ``exact_logdet``  ``log2 det(I + n P H H^dagger)`` (input covariance ``n P I``),
* ``hadamard_bound``  the same with only the diagonal of ``H H^dagger`` kept,
* ``strip_bound``  each diagonal entry replaced by the common cap of its
  exponential strip.

Closed-form evaluators return the dominant term of each asymptotic law with
natural logarithms and no hidden constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .channel import LinkBudget, los_phase_factor, pair_distances
from .errors import DomainError, ParameterError
from .geometry import NetworkRealization, StripDecomposition, strip_decompose
from .linkrate import logdet2_hpd

MAX_MATRIX_SIZE = 4096


@dataclass(frozen=True)
class CutSetResult:
    exact_logdet: float
    hadamard_bound: float
    strip_bound: float
    n: float
    psi: int
    n_tx: int = 0
    n_rx: int = 0


def unit_budget(alpha: float, ref_snr_db: float = 0.0, wavelength: float = 1e-3) -> LinkBudget:
    """Link budget in unit-density network coordinates (reference distance 1)."""
    return LinkBudget(alpha, ref_snr_db, 1.0, wavelength)


def logdet_and_hadamard(H_eff: np.ndarray, n: float, P: float = 1.0) -> tuple[float, float]:
    G = H_eff @ H_eff.conj().T
    M = n * P * G
    M[np.diag_indices_from(M)] += 1.0
    exact = logdet2_hpd(M) if M.size else 0.0
    hadamard = float(np.sum(np.log2(1.0 + n * P * np.real(np.diag(G)))))
    return exact, hadamard


def strip_caps(decomp: StripDecomposition, budget: LinkBudget, psi: int, n_tx: int) -> np.ndarray:
    """Per-BS cap on ``(H H^dagger)_ii``: ``psi * n_tx * mu * l(strip min distance)``."""
    l = budget.pathloss(decomp.strip_min_distance)
    return psi * n_tx * budget.mu * l[decomp.strip_membership - 1]


def cutset_numeric(realization: NetworkRealization, psi: int, budget: LinkBudget | None = None,
                   seed=None, array_side: float = 0.05, phase: str = "los",
                   P: float = 1.0, max_size: int = MAX_MATRIX_SIZE,
                   return_matrix: bool = False):
    """Evaluate the three cut-set bound levels on one realization.

    Coordinates are rescaled to unit density; ``budget`` and ``array_side``
    are interpreted in those units. ``phase`` is ``"los"`` or ``"random"``
    (i.i.d. uniform phases); the strip bound depends only on magnitudes.
    """
    if psi < 1:
        raise ParameterError("psi must be >= 1")
    if realization.n_bs * psi > max_size:
        raise ParameterError(
            f"n_bs * psi = {realization.n_bs * psi} exceeds the dense-matrix cap {max_size}; "
            "reduce n or psi, or use strip_bound_only")
    budget = budget or unit_budget(5.0)
    decomp = strip_decompose(realization)
    pos = realization.bs_positions * decomp.scale
    tx_idx = np.nonzero(decomp.side < 0)[0]
    rx_idx = np.nonzero(decomp.side > 0)[0]
    if len(tx_idx) == 0 or len(rx_idx) == 0:
        raise ParameterError("both sides of the cut need at least one BS")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-array_side / 2, array_side / 2, size=(realization.n_bs, psi, 2))
    ant = pos[:, None, :] + offsets
    tx_ant = ant[tx_idx].reshape(-1, 2)
    rx_ant = ant[rx_idx].reshape(-1, 2)
    d_center = pair_distances(pos[rx_idx], pos[tx_idx])
    amp = np.repeat(np.repeat(budget.amplitude(d_center), psi, axis=0), psi, axis=1)
    if phase == "los":
        d = pair_distances(rx_ant, tx_ant)
        if np.any(d == 0):
            raise ParameterError("coincident antennas across the cut")
        factors = los_phase_factor(d, budget.wavelength)
    elif phase == "random":
        factors = np.exp(-2j * np.pi * rng.random(amp.shape))
    else:
        raise ParameterError(f"unknown phase model {phase!r}")
    H = amp * factors
    exact, hadamard = logdet_and_hadamard(H, decomp.n, P)
    strip = strip_bound_only(realization, psi, budget, P, decomp=decomp)
    res = CutSetResult(exact, hadamard, strip, decomp.n, psi, len(tx_idx), len(rx_idx))
    return (res, H) if return_matrix else res


def strip_bound_only(realization: NetworkRealization, psi: int, budget: LinkBudget | None = None,
                     P: float = 1.0, decomp: StripDecomposition | None = None) -> float:
    """Strip-level relaxation alone; needs no matrices, so any ``n`` is allowed."""
    budget = budget or unit_budget(5.0)
    decomp = decomp or strip_decompose(realization)
    rx = decomp.side > 0
    n_tx = int(np.sum(~rx))
    caps = strip_caps(decomp, budget, psi, n_tx)[rx]
    return float(psi * np.sum(np.log2(1.0 + decomp.n * P * caps)))


# -- closed forms ----------------------------------------------------------------

def kappa(n: float, psi: float, alpha: float) -> float:
    return alpha / 2.0 - 2.0 - math.log(psi) / math.log(n)


def _check_cutset_domain(n: float, psi: float, alpha: float) -> None:
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    if psi < 1:
        raise ParameterError(f"psi must be >= 1, got {psi}")
    if kappa(n, psi, alpha) <= 0:
        raise DomainError(
            f"pathloss condition alpha > 2*(2 + log_n(psi)) violated: alpha={alpha}, "
            f"threshold={2 * (2 + math.log(psi) / math.log(n)):.6g}")


def eval_cs_lemma2(n: float, psi: float, alpha: float) -> float:
    """Dominant term ``sqrt(n) n^(2/alpha) psi^(1/alpha) ln n`` of the strip sum."""
    _check_cutset_domain(n, psi, alpha)
    return math.sqrt(n) * n ** (2.0 / alpha) * psi ** (1.0 / alpha) * math.log(n)


def eval_throughput_ub(n: float, psi: float, alpha: float) -> float:
    """Throughput upper-bound law: ``(e - 1) psi`` times :func:`eval_cs_lemma2`."""
    return (math.e - 1.0) * psi * eval_cs_lemma2(n, psi, alpha)


def cs_series(n: float, psi: float, alpha: float, P: float = 1.0) -> float:
    """Direct summation of the strip series over ``i = 1 .. floor(ln(sqrt(n)/2))``.

    ``sum_i (n / e^i) ln(1 + P n^(2 - alpha/2) psi 2^alpha e^(i alpha))``,
    evaluated in log space to stay finite for large ``i alpha``.
    """
    k = int(math.floor(math.log(math.sqrt(n) / 2.0)))
    base = math.log(P) + (2 - alpha / 2) * math.log(n) + math.log(psi) + alpha * math.log(2)
    total = 0.0
    for i in range(1, k + 1):
        x = base + i * alpha
        log_term = x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
        total += n * math.exp(-i) * log_term
    return total


def antenna_requirement_exponent(alpha: float) -> float:
    """Exponent of ``n`` in the per-BS antenna requirement, ignoring the log factor."""
    return (0.5 - 2.0 / alpha) * alpha / (1.0 + alpha)


def eval_antenna_requirement(n: float, alpha: float) -> float:
    """Antennas per BS needed for a non-vanishing per-connection rate."""
    if not alpha > 4:
        raise DomainError(f"antenna requirement needs alpha > 4, got {alpha}")
    if n <= 1:
        raise ParameterError("n must exceed 1")
    return (n ** (0.5 - 2.0 / alpha) / math.log(n)) ** (alpha / (1.0 + alpha))


def eval_long_hop_rate_ub(n: float, psi: float, alpha: float, epsilon: float) -> float:
    """Per-connection rate law ``psi^(2/alpha) / n^(1/2 - epsilon)`` for long hops."""
    if not 0 < epsilon < 0.5:
        raise ParameterError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if not alpha > 2:
        raise DomainError(f"long-hop law needs alpha > 2, got {alpha}")
    return psi ** (2.0 / alpha) / n ** (0.5 - epsilon)


class FormulaKind(str, Enum):
    CS = "cs"
    THROUGHPUT = "throughput"
    ANTENNAS = "antennas"
    LONG_HOP = "long_hop"


@dataclass(frozen=True)
class ScalingFormula:
    kind: FormulaKind
    alpha: float
    epsilon: float | None = None

    def __call__(self, n: float, psi: float = 1.0) -> float:
        if self.kind is FormulaKind.CS:
            return eval_cs_lemma2(n, psi, self.alpha)
        if self.kind is FormulaKind.THROUGHPUT:
            return eval_throughput_ub(n, psi, self.alpha)
        if self.kind is FormulaKind.ANTENNAS:
            return eval_antenna_requirement(n, self.alpha)
        return eval_long_hop_rate_ub(n, psi, self.alpha, self.epsilon)


CUTSET_HEADER = ["n", "psi", "alpha", "exact", "hadamard", "strip", "cs_formula", "t_ub_formula"]


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.12g}"


def write_cutset_csv(rows, path) -> Path:
    """``rows`` are mappings keyed by :data:`CUTSET_HEADER`; missing values are left blank."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CUTSET_HEADER)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in CUTSET_HEADER])
    return path
