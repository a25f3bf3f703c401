"""Antenna arrays, line-of-sight channel matrices and DoF diagnostics.

Link-budget normalization: a single-antenna link at the reference distance
``c`` in isolation has SNR exactly ``mu``. Antenna-element gains and the
free-space constant are absorbed into ``mu``. Every entry of a channel
matrix has magnitude ``sqrt(mu) * min(1, (d/c) ** (-alpha/2))`` where ``d`` is
the BS-center distance; the phase uses the exact antenna-pair distance.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainWarning, ParameterError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class LinkBudget:
    pathloss_exponent: float = 5.0
    ref_snr_db: float = 0.0
    ref_distance: float = 100.0
    wavelength: float = 0.01
    tx_power: float = 1.0
    noise_psd_bw: float = 1.0

    def __post_init__(self):
        if not self.pathloss_exponent > 2:
            raise ParameterError(f"pathloss exponent must exceed 2, got {self.pathloss_exponent}")
        if not self.wavelength > 0:
            raise ParameterError(f"wavelength must be positive, got {self.wavelength}")
        if not self.ref_distance > 0:
            raise ParameterError(f"reference distance must be positive, got {self.ref_distance}")

    @property
    def mu(self) -> float:
        return 10.0 ** (self.ref_snr_db / 10.0)

    def pathloss(self, d):
        """Bounded power pathloss ``min(1, (d/c)^-alpha)``."""
        d = np.asarray(d, float) / self.ref_distance
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, d ** (-self.pathloss_exponent))

    def amplitude(self, d_center):
        return np.sqrt(self.mu * self.pathloss(d_center))

    def with_wavelength(self, wavelength: float) -> "LinkBudget":
        return LinkBudget(self.pathloss_exponent, self.ref_snr_db, self.ref_distance,
                          wavelength, self.tx_power, self.noise_psd_bw)


def wavelength_from_frequency(f_hz: float) -> float:
    return SPEED_OF_LIGHT / f_hz


def coupled_wavelength(psi: int, base_wavelength: float, base_psi: int) -> float:
    """Wavelength that keeps ``psi * wavelength`` fixed (shrinks as 1/psi)."""
    return base_wavelength * base_psi / psi


@dataclass(frozen=True, eq=False)
class AntennaArray:
    center: tuple
    side: float
    num_antennas: int
    positions: np.ndarray
    seed: int | None = None


def place_antennas(center, side: float, psi: int, seed=None) -> AntennaArray:
    """``psi`` antennas i.i.d. uniform in the axis-aligned square of side ``side``.

    ``seed`` may be an int or an existing :class:`numpy.random.Generator`.
    """
    if int(psi) != psi or psi < 1:
        raise ParameterError(f"need at least one antenna, got {psi}")
    if side < 0:
        raise ParameterError(f"array side must be non-negative, got {side}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    c = np.asarray(center, float)
    pos = c + rng.uniform(-side / 2, side / 2, size=(int(psi), 2))
    return AntennaArray((float(c[0]), float(c[1])), float(side), int(psi), pos,
                        None if isinstance(seed, np.random.Generator) else seed)


def los_phase_factor(d, wavelength: float, dtype=np.complex128) -> np.ndarray:
    """``exp(-j 2 pi d / wavelength)`` with the cycle count reduced mod 1 first.

    Reducing in float64 before the trig keeps the phase accurate even when the
    result is stored in single precision.
    """
    f = np.asarray(d, float) / wavelength
    f = f - np.floor(f)
    real_dtype = np.float32 if dtype == np.complex64 else np.float64
    ph = (2.0 * np.pi * f).astype(real_dtype, copy=False)
    out = np.empty(ph.shape, dtype)
    np.cos(ph, out=out.real)
    np.sin(ph, out=out.imag)
    np.negative(out.imag, out=out.imag)
    return out


def los_gain(d_pair: float, budget: LinkBudget, d_center: float) -> complex:
    if not d_pair > 0:
        raise ParameterError("antenna-pair distance must be positive (coincident antennas)")
    return complex(budget.amplitude(d_center) * los_phase_factor(d_pair, budget.wavelength))


def pair_distances(rx_pos: np.ndarray, tx_pos: np.ndarray) -> np.ndarray:
    """Matrix of distances, rows indexed by receive antennas."""
    dx = rx_pos[:, 0, None] - tx_pos[None, :, 0]
    dy = rx_pos[:, 1, None] - tx_pos[None, :, 1]
    return np.sqrt(dx * dx + dy * dy)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    entries: np.ndarray
    tx_center_distance: float

    @property
    def shape(self):
        return self.entries.shape

    def gram(self) -> np.ndarray:
        """``H H^dagger``."""
        return self.entries @ self.entries.conj().T

    @property
    def T(self) -> "ChannelMatrix":
        return ChannelMatrix(self.entries.T, self.tx_center_distance)


PhaseFn = Callable[[np.ndarray], np.ndarray]


def random_phase(seed) -> PhaseFn:
    """Phase model with i.i.d. uniform phases, ignoring geometry."""
    rng = np.random.default_rng(seed)

    def phase(d):
        return np.exp(-2j * np.pi * rng.random(np.shape(d)))

    return phase


def build_channel_matrix(tx: AntennaArray, rx: AntennaArray, budget: LinkBudget,
                         phase: PhaseFn | None = None) -> ChannelMatrix:
    d_center = float(np.hypot(rx.center[0] - tx.center[0], rx.center[1] - tx.center[1]))
    if d_center < (tx.side + rx.side) / 2:
        warnings.warn("antenna squares overlap; amplitude model assumes separated arrays",
                      DomainWarning, stacklevel=2)
    d = pair_distances(rx.positions, tx.positions)
    if np.any(d == 0):
        raise ParameterError("coincident transmit and receive antennas")
    factors = los_phase_factor(d, budget.wavelength) if phase is None else phase(d)
    return ChannelMatrix(budget.amplitude(d_center) * factors, d_center)


def dof_formula(psi: int, a: float, lam: float, d: float, min_distance: float = 1.0) -> float:
    """Asymptotic spatial DoF of a LoS ``psi x psi`` link (array area ``a``).

    Below ``min_distance`` the first branch is returned with a warning.
    """
    if min(psi, a, lam, d) <= 0:
        raise ParameterError("all DoF inputs must be positive")
    if d < min_distance:
        warnings.warn(f"d={d} is below the formula's distance floor {min_distance}",
                      DomainWarning, stacklevel=2)
    root_a = math.sqrt(a)
    if d <= root_a:
        return float(min(psi, root_a / lam))
    if d <= a / lam:
        return float(min(psi, a / (lam * d)))
    return 1.0


def empirical_dof(H, threshold_fraction: float = 0.1) -> int:
    """Number of singular values at least ``threshold_fraction`` times the largest."""
    if not 0 < threshold_fraction < 1:
        raise ParameterError("threshold_fraction must be in (0, 1)")
    m = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s >= threshold_fraction * s[0]))


def phase_mixing_mean(psi: float, num_samples: int, seed, low: float = 1.0,
                      high: float = 2.0) -> complex:
    """Sample mean of ``exp(-j 2 pi D psi)`` for ``D ~ U[low, high]``."""
    rng = np.random.default_rng(seed)
    d = rng.uniform(low, high, num_samples)
    return complex(np.mean(los_phase_factor(d * psi, 1.0)))


def write_channel_csv(H: ChannelMatrix, path) -> Path:
    """Row-major ``re,im`` pairs, one matrix row per line."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in H.entries:
            w.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])
    return path


def read_channel_csv(path) -> np.ndarray:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return rows[:, 0::2] + 1j * rows[:, 1::2]
