import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from backhaul import channel as ch
from backhaul import linkrate as lr
from backhaul.errors import NumericalError, ParameterError


def complex_mats(rows, cols):
    elems = st.floats(-3, 3, allow_nan=False)
    return st.tuples(arrays(float, (rows, cols), elements=elems),
                     arrays(float, (rows, cols), elements=elems)).map(lambda t: t[0] + 1j * t[1])


def rate_oracle(H, R, P, psi, p=1):
    """Textbook evaluation with an explicit inverse and eigenvalues."""
    M = (p * P / psi) * np.linalg.inv(R) @ H @ H.conj().T
    eig = np.linalg.eigvals(np.eye(len(R)) + M)
    return float(np.sum(np.log2(np.abs(eig)))) / p


def test_covariance_examples():
    assert np.array_equal(lr.interference_covariance(lr.InterferenceField([], 1.0), psi_rx=3), np.eye(3))
    z = lr.interference_covariance(lr.InterferenceField([np.zeros((2, 2))], 0.5))
    assert np.array_equal(z, np.eye(2))
    g = 0.3 - 1.2j
    R = lr.interference_covariance(lr.InterferenceField([np.array([[g]])], 1.0))
    assert R[0, 0] == pytest.approx(1 + abs(g) ** 2)
    with pytest.raises(ParameterError):
        lr.interference_covariance(lr.InterferenceField([np.ones((2, 2)), np.ones((3, 2))], 1.0))


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 2**31))
def test_covariance_hermitian_and_at_least_identity(psi, psi_tx, k, seed):
    rng = np.random.default_rng(seed)
    mats = [rng.normal(size=(psi, psi_tx)) + 1j * rng.normal(size=(psi, psi_tx)) for _ in range(k)]
    R = lr.interference_covariance(lr.InterferenceField(mats, 0.7), psi_rx=psi)
    assert np.allclose(R, R.conj().T, rtol=1e-10, atol=1e-12)
    assert np.linalg.eigvalsh(R).min() >= 1 - 1e-9


def test_link_rate_unit_example_and_zero():
    assert lr.link_rate(np.array([[1.0]]), np.eye(1), 1.0, 1, 1) == pytest.approx(1.0, abs=1e-14)
    assert lr.link_rate(np.zeros((3, 3)), np.eye(3) * 5, 1.0, 3, 2) == 0.0
    with pytest.raises(ParameterError):
        lr.link_rate(np.ones((1, 1)), np.eye(1), 1.0, 1, 0)


def test_link_rate_non_pd_covariance_raises():
    R = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericalError):
        lr.link_rate(np.eye(2), R, 1.0, 2)


@given(complex_mats(3, 3), complex_mats(3, 4), st.integers(1, 9), st.floats(0.1, 10))
def test_link_rate_matches_inverse_oracle(H, G, p, P):
    R = np.eye(3) + (P / 3) * G @ G.conj().T
    assert lr.link_rate(H, R, P, 3, p) == pytest.approx(rate_oracle(H, R, P, 3, p), rel=1e-8, abs=1e-8)


@given(complex_mats(3, 3), complex_mats(3, 3), st.floats(1.0, 50.0))
def test_rate_non_increasing_in_interference(H, G, scale):
    R1 = lr.covariance_from_stack(G, 0.5)
    R2 = lr.covariance_from_stack(G, 0.5 * scale)
    assert lr.link_rate(H, R2, 1.0, 3) <= lr.link_rate(H, R1, 1.0, 3) + 1e-9


@given(complex_mats(4, 2), st.floats(0.01, 100))
def test_logdet_sylvester_and_eigen_oracle(A, s):
    # wide and tall forms agree (Sylvester) and match an eigenvalue sum
    wide = lr.logdet2_identity_plus(A, s)
    tall = lr.logdet2_identity_plus(A.conj().T, s)
    eig = np.linalg.eigvalsh(s * A @ A.conj().T)
    assert wide == pytest.approx(tall, rel=1e-9, abs=1e-9)
    assert wide == pytest.approx(float(np.sum(np.log2(1 + np.clip(eig, 0, None)))), abs=1e-8)


def test_ergodic_bound_consistency():
    H = np.random.default_rng(2).normal(size=(4, 4)) + 0j
    assert lr.ergodic_lower_bound(H, 1.0, 1.0, 4) == pytest.approx(lr.link_rate(H, np.eye(4), 1.0, 4))
    assert lr.ergodic_lower_bound(H, 3.0 * np.eye(4), 1.0, 4) == pytest.approx(
        lr.ergodic_lower_bound(H, 3.0, 1.0, 4))
    assert lr.ergodic_lower_bound(H, 1e12, 1.0, 4) < 1e-9
    assert lr.ergodic_lower_bound(H, math.inf, 1.0, 4) == 0.0
    with pytest.raises(ParameterError):
        lr.ergodic_lower_bound(H, 0.5, 1.0, 4)


def test_ring_constant_examples():
    assert lr.ring_interference_constant(5.0, 1.0, num_rings=1).q == 9.0
    assert lr.ring_interference_constant(4.0, 0.0).q == 1.0
    with pytest.raises(ParameterError):
        lr.ring_interference_constant(2.0)


def test_ring_constant_converges_to_zeta_oracle():
    # sum_{i>=2} i (i-1)^-4 = zeta(3) + zeta(4)
    mpmath.mp.dps = 30
    limit = 9 + 8 * float(mpmath.zeta(3) + mpmath.zeta(4))
    qs = [lr.ring_interference_constant(4.0, 1.0, num_rings=N) for N in (8, 64, 4096)]
    assert all(a.q <= b.q for a, b in zip(qs, qs[1:]))
    for rc in qs:
        assert rc.q <= limit <= rc.q + rc.tail_bound
    assert qs[-1].q == pytest.approx(limit, rel=1e-6)
    alpha5 = lr.ring_interference_constant(5.0, 1.0, num_rings=64)
    assert alpha5.q == pytest.approx(9 + 8 * float(mpmath.zeta(4) + mpmath.zeta(5)), rel=1e-6)


def test_beamforming_rate():
    tx = ch.place_antennas((0.0, 0.0), 0.0, 4, 1)
    rx = ch.place_antennas((100.0, 0.0), 0.0, 4, 2)
    H = ch.build_channel_matrix(tx, rx, ch.LinkBudget())
    r = lr.beamforming_rate(H, 1.0)
    assert r.exact == pytest.approx(r.trace_upper, rel=1e-12)
    assert r.trace_upper == pytest.approx(math.log2(1 + 16.0))
    one = lr.beamforming_rate(np.array([[0.5j]]), 2.0)
    assert one.exact == pytest.approx(one.trace_upper)
    tx = ch.place_antennas((0.0, 0.0), 8.0, 64, 1)
    rx = ch.place_antennas((100.0, 0.0), 8.0, 64, 2)
    full = lr.beamforming_rate(ch.build_channel_matrix(tx, rx, ch.LinkBudget()), 1.0)
    assert full.exact < full.trace_upper


@given(complex_mats(3, 3), st.floats(0.01, 10))
def test_beamforming_exact_below_trace(H, P):
    if not np.any(H):
        return
    r = lr.beamforming_rate(H, P)
    assert r.exact <= r.trace_upper + 1e-12


def test_long_hop_range_examples():
    assert lr.long_hop_range(1.0, 1.0, 64, 4.0) == pytest.approx(8.0)
    assert lr.long_hop_range(1.0, 1.0, 1, 5.0) == pytest.approx(1.0)
    assert lr.long_hop_range(16.0, 1.0, 64, 4.0) == pytest.approx(16.0)
    for alpha in (3.0, 4.0, 6.0):
        ratio = lr.long_hop_range(1.0, 1.0, 128, alpha) / lr.long_hop_range(1.0, 1.0, 64, alpha)
        assert ratio == pytest.approx(2 ** (2 / alpha))


def test_spectral_radius_diagnostic():
    empty = lr.spectral_radius_diagnostic(lr.InterferenceField([], 1.0), 5.0, d_max=1.0)
    assert (empty.lambda_max_numeric, empty.heuristic_bound) == (1.0, 1.0)
    assert not empty.rigorous
    g = 0.8 + 0.6j
    one = lr.spectral_radius_diagnostic(lr.InterferenceField([np.array([[g]])], 1.0), 5.0, d_max=1.0)
    assert one.lambda_max_numeric == pytest.approx(1 + abs(g) ** 2)
    assert not lr.spectral_radius_diagnostic(lr.InterferenceField([], 1.0), 3.0, d_max=1.0).alpha_valid


def test_first_ring_diagnostic_reports_both_values():
    budget = ch.LinkBudget()
    rx = ch.place_antennas((0.0, 0.0), 8.0, 16, 0)
    mats = []
    for k, (dx, dy) in enumerate([(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)]):
        tx = ch.place_antennas((100.0 * dx, 100.0 * dy), 8.0, 16, k + 1)
        mats.append(ch.build_channel_matrix(tx, rx, budget))
    rep = lr.spectral_radius_diagnostic(lr.InterferenceField(mats, 1 / 16), 5.0, a=64.0, lam=0.01)
    assert rep.lambda_max_numeric >= 1 and rep.heuristic_bound >= 1
    assert rep.alpha_valid and not rep.rigorous


def test_rate_sample_and_csv(tmp_path):
    with pytest.raises(ParameterError):
        lr.RateSample(-1.0)
    path = lr.write_rate_csv([lr.RateSample(1.5, 4, 7, 64)], tmp_path / "r.csv")
    assert path.read_text().splitlines() == ["seed,psi,p,rate_bps_hz", "7,64,4,1.5"]
