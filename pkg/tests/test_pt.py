"""Perturbative survival probability: brute-force sum, closed forms, weak-coupling TDSE."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jv

from kzosc import pt, tdse
from kzosc.specfun import DomainError
from kzosc.tdse import DriveParams


def brute_force_exponent(delta, b_amp, eta, omega, eps, n_max):
    total = 0.0
    for n in range(-n_max, n_max + 1):
        wn = delta * jv(n, eta) + b_amp / 4 * (jv(n + 1, eta) + jv(n - 1, eta))
        for m in range(-n_max, n + 1):
            wm = delta * jv(m, eta) + b_amp / 4 * (jv(m + 1, eta) + jv(m - 1, eta))
            dphi = 0.5 * omega * (n * n * omega - 2 * n * eps) - 0.5 * omega * (m * m * omega - 2 * m * eps)
            total += wn * wm * math.cos(dphi) * (0.5 if n == m else 1.0)
    return total


params = st.tuples(st.floats(0.01, 1.0), st.floats(-2, 2), st.floats(0, 3), st.floats(0, 0.5),
                   st.floats(0.3, 8))


@settings(max_examples=40, deadline=None)
@given(params)
def test_double_sum_matches_brute_force(args):
    delta, eps, eta, b_amp, omega = args
    got = pt.harmonic_double_sum(delta, b_amp, eta, omega, eps, pt.SumTruncation(12))
    assert got == pytest.approx(brute_force_exponent(delta, b_amp, eta, omega, eps, 12), abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(params)
def test_exponent_is_half_squared_modulus(args):
    # theta(0) = 1/2 makes the ordered sum half of |sum_n w_n e^{i phi_n}|^2, so p <= 1
    delta, eps, eta, b_amp, omega = args
    n = np.arange(-10, 11)
    w = delta * jv(n, eta) + b_amp / 4 * (jv(n + 1, eta) + jv(n - 1, eta))
    phi = 0.5 * omega * (n * n * omega - 2 * n * eps)
    ref = 0.5 * abs(np.sum(w * np.exp(1j * phi))) ** 2
    assert pt.harmonic_double_sum(delta, b_amp, eta, omega, eps) == pytest.approx(ref, rel=1e-10, abs=1e-15)
    assert pt.p_pt(DriveParams.from_eta(delta, eps, eta, b_amp, omega)) <= 1.0


@pytest.mark.parametrize("delta", [0.0, 0.2, 0.75])
def test_reduces_to_lzsm(delta):
    assert pt.p_pt(DriveParams(delta, 0.5, 0.0, 0.0, 3.0)) == pytest.approx(math.exp(-2 * math.pi * delta**2),
                                                                          rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(params)
def test_a0_closed_form(args):
    delta, eps, _, b_amp, omega = args
    p = DriveParams(delta, eps, 0.0, b_amp, omega)
    assert pt.p_pt(p, pt.SumTruncation(20)) == pytest.approx(pt.p_pt_a0(p), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(params)
def test_exact_eps_periodicity(args):
    delta, eps, eta, b_amp, omega = args
    p = DriveParams.from_eta(delta, eps, eta, b_amp, omega)
    q = DriveParams.from_eta(delta, eps + p.period, eta, b_amp, omega)
    assert pt.p_pt(p) == pytest.approx(pt.p_pt(q), rel=1e-10)


@pytest.mark.parametrize("eta", [1e-3, 1e-2])
def test_small_eta_expansion(eta):
    p = DriveParams.from_eta(0.2, 0.5, eta, 0.0, 2.0)
    full, lin = pt.p_pt_b0(p), pt.p_pt_b0_small_eta(p)
    # the residual is second order in eta
    assert abs(math.log(full) - math.log(lin)) < 10 * 2 * math.pi * 0.04 * eta**2


def test_truncation_converges():
    p = DriveParams.from_eta(0.2, 0.5, 1.5, 0.2, 2.0)
    assert abs(pt.p_pt(p, pt.SumTruncation(10)) - pt.p_pt(p, pt.SumTruncation(40))) < 1e-8


@pytest.mark.parametrize("p", [
    DriveParams.from_eta(0.05, 0.5, 0.0, 0.05, 2.0),
    DriveParams.from_eta(0.05, 0.3, 0.8, 0.0, 3.0),
    DriveParams.from_eta(0.04, -0.2, 0.5, 0.06, 1.5),
])
def test_weak_coupling_matches_tdse(p):
    # second order in the coupling: the remaining error is fourth order
    assert abs(pt.p_pt(p) - tdse.survival_probability(p)) < 2e-4


def test_special_forms_guard_their_preconditions():
    with pytest.raises(ValueError):
        pt.p_pt_a0(DriveParams(0.2, 0.5, 0.1, 0.1, 2.0))
    with pytest.raises(ValueError):
        pt.p_pt_b0(DriveParams(0.2, 0.5, 0.1, 0.1, 2.0))
    with pytest.raises(ValueError):
        pt.SumTruncation(0)
    with pytest.raises(ValueError):
        pt.lzsm_probability(-0.1)
    with pytest.raises(DomainError):
        pt.p_pt(DriveParams.from_eta(0.2, 0.0, 60.0, 0.0, 1.0))


def test_theta_convention_matters():
    # theta(0) = 1/2 is what makes the A = B = 0 limit exact
    p = DriveParams(0.3, 0.5, 0.0, 0.0, 2.0)
    saved = pt.THETA_AT_ZERO
    try:
        pt.THETA_AT_ZERO = 1.0
        assert abs(pt.p_pt(p) - pt.lzsm_probability(0.3)) > 0.1
    finally:
        pt.THETA_AT_ZERO = saved


def test_exponent_vectorized_weights_are_symmetric_in_eta_sign():
    # J_n(-x) = (-1)^n J_n(x): flipping eta and eps -> eps + pi/omega leaves p unchanged for B = 0
    p = DriveParams.from_eta(0.3, 0.5, 0.7, 0.0, 2.0)
    q = DriveParams.from_eta(0.3, 0.5 + math.pi / 2.0, -0.7, 0.0, 2.0)
    assert pt.p_pt(p) == pytest.approx(pt.p_pt(q), rel=1e-12)
    assert np.isfinite(pt.pt_exponent(p))
