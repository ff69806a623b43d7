"""Ising-chain modes, approximations and densities."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from kzosc import furry, ising, pt, tdse
from kzosc.ising import IsingDiagParams, IsingOffDiagParams
from kzosc.tdse import IntegrationConfig

DIAG = IsingDiagParams(7.0, 0.05, 6.0, 0.5, 200)
OFF = IsingOffDiagParams(7.0, 0.3, 5.0, 0.5, 200)


# ---------------------------------------------------------------------------
# modes

def test_mode_grid_small():
    assert np.allclose(ising.mode_grid(4), [-3 * math.pi / 4, -math.pi / 4, math.pi / 4, 3 * math.pi / 4])


@pytest.mark.parametrize("n", [2, 50, 200])
def test_mode_grid_is_symmetric_and_avoids_gapless_points(n):
    q = ising.mode_grid(n)
    assert q.size == n
    assert np.allclose(q, -q[::-1])
    assert np.all(np.abs(np.sin(q)) > 0)


@pytest.mark.parametrize("n", [0, 3, 7.5])
def test_mode_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        ising.mode_grid(n)


def test_mode_drives():
    q = 0.3
    d = ising.mode_drive_diag(DIAG, q)
    assert d.delta == pytest.approx(-7 * math.sin(q))
    assert d.eps == pytest.approx(0.5 + 14 * math.cos(q))
    assert d.eta == pytest.approx(0.05)
    o = ising.mode_drive_offdiag(OFF, q)
    assert o.delta == pytest.approx(-7 * math.sin(q))
    assert o.b_amp == pytest.approx(-0.3 * math.sin(q))
    assert o.a_amp == pytest.approx(-0.3 * math.cos(q))
    assert ising.mode_drive(DIAG, q) == d and ising.mode_drive(OFF, q) == o
    with pytest.raises(TypeError):
        ising.mode_drive(object(), q)


def test_parameter_validation():
    with pytest.raises(ValueError):
        IsingDiagParams(0.0)
    with pytest.raises(ValueError):
        IsingDiagParams(1.0, n_sites=5)
    with pytest.raises(ValueError):
        IsingOffDiagParams(-1.0)
    with pytest.raises(ValueError):
        IsingOffDiagParams(1.0, omega=0.0)


# ---------------------------------------------------------------------------
# per-mode approximations

@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.1))
def test_nonadiabatic_forms_are_perturbation_theory_on_the_mode(q):
    assert ising.uq_nonadiabatic_diag(DIAG, q) == pytest.approx(pt.p_pt_b0(ising.mode_drive_diag(DIAG, q)),
                                                                rel=1e-12)
    assert ising.uq_nonadiabatic_offdiag(OFF, q) == pytest.approx(pt.p_pt(ising.mode_drive_offdiag(OFF, q)),
                                                                  rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3.1))
def test_adiabatic_forms_are_furry_on_the_mode(q):
    assert ising.uq_adiabatic_diag(DIAG, q) == pytest.approx(
        furry.p_fp_adiabatic(ising.mode_drive_diag(DIAG, q)), rel=1e-10, abs=1e-300)
    # the two B-drive terms cancel strongly away from the resonance; below
    # ~1e-20 only the absolute accuracy of the 1F1 route is meaningful
    assert ising.uq_adiabatic_offdiag(OFF, q) == pytest.approx(
        furry.p_fp_adiabatic(ising.mode_drive_offdiag(OFF, q)), rel=1e-9, abs=1e-20)


def test_offdiagonal_bessel_sign_follows_the_mode_equation():
    # weak coupling, eta_B = 1: the mode's own TDSE picks the -eta_B cos q argument
    p = IsingOffDiagParams(0.1, 0.4, 0.4, 0.5)
    q = 0.8
    numeric = tdse.survival_probability(ising.mode_drive_offdiag(p, q))
    c = math.cos(q)
    other = math.exp(-4 * math.pi * math.sin(q) ** 2 * pt.harmonic_double_sum(
        p.delta_prime, p.b_prime, p.eta_b * c, p.omega, p.eps_prime + 2 * p.delta_prime * c))
    assert abs(ising.uq_nonadiabatic_offdiag(p, q) - numeric) < 3e-3
    assert abs(other - numeric) > 1e-2


@pytest.mark.parametrize("p", [DIAG, OFF, IsingDiagParams(5.0, 0.3, 3.0, -0.2)])
def test_gaussian_widths_are_curvatures_of_the_nonadiabatic_profile(p):
    alpha, beta = (ising.gaussian_widths_diag(p) if isinstance(p, IsingDiagParams)
                   else ising.gaussian_widths_offdiag(p))
    uq = ising.uq_nonadiabatic_diag if isinstance(p, IsingDiagParams) else ising.uq_nonadiabatic_offdiag
    h = 1e-4
    assert -math.log(uq(p, h)) / h**2 == pytest.approx(alpha, rel=1e-6)
    assert -math.log(uq(p, math.pi - h)) / h**2 == pytest.approx(beta, rel=1e-6)


def test_peak_density_is_integral_of_gaussians():
    br = ising.defect_density_approx_diag(DIAG)
    q = np.linspace(-math.pi, math.pi, 20001)
    gauss = np.exp(-br.alpha * q**2) + np.exp(-br.beta * (math.pi - np.abs(q)) ** 2)
    assert br.n_kzm_peaks == pytest.approx(simpson(gauss, x=q) / (2 * math.pi), rel=1e-9)
    assert br.n_approx == br.n_kzm_peaks + br.n_fp


@pytest.mark.parametrize("j", [2.0, 7.0, 15.0])
def test_undriven_density_is_kibble_zurek(j):
    br = ising.defect_density_approx_diag(IsingDiagParams(j))
    assert br.n_fp == 0
    assert br.n_kzm_peaks == pytest.approx(1 / (math.pi * math.sqrt(2) * j), rel=1e-12)


# ---------------------------------------------------------------------------
# non-perturbative part

def test_fp_probability_scales_as_eta_squared():
    assert ising.fp_probability(2.0, 0.0, 6.0) == 0.0
    a, b = ising.fp_probability(2.0, 0.05, 6.0), ising.fp_probability(2.0, 0.1, 6.0)
    assert b == pytest.approx(4 * a, rel=1e-14)


@pytest.mark.parametrize("j,omega", [(4.0, 6.0), (7.0, 6.0), (7.0, 14.0), (12.0, 3.0)])
def test_n_fp_integral_matches_fine_simpson(j, omega):
    p = IsingDiagParams(j, 0.05, omega)
    q = np.linspace(0, math.pi / 2, 8001)
    vals = np.array([ising.uq_adiabatic_diag(p, x) for x in q])
    assert ising.n_fp_integral(p) == pytest.approx(2 / math.pi * simpson(vals, x=q), rel=1e-7)


def test_n_fp_integral_offdiag_matches_fine_simpson():
    q = np.linspace(0, math.pi, 16001)
    vals = np.array([ising.uq_adiabatic_offdiag(OFF, x) for x in q])
    assert ising.n_fp_integral_offdiag(OFF) == pytest.approx(simpson(vals, x=q) / math.pi, rel=1e-7)


def test_grid_sum_converges_to_integral():
    p = IsingDiagParams(7.0, 0.05, 6.0, 0.5, 2000)
    assert ising.n_fp_grid_sum(p) == pytest.approx(ising.n_fp_integral(p), rel=1e-8)


def test_eta_zero_gives_zero_everywhere():
    p = IsingDiagParams(7.0, 0.0, 6.0)
    assert ising.n_fp_integral(p) == ising.n_fp_approx(p) == ising.n_fp_grid_sum(p) == 0.0
    assert ising.n_fp_integral_offdiag(IsingOffDiagParams(7.0, 0.0, 5.0)) == 0.0


def test_coefficient_matches_direct_quadrature():
    # c = 2 pi eta^2 int_0^inf e^{-2 pi x^2} |1F1~(-i x^2; 0; i omega^2)|^2 dx
    x = np.linspace(0, 8, 4001)
    m = np.array([abs(ising.sf.kummer_m_regularized(-1j * t * t, 0, 36j)) ** 2 for t in x])
    ref = 2 * math.pi * 0.05**2 * simpson(np.exp(-2 * math.pi * x**2) * m, x=x)
    assert ising.n_fp_coefficient(6.0, 0.05) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 12), st.floats(0.001, 0.5))
def test_coefficient_exactly_quadratic_in_eta(omega, eta):
    assert ising.n_fp_coefficient(omega, eta) == pytest.approx(
        ising.n_fp_coefficient(omega, 1.0) * eta**2, rel=1e-13)


def test_large_coupling_form_approaches_integral():
    gaps = []
    for j in (10.0, 20.0, 40.0):
        p = IsingDiagParams(j, 0.05, 6.0)
        gaps.append(abs(ising.n_fp_approx(p) / ising.n_fp_integral(p) - 1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 5e-3


# ---------------------------------------------------------------------------
# numerical densities

@pytest.mark.parametrize("p", [IsingDiagParams(2.0, 0.05, 6.0, 0.5, 16), IsingOffDiagParams(2.0, 0.3, 5.0, 0.5, 16)])
def test_plus_minus_q_symmetry(p):
    q = ising.mode_grid(p.n_sites)
    prof = ising.mode_profile_numeric(p, q)
    assert np.max(np.abs(prof - prof[::-1])) < 1e-10


def test_symmetry_shortcut_matches_full_grid():
    p = IsingDiagParams(2.0, 0.05, 6.0, 0.5, 12)
    cfg = IntegrationConfig(tau_start=-200.0, tau_end=200.0)
    half = ising.defect_density_numeric(p, cfg).n_numeric
    full = ising.defect_density_numeric(p, cfg, use_symmetry=False).n_numeric
    assert half == pytest.approx(full, rel=1e-9)


def test_mode_excitations_rows():
    rows = ising.mode_excitations(IsingDiagParams(2.0, 0.05, 6.0, 0.5, 4))
    assert [r.q for r in rows] == pytest.approx([-3 * math.pi / 4, -math.pi / 4, math.pi / 4, 3 * math.pi / 4])
    for r in rows:
        assert r.kappa_q == pytest.approx(2.0)
        assert 0 <= r.p_numeric <= 1


# ---------------------------------------------------------------------------
# scaling fit

@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.01, 10))
def test_scaling_fit_recovers_power_law(exponent, prefactor):
    pts = [(j, prefactor * j**exponent) for j in (4.0, 5.0, 6.0, 8.0, 10.0)]
    e, c, r = ising.scaling_fit(pts)
    assert e == pytest.approx(exponent, abs=1e-10)
    assert c == pytest.approx(prefactor, rel=1e-9)
    assert r < 1e-10


def test_scaling_fit_validation():
    with pytest.raises(ValueError):
        ising.scaling_fit([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        ising.scaling_fit([(1, 1), (2, -2), (3, 3)])
    with pytest.raises(ValueError):
        ising.scaling_fit([(1, 1), (1, 2), (3, 3)])
