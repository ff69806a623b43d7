"""Special functions against mpmath, the Weber equation and a second representation."""
import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kzosc import specfun as sf

mp.mp.dps = 30
W = cmath.exp(0.25j * math.pi)


def rel(a, b):
    return abs(complex(a) - complex(b)) / abs(complex(b))


def mpc(z):
    return complex(mp.mpc(z))


# ---------------------------------------------------------------------------
# Gamma and Bessel

@pytest.mark.parametrize("z", [0.5, 3.7, 1j, 0.25 - 2j, -1.5 + 0.5j, 12 + 30j, 1e-3j])
def test_log_gamma_matches_mpmath(z):
    assert rel(sf.gamma(z), mpc(mp.gamma(z))) < 1e-13
    assert abs(sf.log_gamma(z) - mpc(mp.loggamma(z))) < 1e-13
    assert rel(sf.rgamma(z), mpc(mp.rgamma(z))) < 1e-13


@pytest.mark.parametrize("z", [0, -1, -7])
def test_gamma_poles(z):
    with pytest.raises(sf.PoleError):
        sf.gamma(z)
    with pytest.raises(sf.PoleError):
        sf.log_gamma(z)
    assert sf.rgamma(z) == 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 8), st.floats(-8, 8))
def test_gamma_conjugation_and_recurrence(x, y):
    z = complex(x, y)
    assert rel(sf.gamma(z.conjugate()), sf.gamma(z).conjugate()) < 1e-13
    assert rel(sf.gamma(z + 1), z * sf.gamma(z)) < 1e-12


@pytest.mark.parametrize("n,x", [(0, 0.05), (1, 0.3), (-3, 2.0), (7, 5.5), (12, 30.0)])
def test_bessel_matches_mpmath(n, x):
    assert abs(sf.bessel_j(n, x) - float(mp.besselj(n, x))) < 1e-14


def test_bessel_domain():
    with pytest.raises(sf.DomainError):
        sf.bessel_j(1, 60.0)
    with pytest.raises(sf.DomainError):
        sf.bessel_j(0.5, 1.0)


# ---------------------------------------------------------------------------
# Kummer M and Tricomi U

KUMMER_CASES = [
    (0.5, 1.5, 2.0),
    (-0.5625j, 1, 4j),
    (1 - 0.5625j, 2, 9j),
    (-1j, 1, 36j),
    (1 - 4j, 1, 25j),
    (0.3 + 1j, 1.5, -3 + 2j),
    (-2.5j, 2, 64j),
]


@pytest.mark.parametrize("a,b,z", KUMMER_CASES)
def test_kummer_m_matches_mpmath(a, b, z):
    assert rel(sf.kummer_m(a, b, z), mpc(mp.hyp1f1(a, b, z))) < 1e-10


@pytest.mark.parametrize("a,z", [(-0.49j, 36j), (-2j, 4j), (1 - 1j, 9j), (-0.01j, 1j)])
def test_regularized_kummer_at_b0_matches_mpmath_limit(a, z):
    # 1F1(a; b; z)/Gamma(b) as b -> 0, evaluated just off the pole in high precision
    with mp.workdps(60):
        b = mp.mpf("1e-40")
        ref = mpc(mp.hyp1f1(a, b, z) / mp.gamma(b))
    assert rel(sf.kummer_m_regularized(a, 0, z), ref) < 1e-10
    assert rel(sf.kummer_m_regularized(a, 1, z), mpc(mp.hyp1f1(a, 1, z))) < 1e-10


def test_kummer_parameter_errors():
    with pytest.raises(sf.PoleError):
        sf.kummer_m(1, -2, 1.0)
    with pytest.raises(sf.UnsupportedParameterError):
        sf.kummer_m_regularized(1j, 2, 1j)
    assert sf.kummer_m_regularized(0, 0, 3j) == 0


@pytest.mark.parametrize("a,b,z", [
    (-0.5625j, 0, 4j), (0.5625j, 0, -4j), (1 - 0.5625j, 1, 9j), (-1j, 1, 36j),
    (2.5j, 0, -1j), (1 - 3j, 1, 64j), (0.5, 1, 2.0), (-0.7 + 0.2j, 0, 3 + 1j),
])
def test_tricomi_u_matches_mpmath(a, b, z):
    assert rel(sf.tricomi_u(a, b, z), mpc(mp.hyperu(a, b, z))) < 1e-10


@pytest.mark.parametrize("a,b,z", [(0.5j, 0.5 - 1j, 9j), (-1.5 + 1j, 2.25j, 4j), (1 + 1j, -0.5, 1j)])
def test_tricomi_u_general_matches_mpmath(a, b, z):
    assert rel(sf.tricomi_u_general(a, b, z), mpc(mp.hyperu(a, b, z))) < 1e-9


def test_tricomi_domain():
    with pytest.raises(sf.UnsupportedParameterError):
        sf.tricomi_u(1j, 2, 1j)
    with pytest.raises(sf.DomainError):
        sf.tricomi_u(1j, 1, 0)
    with pytest.raises(sf.DomainError):
        sf.tricomi_u(1j, 1, -1 + 1j)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.5, 40))
def test_kummer_transformation_property(kappa, omega2):
    a, z = -1j * kappa, 1j * omega2
    lhs = sf.kummer_m(a, 1, z)
    rhs = cmath.exp(z) * sf.kummer_m(1 - a, 1, -z)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1.0)


# ---------------------------------------------------------------------------
# parabolic cylinder D

PCFD_CASES = [(nu, r * W**s) for nu in (-0.5625j, -1 - 0.5625j, 0.5j, -4j - 1, 2.5)
              for r, s in ((0.3, 1), (3.0, 1), (8.0, -1), (25.0, 1), (-6.0, 1), (-120.0, -1))]


@pytest.mark.parametrize("nu,z", PCFD_CASES)
def test_pcfd_matches_mpmath(nu, z):
    ref = mpc(mp.pcfd(nu, z))
    assert abs(sf.parabolic_cylinder_d(nu, z) - ref) <= 1e-11 * max(abs(ref), 1e-300)


def d_from_kummer(nu, z):
    """D_nu(z) from the even/odd 1F1 representation (an independent route)."""
    x = z * z / 2
    even = math.sqrt(math.pi) * sf.rgamma((1 - nu) / 2) * sf.kummer_m(-nu / 2, 0.5, x)
    odd = math.sqrt(2 * math.pi) * z * sf.rgamma(-nu / 2) * sf.kummer_m((1 - nu) / 2, 1.5, x)
    return 2 ** (nu / 2) * cmath.exp(-z * z / 4) * (even - odd)


@pytest.mark.parametrize("nu", [-0.5625j, -1 - 0.5625j, 0.25j, -1 - 2j])
@pytest.mark.parametrize("x", [-8.0, -3.0, -0.5, 0.0, 1.0, 4.0, 8.0])
def test_pcfd_matches_kummer_representation_on_rays(nu, x):
    for a in (W, W.conjugate()):
        z = a * x
        ref = d_from_kummer(nu, z)
        assert abs(sf.parabolic_cylinder_d(nu, z) - ref) <= 1e-10 * max(abs(ref), 1e-30)


@pytest.mark.parametrize("nu", [-0.5625j, -1 - 2j, 0.3 + 0.7j])
@pytest.mark.parametrize("z", [2 * W, -5 * W.conjugate(), 1.5 + 0.2j, 12 * W])
def test_pcfd_satisfies_weber_equation(nu, z):
    # D'' = (z^2/4 - nu - 1/2) D, second derivative by a 5-point stencil
    h = 1e-2 / max(1.0, abs(z) / 2)
    f = [sf.parabolic_cylinder_d(nu, z + k * h) for k in (-2, -1, 0, 1, 2)]
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    expected = (z * z / 4 - nu - 0.5) * f[2]
    assert abs(d2 - expected) <= 1e-7 * max(abs(expected), abs(f[2]))


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4), st.floats(-30, 30), st.sampled_from([W, W.conjugate()]))
def test_pcfd_conjugation_symmetry(kappa, x, a):
    nu, z = -1j * kappa - 1, a * x
    lhs = sf.parabolic_cylinder_d(nu.conjugate(), z.conjugate())
    rhs = sf.parabolic_cylinder_d(nu, z).conjugate()
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300)


def test_pcfd_array_matches_scalar():
    z = W * np.linspace(-40, 40, 17)
    arr = sf.pcfd_array(-0.5625j, z)
    for zi, v in zip(z, arr):
        assert v == sf.parabolic_cylinder_d(-0.5625j, zi)


def test_pcfd_rejects_nonfinite():
    with pytest.raises(sf.DomainError):
        sf.parabolic_cylinder_d(0.5j, complex("inf"))


def test_series_control_validation():
    with pytest.raises(ValueError):
        sf.SeriesControl(max_terms=0)
    with pytest.raises(ValueError):
        sf.SeriesControl(tail_tolerance=0)


def test_identity_suite_passes():
    checks = sf.specfun_check()
    assert len(checks) >= 10
    failing = [c.name for c in checks if not c.passed]
    assert not failing
