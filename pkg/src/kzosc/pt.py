"""Non-adiabatic perturbation theory for the driven LZSM problem.

Expanding the interaction-picture coupling in Bessel harmonics and keeping
the second-order term of the Dyson series gives

    p = exp(-4 pi sum_{n,m} w_n w_m cos(phi_n - phi_m) theta(n - m)),
    w_n = Delta J_n(eta) + B/4 (J_{n+1}(eta) + J_{n-1}(eta)),
    phi_n = omega (n^2 omega - 2 n eps) / 2,

with theta(0) = 1/2.  With that convention the double sum equals
1/2 |sum_n w_n e^{i phi_n}|^2, so the exponent is never positive and p <= 1.
Valid when Delta and B are small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .specfun import BESSEL_X_MAX, DomainError
from .tdse import DriveParams

__all__ = [
    "SumTruncation",
    "DEFAULT_TRUNCATION",
    "lzsm_probability",
    "p_pt",
    "p_pt_a0",
    "p_pt_b0",
    "p_pt_b0_small_eta",
    "pt_exponent",
    "harmonic_double_sum",
]


@dataclass(frozen=True)
class SumTruncation:
    """Harmonics kept in the double sum: |n|, |m| <= n_max."""

    n_max: int = 10

    def __post_init__(self):
        if not (int(self.n_max) == self.n_max and self.n_max >= 1):
            raise ValueError(f"n_max must be a positive integer, got {self.n_max!r}")


DEFAULT_TRUNCATION = SumTruncation()

# theta(0) of the ordering step function theta(n - m)
THETA_AT_ZERO = 0.5


def lzsm_probability(delta: float) -> float:
    """Landau-Zener survival probability exp(-2 pi Delta^2)."""
    if not delta >= 0:
        raise ValueError(f"delta must be non-negative, got {delta!r}")
    return math.exp(-2 * math.pi * delta * delta)


def _require_zero(name, value):
    if value != 0:
        raise ValueError(f"this form requires {name} = 0, got {value!r}")


def harmonic_double_sum(delta: float, b_amp: float, eta: float, omega: float, eps: float,
                        trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """sum_{n,m} w_n w_m cos(phi_n - phi_m) theta(n - m) over |n|, |m| <= n_max."""
    if abs(eta) > BESSEL_X_MAX:
        raise DomainError(f"|eta| must be <= {BESSEL_X_MAX}")
    n = np.arange(-trunc.n_max, trunc.n_max + 1)
    jn = special.jv(np.arange(-trunc.n_max - 1, trunc.n_max + 2), eta)
    w = delta * jn[1:-1] + 0.25 * b_amp * (jn[2:] + jn[:-2])
    phi = 0.5 * omega * (n * n * omega - 2 * n * eps)
    # theta(n - m): strict lower triangle plus THETA_AT_ZERO on the diagonal
    theta = np.tril(np.ones((n.size, n.size)), -1) + THETA_AT_ZERO * np.eye(n.size)
    return float(w @ (theta * np.cos(phi[:, None] - phi[None, :])) @ w)


def pt_exponent(p: DriveParams, trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """The double sum S, so that the perturbative survival probability is exp(-4 pi S)."""
    return harmonic_double_sum(p.delta, p.b_amp, p.eta, p.omega, p.eps, trunc)


def p_pt(p: DriveParams, trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """Perturbative survival probability with both drives."""
    return math.exp(-4 * math.pi * pt_exponent(p, trunc))


def p_pt_a0(p: DriveParams) -> float:
    """Closed form of :func:`p_pt` without the diagonal drive."""
    _require_zero("a_amp", p.a_amp)
    d, b, om, eps = p.delta, p.b_amp, p.omega, p.eps
    c = math.cos(om * eps)
    return math.exp(-2 * math.pi * d * d - 0.5 * math.pi * b * b * c * c
                    - 2 * math.pi * b * d * math.cos(0.5 * om * om) * c)


def p_pt_b0(p: DriveParams, trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """:func:`p_pt` without the off-diagonal drive."""
    _require_zero("b_amp", p.b_amp)
    return p_pt(p, trunc)


def p_pt_b0_small_eta(p: DriveParams) -> float:
    """First order in eta of :func:`p_pt_b0`."""
    _require_zero("b_amp", p.b_amp)
    om = p.omega
    return math.exp(-2 * math.pi * p.delta**2
                    * (1 + 2 * p.eta * math.sin(om * p.eps) * math.sin(0.5 * om * om)))
