"""Transverse-field Ising chain swept through its critical points with a periodic drive.

After the Jordan-Wigner and Fourier transforms each momentum pair (q, -q)
evolves as an independent two-level system

    i d/dt (c_q, c^dag_-q) = [[E_q, delta_q], [delta_q, -E_q]] (c_q, c^dag_-q),

so every mode maps onto a :class:`~kzosc.tdse.DriveParams` and the defect
density is the grid average of the mode survival probabilities |u_q|^2.

Two drives are covered:

* diagonal: the transverse field carries A cos(omega t)
  (E_q = J cos q + (tau + eps' - A cos omega tau)/2, delta_q = -J sin q);
* off-diagonal: the coupling carries it, J(t) = Delta'/2 + B'/4 cos(omega t)
  (E_q = 2 J(t) cos q + (tau + eps')/2, delta_q = -2 J(t) sin q).

The approximate density splits into Gaussian peaks at q = 0 and q = +-pi,
where the gap closes and perturbation theory in the coupling applies, plus the
integral n_FP of the first-order Furry-picture probability over the adiabatic
modes.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun as sf
from .furry import RegimeError, _damped_square, adiabatic_cutoff
from .pt import DEFAULT_TRUNCATION, SumTruncation, harmonic_double_sum
from .tdse import DriveParams, IntegrationConfig, survival_probabilities

__all__ = [
    "IsingDiagParams",
    "IsingOffDiagParams",
    "ModeExcitation",
    "DensityBreakdown",
    "mode_grid",
    "mode_drive",
    "mode_drive_diag",
    "mode_drive_offdiag",
    "uq_nonadiabatic_diag",
    "uq_adiabatic_diag",
    "uq_nonadiabatic_offdiag",
    "uq_adiabatic_offdiag",
    "gaussian_widths_diag",
    "gaussian_widths_offdiag",
    "mode_profile_numeric",
    "mode_excitations",
    "defect_density_numeric",
    "defect_density_approx_diag",
    "defect_density_approx_offdiag",
    "fp_probability",
    "n_fp_integral",
    "n_fp_integral_offdiag",
    "n_fp_grid_sum",
    "n_fp_approx",
    "n_fp_coefficient",
    "scaling_fit",
]

_QUAD_LIMIT = 2000
_QUAD_RTOL = 1e-9


def _check_sites(n_sites):
    if not (int(n_sites) == n_sites and n_sites >= 2 and n_sites % 2 == 0):
        raise ValueError(f"n_sites must be an even integer >= 2, got {n_sites!r}")


@dataclass(frozen=True)
class IsingDiagParams:
    """Chain with the drive on the transverse field; ``j`` is J / sqrt(v)."""

    j: float
    eta: float = 0.0
    omega: float = 1.0
    eps_prime: float = 0.0
    n_sites: int = 200

    def __post_init__(self):
        if not (self.j > 0 and math.isfinite(self.j)):
            raise ValueError("j must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not (math.isfinite(self.eta) and math.isfinite(self.eps_prime)):
            raise ValueError("eta and eps_prime must be finite")
        _check_sites(self.n_sites)


@dataclass(frozen=True)
class IsingOffDiagParams:
    """Chain with the drive on the coupling: J(t) = Delta'/2 + B'/4 cos(omega t)."""

    delta_prime: float
    b_prime: float = 0.0
    omega: float = 1.0
    eps_prime: float = 0.0
    n_sites: int = 200

    def __post_init__(self):
        if not (self.delta_prime > 0 and math.isfinite(self.delta_prime)):
            raise ValueError("delta_prime must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not (math.isfinite(self.b_prime) and math.isfinite(self.eps_prime)):
            raise ValueError("b_prime and eps_prime must be finite")
        _check_sites(self.n_sites)

    @property
    def eta_b(self) -> float:
        return self.b_prime / self.omega


@dataclass(frozen=True)
class ModeExcitation:
    """|u_q|^2 of one mode by direct integration and by the two approximations."""

    q: float
    kappa_q: float
    p_numeric: float
    p_nonadiabatic: float
    p_adiabatic: float


@dataclass(frozen=True)
class DensityBreakdown:
    """Defect density; fields a method does not produce are NaN."""

    n_numeric: float = math.nan
    n_kzm_peaks: float = math.nan
    n_fp: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan

    @property
    def n_approx(self) -> float:
        return self.n_kzm_peaks + self.n_fp


def _peaks(alpha, beta):
    return (alpha**-0.5 + beta**-0.5) / (2 * math.sqrt(math.pi))


# ---------------------------------------------------------------------------
# modes

def mode_grid(n_sites: int) -> np.ndarray:
    """Momenta +-(2n - 1) pi / N, n = 1..N/2, in increasing order."""
    _check_sites(n_sites)
    pos = (2 * np.arange(1, n_sites // 2 + 1) - 1) * math.pi / n_sites
    return np.concatenate([-pos[::-1], pos])


def mode_drive_diag(p: IsingDiagParams, q: float) -> DriveParams:
    return DriveParams(delta=-p.j * math.sin(q), eps=p.eps_prime + 2 * p.j * math.cos(q),
                       a_amp=p.eta * p.omega, b_amp=0.0, omega=p.omega)


def mode_drive_offdiag(p: IsingOffDiagParams, q: float) -> DriveParams:
    # E_q = (tau + eps' + 2 Delta' cos q + B' cos q cos(omega tau)) / 2, so the
    # diagonal amplitude in the -A cos convention is -B' cos q
    s, c = math.sin(q), math.cos(q)
    return DriveParams(delta=-p.delta_prime * s, eps=p.eps_prime + 2 * p.delta_prime * c,
                       a_amp=-p.b_prime * c, b_amp=-p.b_prime * s, omega=p.omega)


def mode_drive(p, q: float) -> DriveParams:
    if isinstance(p, IsingDiagParams):
        return mode_drive_diag(p, q)
    if isinstance(p, IsingOffDiagParams):
        return mode_drive_offdiag(p, q)
    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def _coupling(p) -> float:
    return p.j if isinstance(p, IsingDiagParams) else p.delta_prime


# ---------------------------------------------------------------------------
# per-mode approximations

def uq_nonadiabatic_diag(p: IsingDiagParams, q: float,
                         trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """Perturbative |u_q|^2 for a narrow-gap mode, diagonal drive."""
    kappa = (p.j * math.sin(q)) ** 2
    s = harmonic_double_sum(1.0, 0.0, p.eta, p.omega, p.eps_prime + 2 * p.j * math.cos(q), trunc)
    return math.exp(-4 * math.pi * kappa * s)


def uq_nonadiabatic_offdiag(p: IsingOffDiagParams, q: float,
                            trunc: SumTruncation = DEFAULT_TRUNCATION) -> float:
    """Perturbative |u_q|^2 for a narrow-gap mode, off-diagonal drive.

    The Bessel argument is -eta_B cos q, the value the mode equation itself
    produces; with +eta_B cos q the result disagrees with direct integration.
    """
    c = math.cos(q)
    s = harmonic_double_sum(p.delta_prime, p.b_prime, -p.eta_b * c, p.omega,
                            p.eps_prime + 2 * p.delta_prime * c, trunc)
    return math.exp(-4 * math.pi * math.sin(q) ** 2 * s)


def fp_probability(kappa: float, eta: float, omega: float) -> float:
    """pi^2 eta^2 e^{-2 pi kappa} |1F1~(-i kappa; 0; i omega^2)|^2."""
    if eta == 0 or kappa > adiabatic_cutoff(omega):
        return 0.0
    m = sf.kummer_m_regularized(-1j * kappa, 0, 1j * omega * omega)
    return _damped_square(eta * m, kappa)


def uq_adiabatic_diag(p: IsingDiagParams, q: float) -> float:
    """First-order Furry-picture |u_q|^2 for a wide-gap mode, diagonal drive."""
    return fp_probability((p.j * math.sin(q)) ** 2, p.eta, p.omega)


def uq_adiabatic_offdiag(p: IsingOffDiagParams, q: float) -> float:
    """First-order Furry-picture |u_q|^2 for a wide-gap mode, off-diagonal drive."""
    s, c = math.sin(q), math.cos(q)
    kappa = (p.delta_prime * s) ** 2
    if kappa > adiabatic_cutoff(p.omega):
        return 0.0
    z = 1j * p.omega**2
    amp = 0j
    if c != 0:
        amp += p.eta_b * c * sf.kummer_m_regularized(-1j * kappa, 0, z)
    if s != 0:
        amp -= 0.5j * p.b_prime * s * math.sqrt(kappa) * (
            sf.kummer_m_regularized(-1j * kappa, 1, z) + sf.kummer_m_regularized(1 - 1j * kappa, 1, z))
    return _damped_square(amp, kappa)


def _uq_approximations(p, q, trunc):
    if isinstance(p, IsingDiagParams):
        return uq_nonadiabatic_diag(p, q, trunc), uq_adiabatic_diag(p, q)
    return uq_nonadiabatic_offdiag(p, q, trunc), uq_adiabatic_offdiag(p, q)


# ---------------------------------------------------------------------------
# Gaussian peaks

def _check_widths(alpha, beta):
    if not (alpha > 0 and beta > 0):
        raise RegimeError(f"Gaussian widths must be positive, got alpha={alpha}, beta={beta}")
    return alpha, beta


def gaussian_widths_diag(p: IsingDiagParams, trunc: SumTruncation = DEFAULT_TRUNCATION):
    """Curvatures alpha, beta of log|u_q|^2 at q = 0 and q = +-pi."""
    j2 = p.j * p.j
    alpha = 4 * math.pi * j2 * harmonic_double_sum(1.0, 0.0, p.eta, p.omega, p.eps_prime + 2 * p.j, trunc)
    beta = 4 * math.pi * j2 * harmonic_double_sum(1.0, 0.0, p.eta, p.omega, p.eps_prime - 2 * p.j, trunc)
    return _check_widths(alpha, beta)


def gaussian_widths_offdiag(p: IsingOffDiagParams, trunc: SumTruncation = DEFAULT_TRUNCATION):
    """Second-order expansion of :func:`uq_nonadiabatic_offdiag` at q = 0 and q = +-pi."""
    d, b = p.delta_prime, p.b_prime
    alpha = 4 * math.pi * harmonic_double_sum(d, b, -p.eta_b, p.omega, p.eps_prime + 2 * d, trunc)
    beta = 4 * math.pi * harmonic_double_sum(d, b, p.eta_b, p.omega, p.eps_prime - 2 * d, trunc)
    return _check_widths(alpha, beta)


# ---------------------------------------------------------------------------
# non-perturbative part

def _quad(f, lo, hi, points=None):
    res = integrate.quad(f, lo, hi, limit=_QUAD_LIMIT, epsabs=1e-15,
                         epsrel=_QUAD_RTOL, points=points, full_output=1)
    if len(res) > 3:  # quad appends a message when it gives up
        raise sf.ConvergenceError(f"quadrature did not converge: {res[3]}")
    return res[0]


def _peak_points(coupling, hi):
    # the integrand varies on the scale 1/coupling near the closing gap
    step = 1.0 / coupling
    return [x for x in step * np.arange(1, 12) if x < hi] or None


def n_fp_integral(p: IsingDiagParams) -> float:
    """int_{-pi}^{pi} dq/2pi of the Furry-picture mode probability."""
    if p.eta == 0:
        return 0.0
    # P_FP depends on q through sin^2 q only
    f = functools.partial(_fp_of_q, p.j, p.eta, p.omega)
    return 2 / math.pi * _quad(f, 0.0, math.pi / 2, _peak_points(p.j, math.pi / 2))


def _fp_of_q(j, eta, omega, q):
    return fp_probability((j * math.sin(q)) ** 2, eta, omega)


def n_fp_integral_offdiag(p: IsingOffDiagParams) -> float:
    """int_{-pi}^{pi} dq/2pi of :func:`uq_adiabatic_offdiag`, using q -> -q symmetry."""
    if p.b_prime == 0:
        return 0.0
    f = functools.partial(uq_adiabatic_offdiag, p)
    pts = _peak_points(p.delta_prime, math.pi / 2)
    near_pi = [math.pi - x for x in (pts or [])][::-1]
    return (_quad(f, 0.0, math.pi / 2, pts) + _quad(f, math.pi / 2, math.pi, near_pi or None)) / math.pi


def n_fp_grid_sum(p) -> float:
    """(1/N) sum over the mode grid of the Furry-picture mode probability."""
    qs = mode_grid(p.n_sites)
    if isinstance(p, IsingDiagParams):
        return float(np.mean([uq_adiabatic_diag(p, q) for q in qs]))
    return float(np.mean([uq_adiabatic_offdiag(p, q) for q in qs]))


@functools.lru_cache(maxsize=256)
def _scaled_fp_integral(omega: float) -> float:
    """int_0^inf dx e^{-2 pi x^2} |1F1~(-i x^2; 0; i omega^2)|^2."""
    f = functools.partial(_scaled_fp_integrand, omega)
    # the integrand is below e^-85 once x^2 passes the adiabatic cutoff
    hi = math.sqrt(adiabatic_cutoff(omega))
    return _quad(f, 0.0, hi, [float(k) for k in range(1, math.ceil(hi))] or None)


def _scaled_fp_integrand(omega, x):
    k = x * x
    m = sf.kummer_m_regularized(-1j * k, 0, 1j * omega * omega)
    return _damped_square(m, k) / math.pi**2


def n_fp_coefficient(omega: float, eta: float) -> float:
    """Coefficient c of 1/J in the large-J form n_FP ~ c / J."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    if eta == 0:
        return 0.0
    return 2 * math.pi * eta * eta * _scaled_fp_integral(float(omega))


def n_fp_approx(p: IsingDiagParams) -> float:
    """Large-J form of :func:`n_fp_integral`."""
    return n_fp_coefficient(p.omega, p.eta) / p.j


# ---------------------------------------------------------------------------
# densities

def defect_density_approx_diag(p: IsingDiagParams,
                               trunc: SumTruncation = DEFAULT_TRUNCATION) -> DensityBreakdown:
    alpha, beta = gaussian_widths_diag(p, trunc)
    return DensityBreakdown(n_kzm_peaks=_peaks(alpha, beta), n_fp=n_fp_integral(p),
                            alpha=alpha, beta=beta)


def defect_density_approx_offdiag(p: IsingOffDiagParams,
                                  trunc: SumTruncation = DEFAULT_TRUNCATION) -> DensityBreakdown:
    alpha, beta = gaussian_widths_offdiag(p, trunc)
    return DensityBreakdown(n_kzm_peaks=_peaks(alpha, beta), n_fp=n_fp_integral_offdiag(p),
                            alpha=alpha, beta=beta)


def mode_profile_numeric(p, qs, cfg: IntegrationConfig = IntegrationConfig(),
                         workers: int = 1) -> np.ndarray:
    """|u_q|^2 by direct integration at the given momenta."""
    return survival_probabilities([mode_drive(p, float(q)) for q in qs], cfg, workers)


def defect_density_numeric(p, cfg: IntegrationConfig = IntegrationConfig(), workers: int = 1,
                           use_symmetry: bool = True) -> DensityBreakdown:
    """Grid average of |u_q|^2 by direct integration of every mode.

    The mode equation is invariant under q -> -q up to a sigma_z conjugation,
    so by default only q > 0 is integrated and counted twice.
    """
    qs = mode_grid(p.n_sites)
    if use_symmetry:
        probs = mode_profile_numeric(p, qs[qs > 0], cfg, workers)
        return DensityBreakdown(n_numeric=float(2 * np.sum(probs) / p.n_sites))
    probs = mode_profile_numeric(p, qs, cfg, workers)
    return DensityBreakdown(n_numeric=float(np.sum(probs) / p.n_sites))


def mode_excitations(p, qs=None, cfg: IntegrationConfig = IntegrationConfig(),
                     trunc: SumTruncation = DEFAULT_TRUNCATION, workers: int = 1):
    """Per-mode comparison of the numerical and approximate |u_q|^2."""
    qs = mode_grid(p.n_sites) if qs is None else np.asarray(qs, dtype=float)
    numeric = mode_profile_numeric(p, qs, cfg, workers)
    coupling = _coupling(p)
    out = []
    for q, pn in zip(qs, numeric):
        nonad, adi = _uq_approximations(p, float(q), trunc)
        out.append(ModeExcitation(float(q), (coupling * math.sin(q)) ** 2, float(pn), nonad, adi))
    return out


def scaling_fit(points):
    """Least-squares power law density = prefactor * coupling**exponent.

    Returns (exponent, prefactor, residual) with residual the RMS deviation
    of log(density) from the fit.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least three (coupling, density) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("couplings and densities must be positive")
    if np.unique(x).size != x.size:
        raise ValueError("couplings must be distinct")
    lx, ly = np.log(x), np.log(y)
    slope, icept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icept)
    return float(slope), float(math.exp(icept)), float(np.sqrt(np.mean(resid**2)))
