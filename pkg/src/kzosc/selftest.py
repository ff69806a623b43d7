"""Property suites run by ``kzosc selftest``.

Each check compares a computed error against a tolerance.  Checks marked
``warning`` flag regime-validity limits of the approximations rather than
defects; they only fail the run in strict mode.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import furry, ising, pt, specfun, tdse

__all__ = ["CheckResult", "SelftestReport", "REPORT_SCHEMA", "run_selftest"]

REPORT_SCHEMA = {
    "type": "object",
    "required": ["passed", "strict", "n_checks", "n_failed", "n_warnings", "wall_time_seconds", "checks"],
    "properties": {
        "passed": {"type": "boolean"},
        "strict": {"type": "boolean"},
        "n_checks": {"type": "integer", "minimum": 0},
        "n_failed": {"type": "integer", "minimum": 0},
        "n_warnings": {"type": "integer", "minimum": 0},
        "wall_time_seconds": {"type": "number", "minimum": 0},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["suite", "name", "passed", "error", "tolerance", "severity"],
                "properties": {
                    "suite": {"type": "string"},
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "error": {"type": ["number", "null"]},
                    "tolerance": {"type": "number"},
                    "severity": {"enum": ["error", "warning"]},
                    "detail": {"type": "string"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    error: float | None
    tolerance: float
    severity: str = "error"
    detail: str = ""


@dataclass
class SelftestReport:
    strict: bool
    checks: list = field(default_factory=list)
    wall_time_seconds: float = 0.0

    def _counts_as_failure(self, c: CheckResult) -> bool:
        return not c.passed and (c.severity == "error" or self.strict)

    @property
    def failures(self):
        return [c for c in self.checks if self._counts_as_failure(c)]

    @property
    def warnings(self):
        return [c for c in self.checks if not c.passed and c.severity == "warning"]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "strict": self.strict,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures),
            "n_warnings": len(self.warnings),
            "wall_time_seconds": self.wall_time_seconds,
            "checks": [asdict(c) for c in self.checks],
        }

    def lines(self):
        for c in self.checks:
            if c.passed:
                tag = "PASS"
            else:
                tag = "FAIL" if self._counts_as_failure(c) else "WARN"
            err = "n/a" if c.error is None else f"{c.error:.3g}"
            extra = f"  ({c.detail})" if c.detail else ""
            yield f"{tag}  {c.suite}.{c.name}: error {err} <= {c.tolerance:g}{extra}"
        verdict = "PASSED" if self.passed else "FAILED"
        yield (f"{verdict}: {len(self.checks)} checks, {len(self.failures)} failed, "
               f"{len(self.warnings)} warnings, {self.wall_time_seconds:.1f}s")


class _Suite:
    def __init__(self, name, out):
        self.name, self.out = name, out

    def check(self, name, fn, tolerance, severity="error"):
        try:
            err = float(fn())
            ok = bool(err <= tolerance)
            detail = ""
        except Exception as exc:  # a crash is a failed check, not a crashed run
            err, ok, detail = None, False, f"{type(exc).__name__}: {exc}"
        self.out.append(CheckResult(self.name, name, ok, err, tolerance, severity, detail))


def _specfun(out):
    s = _Suite("specfun", out)
    for c in specfun.specfun_check():
        s.check(c.name, lambda c=c: c.error, c.tolerance)
    for kind, nu1, nu2, om in ((1, 1j, -1j, 3.0), (2, 1j - 1, -1j - 1, 3.0),
                               (3, 0.25j, -0.25j, 1.0), (1, 0.25j - 1, -0.25j - 1, 1.0)):
        def identity(kind=kind, nu1=nu1, nu2=nu2, om=om):
            exact = furry.pcfd_product_transform(kind, nu1, nu2, om)
            return abs(furry.pcfd_product_transform_numeric(kind, nu1, nu2, om) - exact) / abs(exact)
        s.check(f"transform identity {kind} at nu1={nu1:.3g}, omega={om:g}", identity, 1e-4)


def _tdse(out):
    s = _Suite("tdse", out)
    cfg = tdse.IntegrationConfig()

    def unitarity():
        p = tdse.DriveParams.from_eta(0.5, 0.5, 0.2, 0.3, 3.0)
        _, stats = tdse.trajectory(p, np.linspace(-400, 400, 81), cfg)
        return stats.max_norm_deviation

    s.check("norm conserved (<= 10 rel_tol)", unitarity, 10 * cfg.rel_tol)
    s.check("LZSM limit at Delta=0.5",
            lambda: abs(tdse.survival_probability(tdse.DriveParams(0.5)) - math.exp(-math.pi / 2)), 1e-3)

    def periodic():
        p = tdse.DriveParams.from_eta(0.5, 0.5, 0.2, 0.3, 3.0)
        shifted = tdse.DriveParams.from_eta(0.5, 0.5 + p.period, 0.2, 0.3, 3.0)
        wide = tdse.IntegrationConfig(tau_start=cfg.tau_start - p.period, tau_end=cfg.tau_end + p.period)
        return abs(tdse.survival_probability(p, cfg) - tdse.survival_probability(shifted, wide))

    s.check("eps-periodicity 2pi/omega", periodic, 1e-6)

    def two_integrators():
        p = tdse.DriveParams.from_eta(0.3, 0.5, 0.0, 0.2, 2.0)
        dop = tdse.IntegrationConfig(method="dop853", rel_tol=1e-10, abs_tol=1e-13)
        return abs(tdse.survival_probability(p, cfg) - tdse.survival_probability(p, dop))

    s.check("Magnus vs Dormand-Prince", two_integrators, 1e-6)


def _pt(out):
    s = _Suite("pt", out)
    s.check("reduction to LZSM (A = B = 0)",
            lambda: abs(pt.p_pt(tdse.DriveParams(0.3, 0.5, 0.0, 0.0, 2.0)) - pt.lzsm_probability(0.3)), 1e-12)
    p_a0 = tdse.DriveParams(0.2, 0.5, 0.0, 0.3, 2.0)
    s.check("p_pt(A=0) = closed form", lambda: abs(pt.p_pt(p_a0, pt.SumTruncation(20)) - pt.p_pt_a0(p_a0)), 1e-12)

    def periodic():
        p = tdse.DriveParams.from_eta(0.2, 0.5, 0.5, 0.2, 2.0)
        q = tdse.DriveParams.from_eta(0.2, 0.5 + p.period, 0.5, 0.2, 2.0)
        return abs(pt.p_pt(p) - pt.p_pt(q))

    s.check("eps-periodicity 2pi/omega", periodic, 1e-12)

    def truncation():
        p = tdse.DriveParams.from_eta(0.2, 0.5, 0.5, 0.2, 2.0)
        return abs(pt.p_pt(p, pt.SumTruncation(10)) - pt.p_pt(p, pt.SumTruncation(40)))

    s.check("n_max 10 vs 40", truncation, 1e-8)


def _furry(out):
    s = _Suite("furry", out)

    def unitary():
        u = furry.u0_propagator(0.5625, 0.5, 500.0, -500.0)
        return abs(u.norm - 1)

    s.check("U0 unitary", unitary, 1e-9)
    s.check("no drive -> LZSM",
            lambda: abs(furry.p_fp_exact(tdse.DriveParams(0.75, 0.5)) - math.exp(-2 * math.pi * 0.5625)), 1e-3)
    for name, p in (("eta", tdse.DriveParams.from_eta(0.75, 0.5, 0.05, 0.0, 4.0)),
                    ("B", tdse.DriveParams.from_eta(0.75, 0.5, 0.0, 0.1, 3.0))):
        s.check(f"exact vs quadrature ({name} drive)",
                lambda p=p: abs(furry.p_fp_exact(p) - furry.p_fp_numeric(p)), 1e-3)

    def asymptotic_f1():
        exact = furry.f_coefficients(0.5625, 0.0, -500.0)[0]
        return abs(furry.f_coefficients_asymptotic(0.5625, -500.0).f1 - exact) / abs(exact)

    s.check("leading-order f1 at tau0=-500 (relative)", asymptotic_f1, 1e-3, "warning")

    def adiabatic_vs_exact():
        p = tdse.DriveParams.from_eta(1.0, 0.5, 0.02, 0.3, 3.0)
        ex = furry.p_fp_exact(p)
        return abs(furry.p_fp_adiabatic(p) - ex) / ex

    s.check("adiabatic form vs exact at Delta=1", adiabatic_vs_exact, 0.1, "warning")


def _ising(out):
    s = _Suite("ising", out)
    diag = ising.IsingDiagParams(2.0, 0.05, 6.0, 0.5, 16)
    off = ising.IsingOffDiagParams(2.0, 0.3, 5.0, 0.5, 16)
    q = math.pi / 8
    for label, prm in (("diagonal", diag), ("off-diagonal", off)):
        s.check(f"+-q symmetry ({label})",
                lambda prm=prm: float(np.ptp(ising.mode_profile_numeric(prm, [q, -q]))), 1e-10)
    s.check("nonadiabatic form = p_pt on the mode",
            lambda: abs(ising.uq_nonadiabatic_diag(diag, q) - pt.p_pt_b0(ising.mode_drive_diag(diag, q))), 1e-12)
    s.check("off-diagonal nonadiabatic form = p_pt on the mode",
            lambda: abs(ising.uq_nonadiabatic_offdiag(off, q) - pt.p_pt(ising.mode_drive_offdiag(off, q))), 1e-10)
    s.check("adiabatic form = p_fp_adiabatic on the mode",
            lambda: abs(ising.uq_adiabatic_diag(diag, q) - furry.p_fp_adiabatic(ising.mode_drive_diag(diag, q))),
            1e-12)
    s.check("undriven density = 1/(pi sqrt2 J)",
            lambda: abs(ising.defect_density_approx_diag(ising.IsingDiagParams(7.0)).n_approx * math.pi
                        * math.sqrt(2) * 7.0 - 1), 1e-12)


SUITES = {"specfun": _specfun, "tdse": _tdse, "pt": _pt, "furry": _furry, "ising": _ising}


def run_selftest(strict: bool = False, suites=None) -> SelftestReport:
    report = SelftestReport(strict=strict)
    t0 = time.perf_counter()
    for name in suites or SUITES:
        SUITES[name](report.checks)
    report.wall_time_seconds = time.perf_counter() - t0
    return report
