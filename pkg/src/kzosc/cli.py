"""Command-line front end: parameter sweeps to CSV/JSON, and the self-test.

Every run resolves one configuration dictionary: built-in defaults, then the
JSON document given by ``--config`` (a run manifest is accepted too), then
explicit command-line flags, later sources winning.  When ``--out`` is given,
a manifest holding the resolved configuration is written next to the output
as ``<out>.manifest.json``; passing it back through ``--config`` reproduces the
output byte for byte.

Exit codes: 0 success, 1 runtime or numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import copy
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import metadata

import numpy as np

from . import furry, ising, pt, tdse
from .selftest import run_selftest

__all__ = ["SweepSpec", "RunManifest", "ConfigError", "main"]

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration; reported with the offending field."""


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------------------
# configuration types

SWEEP_AXES = ("omega", "b_amp", "eta", "j", "delta_prime")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    min: float
    max: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis: unknown axis {self.axis!r}; expected one of {', '.join(SWEEP_AXES)}")
        if not (isinstance(self.steps, int) and self.steps >= 2):
            raise ConfigError(f"sweep.steps: must be an integer >= 2, got {self.steps!r}")
        if not self.min < self.max:
            raise ConfigError(f"sweep.min/max: need min < max, got {self.min!r}, {self.max!r}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep.scale: must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and not self.min > 0:
            raise ConfigError("sweep.min: log scale requires min > 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.steps)
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    tool_version: str
    wall_time_seconds: float


DEFAULTS = {
    "twolevel": {
        "params": {"delta": 0.2, "eps": 0.5, "eta": 0.0, "b_amp": 0.1, "omega": 2.0},
        "sweep": {"axis": "omega", "min": 0.5, "max": 8.0, "steps": 40, "scale": "linear"},
        "methods": ["tdse", "pt", "pt_special", "fp_exact", "fp_adiabatic"],
        "n_max": 10,
        "integration": {"tau_start": -500.0, "tau_end": 500.0, "rel_tol": 1e-9, "abs_tol": 1e-12},
    },
    "ising": {
        "model": "diag",
        "params": {"j": 7.0, "eta": 0.05, "omega": 6.0, "eps_prime": 0.5, "n_sites": 200},
        "output": "density",
        "sweep": {"axis": "j", "min": 4.0, "max": 10.0, "steps": 7, "scale": "linear"},
        "n_max": 10,
        "integration": {"tau_start": -500.0, "tau_end": 500.0, "rel_tol": 1e-9, "abs_tol": 1e-12},
    },
    "nfp-scan": {
        "omega": [6.0],
        "eta": [0.05],
        "j": {"min": 2.0, "max": 16.0, "steps": 15, "scale": "linear"},
        "grid_sites": 200,
    },
    "selftest": {},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("--config: top level must be a JSON object")
    if "command" in doc and "parameters" in doc:  # a run manifest
        if doc["command"] != command:
            raise ConfigError(f"--config: manifest is for {doc['command']!r}, not {command!r}")
        doc = doc["parameters"]
    return doc


def _number(section, key, value, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{section}.{key}: expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{section}.{key}: must be positive, got {value!r}")
    return float(value)


def _integration(cfg) -> tdse.IntegrationConfig:
    sec = cfg.get("integration", {})
    allowed = {"tau_start", "tau_end", "rel_tol", "abs_tol", "max_step", "method", "frame"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"integration: unknown field(s) {sorted(unknown)}")
    try:
        return tdse.IntegrationConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integration: {exc}") from None


def _sweep(cfg, allowed) -> SweepSpec:
    sec = cfg.get("sweep")
    if not isinstance(sec, dict):
        raise ConfigError("sweep: missing or not an object")
    unknown = set(sec) - {"axis", "min", "max", "steps", "scale"}
    if unknown:
        raise ConfigError(f"sweep: unknown field(s) {sorted(unknown)}")
    try:
        spec = SweepSpec(axis=sec.get("axis"), min=_number("sweep", "min", sec.get("min")),
                         max=_number("sweep", "max", sec.get("max")), steps=sec.get("steps"),
                         scale=sec.get("scale", "linear"))
    except TypeError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    if spec.axis not in allowed:
        raise ConfigError(f"sweep.axis: {spec.axis!r} is not valid here; expected one of {', '.join(allowed)}")
    return spec


def _truncation(cfg) -> pt.SumTruncation:
    try:
        return pt.SumTruncation(cfg.get("n_max", 10))
    except ValueError as exc:
        raise ConfigError(f"n_max: {exc}") from None


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _render(columns, rows, fmt, summary=None) -> str:
    if fmt == "json":
        doc = {"columns": list(columns),
               "rows": [[None if v is None else float(v) for v in r] for r in rows]}
        if summary is not None:
            doc["summary"] = summary
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _emit(text, out_path, command, resolved, t0):
    if out_path is None:
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    manifest = RunManifest(command, resolved, tool_version(), time.perf_counter() - t0)
    with open(out_path + ".manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pool_map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# twolevel

_TWOLEVEL_METHODS = ("tdse", "pt", "pt_special", "fp_exact", "fp_adiabatic")


def _drive_from(params) -> tdse.DriveParams:
    allowed = {"delta", "eps", "eta", "a_amp", "b_amp", "omega"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"params: unknown field(s) {sorted(unknown)}")
    if "eta" in params and "a_amp" in params:
        raise ConfigError("params: give either eta or a_amp, not both")
    vals = {k: _number("params", k, v) for k, v in params.items()}
    omega = vals.get("omega", 1.0)
    a_amp = vals["a_amp"] if "a_amp" in vals else vals.get("eta", 0.0) * omega
    try:
        return tdse.DriveParams(delta=vals.get("delta", 0.0), eps=vals.get("eps", 0.0),
                                a_amp=a_amp, b_amp=vals.get("b_amp", 0.0), omega=omega)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None


def _twolevel_point(args):
    p, methods, cfg, trunc = args
    row = {}

    def guarded(fn):
        try:
            return fn()
        except (furry.RegimeError, pt.DomainError):
            return None  # outside the method's domain: leave the field empty

    if "tdse" in methods:
        row["p_tdse"] = tdse.survival_probability(p, cfg)
    if "pt" in methods:
        row["p_pt"] = guarded(lambda: pt.p_pt(p, trunc))
    if "pt_special" in methods:
        if p.a_amp == 0:
            row["p_pt_special"] = pt.p_pt_a0(p)
        elif p.b_amp == 0:
            row["p_pt_special"] = guarded(lambda: pt.p_pt_b0(p, trunc))
    if "fp_exact" in methods:
        row["p_fp_exact"] = guarded(lambda: furry.p_fp_exact(p, cfg.tau_start, cfg.tau_end))
    if "fp_adiabatic" in methods:
        row["p_fp_adiabatic"] = furry.p_fp_adiabatic(p)
    return row


def cmd_twolevel(cfg, workers):
    sweep = _sweep(cfg, ("omega", "b_amp", "eta"))
    base = dict(cfg.get("params", {}))
    methods = cfg.get("methods", list(_TWOLEVEL_METHODS))
    bad = [m for m in methods if m not in _TWOLEVEL_METHODS]
    if bad:
        raise ConfigError(f"methods: unknown method(s) {bad}; expected {list(_TWOLEVEL_METHODS)}")
    icfg, trunc = _integration(cfg), _truncation(cfg)
    _drive_from(base)
    points = []
    for x in sweep.values():
        prm = dict(base)
        if sweep.axis == "eta":
            prm.pop("a_amp", None)
        prm[sweep.axis] = float(x)
        points.append(_drive_from(prm))
    results = _pool_map(_twolevel_point, [(p, tuple(methods), icfg, trunc) for p in points], workers)
    columns = [sweep.axis, "p_tdse", "p_pt", "p_pt_special", "p_fp_exact", "p_fp_adiabatic"]
    rows = [[float(x)] + [res.get(c) for c in columns[1:]] for x, res in zip(sweep.values(), results)]
    return columns, rows, None


# ---------------------------------------------------------------------------
# ising

def _ising_params(cfg, overrides=None):
    model = cfg.get("model", "diag")
    params = dict(cfg.get("params", {}))
    params.update(overrides or {})
    if model == "diag":
        fields, cls = {"j", "eta", "omega", "eps_prime", "n_sites"}, ising.IsingDiagParams
    elif model == "offdiag":
        fields, cls = {"delta_prime", "b_prime", "omega", "eps_prime", "n_sites"}, ising.IsingOffDiagParams
    else:
        raise ConfigError(f"model: must be 'diag' or 'offdiag', got {model!r}")
    unknown = set(params) - fields
    if unknown:
        raise ConfigError(f"params: unknown field(s) {sorted(unknown)} for model {model!r}")
    kw = {}
    for k, v in params.items():
        if k == "n_sites":
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"params.n_sites: expected an integer, got {v!r}")
            kw[k] = v
        else:
            kw[k] = _number("params", k, v)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None


def _approx_density(prm, trunc):
    try:
        if isinstance(prm, ising.IsingDiagParams):
            return ising.defect_density_approx_diag(prm, trunc)
        return ising.defect_density_approx_offdiag(prm, trunc)
    except furry.RegimeError:
        return None


def cmd_ising(cfg, workers):
    icfg, trunc = _integration(cfg), _truncation(cfg)
    output = cfg.get("output", "density")
    if output == "modes":
        prm = _ising_params(cfg)
        ex = ising.mode_excitations(prm, cfg=icfg, trunc=trunc, workers=workers)
        columns = ["q", "kappa_q", "p_numeric", "p_nonadiabatic", "p_adiabatic"]
        return columns, [[e.q, e.kappa_q, e.p_numeric, e.p_nonadiabatic, e.p_adiabatic] for e in ex], None
    if output != "density":
        raise ConfigError(f"output: must be 'density' or 'modes', got {output!r}")
    coupling = "j" if cfg.get("model", "diag") == "diag" else "delta_prime"
    sweep = _sweep(cfg, (coupling,))
    _ising_params(cfg)
    rows = []
    for x in sweep.values():
        prm = _ising_params(cfg, {coupling: float(x)})
        num = ising.defect_density_numeric(prm, icfg, workers).n_numeric
        br = _approx_density(prm, trunc)
        qkzm = 1.0 / (math.pi * math.sqrt(2.0) * float(x))
        if br is None:
            rows.append([float(x), num, None, None, None, qkzm])
        else:
            rows.append([float(x), num, br.n_approx, br.n_kzm_peaks, br.n_fp, qkzm])
    columns = ["coupling", "n_numeric", "n_approx", "n_kzm_peaks", "n_fp", "n_qkzm_no_drive"]
    summary = None
    if len(rows) >= 3:
        exp_, pref, res = ising.scaling_fit([(r[0], r[1]) for r in rows])
        summary = {"scaling_fit_n_numeric": {"exponent": exp_, "prefactor": pref, "residual": res}}
    return columns, rows, summary


# ---------------------------------------------------------------------------
# nfp-scan

def _axis_values(name, spec, positive=False):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        vals = [float(spec)]
    elif isinstance(spec, list):
        if not spec:
            raise ConfigError(f"{name}: empty list")
        vals = [_number(name, str(i), v) for i, v in enumerate(spec)]
    elif isinstance(spec, dict):
        unknown = set(spec) - {"min", "max", "steps", "scale"}
        if unknown:
            raise ConfigError(f"{name}: unknown field(s) {sorted(unknown)}")
        sw = SweepSpec(axis="omega", min=_number(name, "min", spec.get("min")),
                       max=_number(name, "max", spec.get("max")), steps=spec.get("steps"),
                       scale=spec.get("scale", "linear"))
        vals = [float(v) for v in sw.values()]
    else:
        raise ConfigError(f"{name}: expected a number, a list or a sweep object")
    if positive and any(v <= 0 for v in vals):
        raise ConfigError(f"{name}: values must be positive")
    return vals


def _nfp_point(args):
    om, eta, j, n_sites = args
    prm = ising.IsingDiagParams(j, eta, om, 0.0, n_sites)
    return [om, eta, j, ising.n_fp_integral(prm), ising.n_fp_approx(prm),
            ising.n_fp_coefficient(om, eta), ising.n_fp_grid_sum(prm)]


def cmd_nfp_scan(cfg, workers):
    omegas = _axis_values("omega", cfg.get("omega"), positive=True)
    etas = _axis_values("eta", cfg.get("eta"))
    js = _axis_values("j", cfg.get("j"), positive=True)
    n_sites = cfg.get("grid_sites", 200)
    if isinstance(n_sites, bool) or not isinstance(n_sites, int) or n_sites < 2 or n_sites % 2:
        raise ConfigError(f"grid_sites: must be an even integer >= 2, got {n_sites!r}")
    jobs = [(om, eta, j, n_sites) for om in omegas for eta in etas for j in js]
    rows = _pool_map(_nfp_point, jobs, workers)
    columns = ["omega", "eta", "j", "n_fp_integral", "n_fp_approx", "n_fp_coefficient", f"grid_sum_N{n_sites}"]
    return columns, rows, None


# ---------------------------------------------------------------------------
# argument parsing

COMMANDS = {"twolevel": cmd_twolevel, "ising": cmd_ising, "nfp-scan": cmd_nfp_scan}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: config error: {message}\n")
        sys.exit(EXIT_CONFIG)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", help="JSON configuration (or a run manifest)")
    g.add_argument("--out", metavar="PATH", help="output file (default stdout); a manifest is written beside it")
    g.add_argument("--workers", type=int, metavar="K", default=None,
                   help="concurrent parameter points (default: available cores)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _sweep_flags(p: argparse.ArgumentParser, axes):
    g = p.add_argument_group("sweep (overrides the config's sweep object)")
    g.add_argument("--axis", choices=axes)
    g.add_argument("--min", type=float, dest="sweep_min")
    g.add_argument("--max", type=float, dest="sweep_max")
    g.add_argument("--steps", type=int)
    g.add_argument("--scale", choices=("linear", "log"))


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="kzosc", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tl = sub.add_parser("twolevel", parents=[common], help="two-level survival probability sweep")
    for name in ("delta", "eps", "eta", "a_amp", "b_amp", "omega"):
        tl.add_argument(f"--{name.replace('_', '-')}", type=float, dest=f"p_{name}")
    tl.add_argument("--methods", help="comma-separated subset of " + ",".join(_TWOLEVEL_METHODS))
    tl.add_argument("--n-max", type=int)
    _sweep_flags(tl, SWEEP_AXES)

    isg = sub.add_parser("ising", parents=[common], help="Ising defect densities or mode profiles")
    isg.add_argument("--model", choices=("diag", "offdiag"))
    isg.add_argument("--output", choices=("density", "modes"))
    for name in ("j", "eta", "delta_prime", "b_prime", "omega", "eps_prime"):
        isg.add_argument(f"--{name.replace('_', '-')}", type=float, dest=f"p_{name}")
    isg.add_argument("--n-sites", type=int, dest="p_n_sites")
    isg.add_argument("--n-max", type=int)
    _sweep_flags(isg, SWEEP_AXES)

    nf = sub.add_parser("nfp-scan", parents=[common], help="non-perturbative density n_FP scans")
    nf.add_argument("--omega", type=float, nargs="+")
    nf.add_argument("--eta", type=float, nargs="+")
    nf.add_argument("--j", type=float, nargs="+")
    nf.add_argument("--grid-sites", type=int)

    st = sub.add_parser("selftest", parents=[common], help="run the property suites")
    st.add_argument("--strict", action="store_true", help="treat regime warnings as failures")
    return parser


def _resolve(args) -> dict:
    cfg = _merge(DEFAULTS[args.command], _load_config(args.config, args.command))
    params = {k[2:]: v for k, v in vars(args).items() if k.startswith("p_") and v is not None}
    if params:
        if args.command == "twolevel" and ("eta" in params or "a_amp" in params):
            cfg["params"].pop("eta", None)
            cfg["params"].pop("a_amp", None)
        if args.command == "ising" and getattr(args, "model", None) and args.model != cfg.get("model"):
            cfg["params"] = {}
        cfg["params"] = _merge(cfg.get("params", {}), params)
    for key in ("model", "output"):
        if getattr(args, key, None) is not None:
            cfg[key] = getattr(args, key)
    if getattr(args, "n_max", None) is not None:
        cfg["n_max"] = args.n_max
    if getattr(args, "methods", None):
        cfg["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    sweep_over = {k: getattr(args, a) for k, a in (("axis", "axis"), ("min", "sweep_min"), ("max", "sweep_max"),
                                                  ("steps", "steps"), ("scale", "scale"))
                  if getattr(args, a, None) is not None}
    if sweep_over:
        cfg["sweep"] = _merge(cfg.get("sweep", {}), sweep_over)
    if args.command == "ising" and "sweep" in cfg and cfg.get("output", "density") == "density":
        coupling = "j" if cfg.get("model", "diag") == "diag" else "delta_prime"
        if "axis" not in sweep_over and cfg["sweep"].get("axis") in ("j", "delta_prime"):
            cfg["sweep"]["axis"] = coupling
    if args.command == "nfp-scan":
        for key in ("omega", "eta", "j"):
            if getattr(args, key, None) is not None:
                cfg[key] = list(getattr(args, key))
        if args.grid_sites is not None:
            cfg["grid_sites"] = args.grid_sites
    return cfg


def _selftest(args, cfg_strict) -> int:
    strict = args.strict or cfg_strict or os.environ.get("KZOSC_SELFTEST_STRICT") == "1"
    report = run_selftest(strict=strict)
    text = "\n".join(report.lines()) + "\n"
    if args.format == "json":
        sys.stderr.write(text)
        text = json.dumps(report.to_json(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        sys.stdout.write("\n".join(report.lines()) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_RUNTIME


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _resolve(args)
        if args.command == "selftest":
            return _selftest(args, bool(cfg.get("strict", False)))
        workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
        if workers < 1:
            raise ConfigError("--workers: must be >= 1")
        columns, rows, summary = COMMANDS[args.command](cfg, workers)
    except ConfigError as exc:
        sys.stderr.write(f"kzosc: config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # numerical or runtime failure
        sys.stderr.write(f"kzosc: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME
    if summary and args.format == "csv":
        sys.stderr.write(json.dumps(summary) + "\n")
    _emit(_render(columns, rows, args.format, summary), args.out, args.command, cfg, t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
