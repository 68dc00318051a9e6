"""Command-line entry point.

Subcommands ``validate``, ``solve``, ``radius``, ``bounds``, ``compare`` and
``report`` share one JSON configuration format.  Exit codes: 0 success,
1 numerical failure (instability, blow-up, non-convergence), 2 usage or
configuration error.  Errors are also written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analytic import FitOptions, analytic_profile, radius_from_spectrum
from .bounds import NonConvergedProfileError, bounds_trace, c0_floor, estimate_A
from .evolution import SolveOptions, StabilityError, integral_from_path, solve
from .expressions import ExprError
from .oracles import CASES, CaseRun, case_defaults, case_problem, run_case_full
from .spectral import SpectralField
from .system import SampleLattice, strict_hyperbolicity_check, validate_symmetric

__all__ = ["ConfigError", "RunConfig", "dispatch", "load_config", "main", "parse_config"]

VARIANTS = ("conservative", "example")
THREADS_ENV = "STRIP_RADIUS_THREADS"


class ConfigError(ValueError):
    """Schema violation; ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _positive(v):
    return None if _number(v) and v > 0 else "must be a positive number"


def _nonneg(v):
    return None if _number(v) and v >= 0 else "must be a nonnegative number"


def _int_at_least(lo):
    def check(v):
        return None if isinstance(v, int) and not isinstance(v, bool) and v >= lo else f"must be an integer >= {lo}"
    return check


def _power_of_two(v):
    if isinstance(v, int) and not isinstance(v, bool) and v >= 4 and not v & (v - 1):
        return None
    return "must be a power of two >= 4"


def _one_of(*options):
    def check(v):
        return None if v in options else f"must be one of {', '.join(map(str, options))}"
    return check


def _string(v):
    return None if isinstance(v, str) else "must be a string"


def _unit_interval(v):
    return None if _number(v) and 0 <= v < 1 else "must lie in [0, 1)"


def _open_unit(v):
    return None if _number(v) and 0 < v < 1 else "must lie in (0, 1)"


def _optional(check):
    def wrapped(v):
        return None if v is None else check(v)
    return wrapped


def _spec(check, doc=""):
    return {"check": check, "doc": doc}


@dataclass(frozen=True)
class GridConfig:
    L: float | None = field(default=None, metadata=_spec(_optional(_positive)))
    M: int | None = field(default=None, metadata=_spec(_optional(_power_of_two)))


@dataclass(frozen=True)
class SolverConfig:
    T: float | None = field(default=None, metadata=_spec(_optional(_nonneg)))
    dt: float | None = field(default=None, metadata=_spec(_optional(_positive)))
    stride: int = field(default=1, metadata=_spec(_int_at_least(1)))
    dealias: bool = field(default=True, metadata=_spec(_one_of(True, False)))


@dataclass(frozen=True)
class FitConfig:
    low_k_fraction: float = field(default=0.1, metadata=_spec(_unit_interval))
    floor: float = field(default=1e-13, metadata=_spec(_open_unit))
    min_decades: float = field(default=4.0, metadata=_spec(_nonneg))
    max_residual: float = field(default=0.5, metadata=_spec(_nonneg))
    min_bins: int = field(default=8, metadata=_spec(_int_at_least(2)))


@dataclass(frozen=True)
class AnalysisConfig:
    s: float = field(default=2.0, metadata=_spec(_nonneg))
    eps0: float | None = field(default=None, metadata=_spec(_optional(_positive)))
    N_max: int = field(default=24, metadata=_spec(_int_at_least(8)))
    oversample: int = field(default=4, metadata=_spec(_one_of(1, 2, 4)))
    variant: str | None = field(default=None, metadata=_spec(_optional(_one_of(*VARIANTS))))
    A: float | None = field(default=None, metadata=_spec(_optional(_positive)))
    B_const: float | None = field(default=None, metadata=_spec(_optional(_positive)))
    kappa: float = field(default=1.0, metadata=_spec(_positive))
    linear_constant: float = field(default=1.0, metadata=_spec(_positive))
    C: float = field(default=1.0, metadata=_spec(_positive))
    path_samples: int = field(default=2001, metadata=_spec(_int_at_least(2)))
    fit: FitConfig = field(default_factory=FitConfig, metadata=_spec(None))


@dataclass(frozen=True)
class ParamsConfig:
    p: int = field(default=2, metadata=_spec(_int_at_least(2)))
    r0: float = field(default=1.0, metadata=_spec(_positive))
    a: str = field(default="0", metadata=_spec(_string))
    V: str | None = field(default=None, metadata=_spec(_optional(_string)))


@dataclass(frozen=True)
class OutputConfig:
    csv: str | None = field(default=None, metadata=_spec(_optional(_string)))
    json: str | None = field(default=None, metadata=_spec(_optional(_string)))
    svg: str | None = field(default=None, metadata=_spec(_optional(_string)))


def _check_times(v):
    if isinstance(v, list) and v and all(_number(t) and t >= 0 for t in v):
        return None
    return "must be a nonempty list of nonnegative numbers"


def _check_u0(v):
    if v is None or isinstance(v, str) or (isinstance(v, list) and v and all(isinstance(e, str) for e in v)):
        return None
    return "must be an expression string or a list of them"


def _check_system(v):
    return None if v is None or isinstance(v, dict) else "must be an object"


@dataclass(frozen=True)
class RunConfig:
    case: str = field(default="custom", metadata=_spec(_one_of(*CASES)))
    system: dict | None = field(default=None, metadata=_spec(_check_system))
    u0: Any = field(default=None, metadata=_spec(_check_u0))
    times: list | None = field(default=None, metadata=_spec(_optional(_check_times)))
    grid: GridConfig = field(default_factory=GridConfig, metadata=_spec(None))
    solver: SolverConfig = field(default_factory=SolverConfig, metadata=_spec(None))
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig, metadata=_spec(None))
    params: ParamsConfig = field(default_factory=ParamsConfig, metadata=_spec(None))
    output: OutputConfig = field(default_factory=OutputConfig, metadata=_spec(None))
    seed: int = field(default=0, metadata=_spec(_int_at_least(0)))

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved(self) -> "RunConfig":
        """Fill case-dependent defaults so the effective config is explicit."""
        d = case_defaults(self.case)
        times = self.times if self.times is not None else list(d["times"])
        grid = GridConfig(
            self.grid.L if self.grid.L is not None else d.get("L"),
            self.grid.M if self.grid.M is not None else d.get("M"),
        )
        solver = SolverConfig(
            self.solver.T if self.solver.T is not None else float(max(times)),
            self.solver.dt if self.solver.dt is not None else d.get("dt"),
            self.solver.stride,
            self.solver.dealias,
        )
        a = self.analysis
        analysis = AnalysisConfig(
            a.s, a.eps0 if a.eps0 is not None else d.get("eps0"), a.N_max, a.oversample,
            a.variant or d["variant"], a.A if a.A is not None else d.get("A"), a.B_const, a.kappa,
            a.linear_constant, a.C, a.path_samples, a.fit,
        )
        params = self.params
        if params.V is None and self.case.startswith("schrodinger"):
            params = ParamsConfig(params.p, params.r0, params.a, "0" if self.case == "schrodinger_free" else "cos(x)")
        return RunConfig(self.case, self.system, self.u0, [float(t) for t in times], grid, solver,
                         analysis, params, self.output, self.seed)

    def flat(self) -> dict:
        """Keyword mapping understood by the oracles runner."""
        a = self.analysis
        return {
            "times": self.times, "L": self.grid.L, "M": self.grid.M, "dt": self.solver.dt,
            "s": a.s, "eps0": a.eps0, "A": a.A, "B_const": a.B_const, "kappa": a.kappa,
            "linear_constant": a.linear_constant, "N_max": a.N_max, "variant": a.variant,
            "oversample": a.oversample, "fit": asdict(a.fit), "path_samples": a.path_samples,
            "p": self.params.p, "r0": self.params.r0, "a": self.params.a, "V": self.params.V,
            "system": self.system, "u0": self.u0,
        }


def _build(cls, data, pointer: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{pointer or '/'} must be an object", pointer)
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} at {pointer or '/'}", f"{pointer}/{key}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        ptr = f"{pointer}/{name}"
        nested = f.metadata["check"] is None
        if nested:
            sub = f.default_factory  # type: ignore[misc]
            kwargs[name] = _build(sub, value, ptr)
            continue
        if isinstance(value, int) and not isinstance(value, bool) and isinstance(f.default, float):
            value = float(value)
        err = f.metadata["check"](value)
        if err:
            raise ConfigError(f"{ptr} {err} (got {value!r})", ptr)
        kwargs[name] = value
    return cls(**kwargs)


def parse_config(data: dict) -> RunConfig:
    """Strict parse of a config mapping; raises :class:`ConfigError`."""
    cfg = _build(RunConfig, data, "")
    if cfg.case == "custom" and (cfg.system is None or cfg.u0 is None):
        raise ConfigError("custom case needs 'system' and 'u0'", "/system" if cfg.system is None else "/u0")
    if cfg.case == "custom" and (cfg.grid.L is None or cfg.grid.M is None):
        raise ConfigError("custom case needs grid.L and grid.M", "/grid")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", "")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "") from exc
    return parse_config(data)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None):
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


ROW_HEADER = "t,measured,method,exact,bound,margin,pass"


def rows_csv(rows) -> str:
    lines = [ROW_HEADER]
    for r in rows:
        lines.append(",".join([_fmt(r.t), _fmt(r.measured), r.method, _fmt(r.exact), _fmt(r.bound),
                               _fmt(r.margin), _fmt(r.passed)]))
    return "\n".join(lines) + "\n"


def rows_svg(rows, title: str = "") -> str:
    """Line chart of measured, bound and exact radius against ``t``."""
    w, h, pad = 480, 320, 48
    ts = [r.t for r in rows]
    series = {
        "measured": ([r.measured for r in rows], "#1f77b4"),
        "bound": ([r.bound for r in rows], "#d62728"),
        "exact": ([r.exact for r in rows], "#2ca02c"),
    }
    vals = [v for ys, _ in series.values() for v in ys if v is not None and math.isfinite(v)]
    t0, t1 = min(ts), max(ts)
    y0, y1 = 0.0, max(vals) if vals else 1.0
    t1 = t1 if t1 > t0 else t0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(t, y):
        return (pad + (t - t0) / (t1 - t0) * (w - 2 * pad), h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect width="{w}" height="{h}" fill="white"/>',
           f'<text x="{pad}" y="20" font-size="13">{title}</text>',
           f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
           f'<text x="{w - pad}" y="{h - pad + 30}" font-size="11" text-anchor="end">t = {t0!r} .. {t1!r}</text>',
           f'<text x="8" y="{pad - 8}" font-size="11">radius (max {y1!r})</text>']
    for i, (name, (ys, color)) in enumerate(series.items()):
        pts = [px(t, y) for t, y in zip(ts, ys) if y is not None and math.isfinite(y)]
        if pts:
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        out.append(f'<text x="{w - pad - 90}" y="{pad + 16 * i}" font-size="11" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


class NumericalFailure(RuntimeError):
    """Raised after outputs are written when the run itself failed numerically."""


def _envelope(cfg: RunConfig, command: str, payload: dict) -> dict:
    return {"version": __version__, "command": command, "config": cfg.to_dict(), **payload}


def cmd_validate(cfg: RunConfig) -> int:
    spec, u0, _ = case_problem(cfg.case, cfg.flat())
    samples = SampleLattice.for_grid(u0.grid, cfg.solver.T or 0.0)
    report = validate_symmetric(spec, samples)
    hyper = strict_hyperbolicity_check(spec, samples)
    payload = {
        "report": report.to_dict(),
        "strict_hyperbolicity": {"pass": hyper.passed, "min_gap": hyper.min_gap, "max_imag": hyper.max_imag},
        "box_compatible": spec.meta.get("box_compatible", True),
        "system": spec.to_dict(),
    }
    _emit(_dumps(_envelope(cfg, "validate", payload)), cfg.output.json)
    return 0


def cmd_solve(cfg: RunConfig) -> int:
    spec, u0, _ = case_problem(cfg.case, cfg.flat())
    if not spec.meta.get("box_compatible", True):
        raise ConfigError(f"case {cfg.case!r} has a non-periodic coefficient; use 'compare'", "/case")
    if cfg.solver.dt is None:
        raise ConfigError("solver.dt is required", "/solver/dt")
    opts = SolveOptions(s=cfg.analysis.s, oversample=cfg.analysis.oversample, stride=cfg.solver.stride,
                        dealias=cfg.solver.dealias)
    result = solve(spec, u0, cfg.solver.T, cfg.solver.dt, opts)
    I_cons = integral_from_path(result.times, result.linf_path, result.p, "conservative")
    I_ex = integral_from_path(result.times, result.linf_path, result.p, "example")
    lines = ["t,linf,hs,I_conservative,I_example"]
    for row in zip(result.times, result.linf_path, result.hs_path, I_cons, I_ex):
        lines.append(",".join(_fmt(v) for v in row))
    _emit("\n".join(lines) + "\n", cfg.output.csv)
    summary = {"blowup": result.blowup, "blowup_time": result.blowup_time,
               "last_stable_time": result.last_stable_time, "dt": result.dt, "p": result.p,
               "diagnostics": result.diagnostics}
    if cfg.output.json:
        write_atomic(cfg.output.json, _dumps(_envelope(cfg, "solve", summary)))
    if result.blowup:
        raise NumericalFailure(f"blow-up detected at t = {result.blowup_time!r}")
    return 0


def _fit_options(cfg: RunConfig) -> FitOptions:
    return FitOptions(**asdict(cfg.analysis.fit))


def _sample_at(cfg: RunConfig, t: float) -> SpectralField:
    from .oracles import example1, example2, transport_sinx  # local: keeps dispatch table short

    spec, u0, _ = case_problem(cfg.case, cfg.flat())
    if t == 0:
        return u0
    if cfg.case == "example1":
        return example1(t, u0.grid)[0]
    if cfg.case == "example2":
        return example2(cfg.params.p, t, u0.grid)[0]
    if cfg.case == "transport_sinx":
        return transport_sinx(t, u0.grid, cfg.params.r0)[0]
    if cfg.solver.dt is None:
        raise ConfigError("solver.dt is required to measure at t > 0", "/solver/dt")
    result = solve(spec, u0, t, cfg.solver.dt, SolveOptions(s=cfg.analysis.s))
    if result.blowup:
        raise NumericalFailure(f"blow-up before t = {t!r}")
    return result.snapshots[-1]


def cmd_radius(cfg: RunConfig) -> int:
    _, _, exact_fn = case_problem(cfg.case, cfg.flat())
    fit = _fit_options(cfg)
    out = []
    for t in cfg.times:
        f = _sample_at(cfg, t)
        est = radius_from_spectrum(f, fit)
        entry = {"t": t, "fit": asdict(est), "exact": exact_fn(t) if exact_fn else None}
        if cfg.analysis.eps0 is not None:
            prof = analytic_profile(f, cfg.analysis.eps0, cfg.analysis.N_max, cfg.analysis.s)
            entry["profile"] = {"eps0": prof.epsilon, "sup": prof.sup_value, "argmax_N": prof.argmax_N,
                                "converged": prof.converged}
        out.append(entry)
    _emit(_dumps(_envelope(cfg, "radius", {"radii": out})), cfg.output.json)
    return 0


def cmd_bounds(cfg: RunConfig) -> int:
    run = run_case_full(cfg.case, cfg.flat())
    _, u0, _ = case_problem(cfg.case, cfg.flat())
    a = cfg.analysis
    prof = analytic_profile(u0, run.eps0, a.N_max, a.s)
    I_cons = integral_from_path(run.I_times, run.linf, run.p, "conservative")
    C0 = None
    note = ""
    if prof.converged:
        C0 = c0_floor(prof, a.C)
    else:
        note = "analytic profile of u0 does not converge at eps0; C0 and Phi omitted"
    A_est = None
    try:
        A_est = estimate_A(u0, run.eps0, a.s, run.p, a.N_max, a.kappa, a.linear_constant)
    except NonConvergedProfileError as exc:
        note = (note + "; " if note else "") + str(exc)
    trace = bounds_trace(run.I_times, I_cons, run.eps0, run.A, C0 if C0 else 1.0,
                         I_variant=run.I_values, variant=run.variant, B_const=a.B_const)
    lines = ["t,I,epsilon,phi"]
    for i, t in enumerate(trace.times):
        lines.append(",".join([_fmt(t), _fmt(run.I_values[i]), _fmt(trace.epsilon_lower[i]),
                               _fmt(trace.phi[i] if C0 else None)]))
    _emit("\n".join(lines) + "\n", cfg.output.csv)
    if cfg.output.json:
        payload = {"A": run.A, "A_estimate": A_est, "eps0": run.eps0, "C0": C0, "variant": run.variant,
                   "profile": {"sup": prof.sup_value, "argmax_N": prof.argmax_N, "converged": prof.converged},
                   "note": note}
        write_atomic(cfg.output.json, _dumps(_envelope(cfg, "bounds", payload)))
    return 0


def _run_one(args) -> CaseRun:
    case, flat = args
    return run_case_full(case, flat)


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _run_cases(jobs: list[tuple[str, dict]]) -> list[CaseRun]:
    n = min(_workers(), len(jobs))
    if n <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_one, jobs))


def cmd_compare(cfg: RunConfig) -> int:
    run = _run_cases([(cfg.case, cfg.flat())])[0]
    _emit(rows_csv(run.rows), cfg.output.csv)
    if cfg.output.svg:
        write_atomic(cfg.output.svg, rows_svg(run.rows, cfg.case))
    if cfg.output.json:
        write_atomic(cfg.output.json, _dumps(_envelope(cfg, "compare", _run_payload(run))))
    if run.blowup:
        raise NumericalFailure(f"blow-up in case {cfg.case!r}")
    return 0


def _run_payload(run: CaseRun) -> dict:
    return {
        "case": run.case, "eps0": run.eps0, "A": run.A, "p": run.p, "variant": run.variant,
        "passed": run.passed, "blowup": run.blowup, "diagnostics": run.diagnostics,
        "rows": [asdict(r) for r in run.rows],
    }


def cmd_report(cfg: RunConfig, cases: list[str] | None = None) -> int:
    cases = cases or [cfg.case]
    jobs = []
    configs = []
    for case in cases:
        c = cfg if case == cfg.case else RunConfig(**{**_shallow(cfg), "case": case, "times": None,
                                                         "grid": GridConfig(), "solver": SolverConfig()}).resolved()
        configs.append(c)
        jobs.append((case, c.flat()))
    runs = _run_cases(jobs)
    report = {
        "version": __version__, "command": "report",
        "cases": [{"config": c.to_dict(), **_run_payload(r)} for c, r in zip(configs, runs)],
        "passed": all(r.passed for r in runs),
    }
    _emit(_dumps(report), cfg.output.json)
    if any(r.blowup for r in runs):
        raise NumericalFailure("blow-up in at least one case")
    return 0


def _shallow(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strip-radius", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in [
        ("validate", "check symmetry and hyperbolicity of a system"),
        ("solve", "integrate a system and write norm paths"),
        ("radius", "measure the radius of analyticity"),
        ("bounds", "compute the lower bound and budget traces"),
        ("compare", "measured radius against the bound"),
        ("report", "JSON report over one or more cases"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--case", help=f"one of {', '.join(CASES)}" + (" (comma list allowed)" if name == "report" else ""))
        p.add_argument("--times", help="comma-separated output times")
        p.add_argument("--out", help="main output file (CSV or JSON); stdout when omitted")
        p.add_argument("--json", help="JSON sidecar output")
        p.add_argument("--svg", help="SVG chart output (compare)")
        p.add_argument("--seed", type=int, help="seed recorded in the effective config")
    return parser


_MAIN_OUTPUT = {"validate": "json", "solve": "csv", "radius": "json", "bounds": "csv", "compare": "csv",
                "report": "json"}


def _effective_config(ns) -> tuple[RunConfig, list[str] | None]:
    data: dict = {}
    if ns.config:
        cfg = load_config(ns.config)
        data = cfg.to_dict()
    cases = None
    if ns.case:
        cases = ns.case.split(",")
        for c in cases:
            if c not in CASES:
                raise ConfigError(f"unknown case {c!r}", "/case")
        if len(cases) > 1 and ns.command != "report":
            raise UsageError("only 'report' accepts several cases")
        data["case"] = cases[0]
    if ns.times:
        try:
            data["times"] = [float(t) for t in ns.times.split(",")]
        except ValueError as exc:
            raise UsageError(f"--times must be comma-separated numbers: {exc}") from exc
    out = dict(data.get("output") or {})
    if ns.out:
        out[_MAIN_OUTPUT[ns.command]] = ns.out
    if ns.json and _MAIN_OUTPUT[ns.command] != "json":
        out["json"] = ns.json
    if ns.svg:
        out["svg"] = ns.svg
    if out:
        data["output"] = out
    if ns.seed is not None:
        data["seed"] = ns.seed
    if not data.get("case"):
        data["case"] = "custom"
    cfg = parse_config(data).resolved()
    return cfg, cases


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message, **extra}}, sort_keys=True) + "\n")


def dispatch(argv: list[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        ns = _parser().parse_args(argv)
        cfg, cases = _effective_config(ns)
        if ns.command == "report":
            return cmd_report(cfg, cases)
        return {"validate": cmd_validate, "solve": cmd_solve, "radius": cmd_radius, "bounds": cmd_bounds,
                "compare": cmd_compare}[ns.command](cfg)
    except ConfigError as exc:
        _error("config", str(exc), pointer=exc.pointer)
        return 2
    except (UsageError, ExprError) as exc:
        _error("usage", str(exc))
        return 2
    except (StabilityError, NumericalFailure, NonConvergedProfileError, FloatingPointError) as exc:
        _error("numerical", str(exc))
        return 1
    except ValueError as exc:
        _error("numerical", str(exc))
        return 1


def main() -> None:
    try:
        code = dispatch()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)
