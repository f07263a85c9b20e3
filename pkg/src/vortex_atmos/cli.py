"""Command-line runs: analyze, sweep, trace and validate.

Every command reads a JSON configuration and writes UTF-8 JSON/CSV files
carrying a schema version.  Exit codes: 0 success, 2 precondition failure
(Steiner symmetry, simply connected core, steadiness), 3 numerical failure
(bracketing, quadrature), 4 I/O.

Configuration (all keys but ``vortex`` optional)::

    {
      "schema_version": 1,
      "vortex": {"kind": "HillBall", "amplitude": 1.0, "radius": 1.0},
      "speed": 0.1333 | "calibrate" | "natural",
      "tolerances": {"quadrature": 1e-8, "root": 1e-10, "ode": 1e-9},
      "sweep": {"parameter": "core_width", "range": [0.003, 0.03], "steps": 10,
                "resolution": 1e-3},
      "trace": {"horizon": 50.0, "field": "quadrature" | "spline"},
      "invariance": {"n_particles": 200, "horizon": 50.0},
      "boundary_samples": 128,
      "output_dir": "out"
    }

Tolerance defaults can be overridden with the environment variables
VORTEX_ATMOS_QUAD_TOL, VORTEX_ATMOS_ROOT_TOL and VORTEX_ATMOS_ODE_TOL; values
given in the configuration file take precedence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .domain import (LEMNISCATE, OVAL, SPHEROID, TOROID, CoreNotSimplyConnected,
                     SteinerViolation, classify, extract_domain)
from .field import (SpecError, TravelingVortex, calibrate_speed, check_steiner, spec_from_dict,
                    steadiness_residual)
from .kernels import kernel3d
from .stream import QuadratureError, StreamSolver, decay_probe, decay_slope, field_sweep, write_sweep_csv
from .tracer import (BOUNDED, ESCAPING, QuadratureField, SplineField, time_reversal_check, trace_many,
                     verify_domain_invariance)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

DEFAULT_TOLERANCES = {"quadrature": 1e-8, "root": 1e-10, "ode": 1e-9}
ENV_TOLERANCES = {"quadrature": "VORTEX_ATMOS_QUAD_TOL", "root": "VORTEX_ATMOS_ROOT_TOL",
                  "ode": "VORTEX_ATMOS_ODE_TOL"}
RESIDUAL_THRESHOLD = 0.05
CLASS_ORDER = {TOROID: 0, LEMNISCATE: 1, SPHEROID: 2, OVAL: 3}


class ConfigError(ValueError):
    """Invalid configuration (precondition failure)."""


class OutputError(OSError):
    """Output directory not writable."""


# ---------------------------------------------------------------- config
@dataclass
class RunConfig:
    vortex: dict
    speed: object = "calibrate"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sweep: dict | None = None
    trace: dict = field(default_factory=dict)
    invariance: dict | None = None
    boundary_samples: int = 128
    output_dir: str = "."
    seeds: list | None = None
    base_dir: str = "."
    command: str | None = None

    def echo(self):
        return {
            "schema_version": SCHEMA_VERSION, "vortex": self.vortex, "speed": self.speed,
            "tolerances": self.tolerances, "sweep": self.sweep, "trace": self.trace,
            "invariance": self.invariance, "boundary_samples": self.boundary_samples,
            "seeds": self.seeds,
        }


def resolve_tolerances(given=None, environ=None):
    environ = os.environ if environ is None else environ
    tol = dict(DEFAULT_TOLERANCES)
    for key, var in ENV_TOLERANCES.items():
        if var in environ:
            try:
                tol[key] = float(environ[var])
            except ValueError as exc:
                raise ConfigError(f"{var} is not a number: {environ[var]!r}") from exc
    for key, val in (given or {}).items():
        if key not in tol:
            raise ConfigError(f"unknown tolerance {key!r}")
        tol[key] = float(val)
    for key, val in tol.items():
        if not (math.isfinite(val) and val > 0.0):
            raise ConfigError(f"tolerance {key} must be positive, got {val!r}")
    return tol


def load_config(path, out_dir=None, environ=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)), out_dir=out_dir,
                            environ=environ)


def config_from_dict(doc, base_dir=".", out_dir=None, environ=None) -> RunConfig:
    if "vortex" not in doc:
        raise ConfigError("config needs a 'vortex' block")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    speed = doc.get("speed", "calibrate")
    if not (speed in ("calibrate", "natural") or (isinstance(speed, (int, float)) and speed > 0)):
        raise ConfigError(f"speed must be positive, 'calibrate' or 'natural', got {speed!r}")
    sweep = doc.get("sweep")
    if sweep is not None:
        lo, hi = (float(x) for x in sweep.get("range", (0.0, 0.0)))
        if not hi > lo or int(sweep.get("steps", 0)) < 2 or "parameter" not in sweep:
            raise ConfigError("sweep needs a parameter, a nonempty range and steps >= 2")
    cfg = RunConfig(
        vortex=dict(doc["vortex"]), speed=speed,
        tolerances=resolve_tolerances(doc.get("tolerances"), environ),
        sweep=sweep, trace=dict(doc.get("trace", {})), invariance=doc.get("invariance"),
        boundary_samples=int(doc.get("boundary_samples", 128)),
        output_dir=out_dir or doc.get("output_dir", "."), seeds=doc.get("seeds"),
        base_dir=base_dir, command=doc.get("command"))
    if not os.path.isabs(cfg.output_dir) and out_dir is None:
        cfg.output_dir = os.path.join(base_dir, cfg.output_dir)
    return cfg


def ensure_output_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w", encoding="utf-8") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise OutputError(f"output directory {path} is not writable: {exc}") from exc


# ---------------------------------------------------------------- helpers
def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(doc, path):
    text = json.dumps(_clean(doc), sort_keys=True, indent=2, ensure_ascii=False)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return text


def _exit_code_for(exc):
    if isinstance(exc, (OutputError, OSError)):
        return EXIT_IO
    if isinstance(exc, (SteinerViolation, CoreNotSimplyConnected, SpecError, ConfigError)):
        return EXIT_PRECONDITION
    return EXIT_NUMERICAL


def _error_entry(stage, exc):
    entry = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        entry["diagnostics"] = diag
    return entry


def build_vortex(cfg: RunConfig, spec=None):
    """TravelingVortex for the configuration; returns (tv, calibration residual or None)."""
    spec = spec if spec is not None else spec_from_dict(cfg.vortex, base_dir=cfg.base_dir)
    if cfg.speed == "calibrate":
        W, res = calibrate_speed(spec)
        return TravelingVortex(spec, W, res), res
    if cfg.speed == "natural":
        if not hasattr(spec, "natural_speed"):
            raise ConfigError(f"{spec.kind} has no closed-form speed; use 'calibrate'")
        return TravelingVortex(spec, float(spec.natural_speed())), None
    return TravelingVortex(spec, float(cfg.speed)), None


class _Timer:
    def __init__(self):
        self.block = {}

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.block[name] = time.perf_counter() - self.t0
                return False

        return _Ctx()


# ---------------------------------------------------------------- analyze
PROVENANCE_ANALYZE = {
    "steiner": "field.check_steiner",
    "speed": "field.calibrate_speed / configured value",
    "steadiness_residual": "field.steadiness_residual",
    "classification": "domain.classify",
    "domain": "domain.extract_domain",
    "measures": "domain.measures (inside extract_domain)",
    "quadrature_check": "stream.StreamSolver.estimate_error",
    "invariance": "tracer.verify_domain_invariance",
}


def run_analyze(cfg: RunConfig):
    """Full pipeline; returns (report dict, exit code).  Files go to ``cfg.output_dir``."""
    timer = _Timer()
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": "analyze",
              "config": cfg.echo(), "errors": [], "provenance": PROVENANCE_ANALYZE}
    code = EXIT_OK
    stage = "config"
    try:
        spec = spec_from_dict(cfg.vortex, base_dir=cfg.base_dir)
        stage = "steiner"
        with timer("steiner"):
            st = check_steiner(spec)
        report["steiner"] = asdict(st)
        if not st.is_symmetric:
            raise SteinerViolation(f"vorticity is not Steiner symmetric (violation {st.max_violation:.3e})",
                                   {"max_violation": st.max_violation})
        stage = "speed"
        with timer("speed"):
            tv, _ = build_vortex(cfg, spec)
        report["speed"] = tv.speed
        solver = StreamSolver(tv)
        stage = "steadiness"
        with timer("steadiness"):
            res = steadiness_residual(tv, solver)
        report["steadiness_residual"] = res
        if res > RESIDUAL_THRESHOLD:
            report["errors"].append({"stage": "steadiness", "type": "SteadinessResidual",
                                     "message": f"residual {res:.3e} above {RESIDUAL_THRESHOLD}"})
            code = EXIT_PRECONDITION
        stage = "classify"
        with timer("classify"):
            cls = classify(tv, solver, steiner=st, residual=res)
        report["classification"] = asdict(cls)
        stage = "extract"
        with timer("extract"):
            dom = extract_domain(tv, solver, cfg.boundary_samples, steiner=st, residual=res,
                                 root_tol=cfg.tolerances["root"])
        report["domain"] = dom.to_dict()
        report["measures"] = {"core": dom.core_measure, "domain": dom.domain_measure,
                              "atmosphere": dom.atmosphere_measure, "ratio": dom.atmosphere_ratio}
        stage = "quadrature"
        with timer("quadrature_check"):
            k = np.linspace(1, dom.boundary_s.size - 2, 6).astype(int)
            err = solver.estimate_error(dom.boundary_l[k], dom.boundary_s[k])
            qerr = float(np.max(err[0]))
            ref = tv.speed * tv.scale ** (2 if tv.is_ring else 1)
            report["quadrature_check"] = {"max_stream_difference": qerr, "reference": ref,
                                          "tolerance": cfg.tolerances["quadrature"]}
            if qerr > cfg.tolerances["quadrature"] * ref:
                raise QuadratureError(f"stream quadrature difference {qerr:.3e} exceeds "
                                      f"{cfg.tolerances['quadrature']:.1e} x {ref:.3g}", None, err)
        stage = "output"
        ensure_output_dir(cfg.output_dir)
        dom.write_boundary_csv(os.path.join(cfg.output_dir, "boundary.csv"))
        a0, a1, b0, b1 = spec.bbox()
        span = 2.0 * max(abs(a0), abs(a1), b1)
        sw = field_sweep(tv, np.linspace(-span, span, 41), np.linspace(0.0, span, 21), solver)
        write_sweep_csv(os.path.join(cfg.output_dir, "field_sweep.csv"), sw)
        if cfg.invariance:
            stage = "invariance"
            with timer("invariance"):
                fld = SplineField(tv, solver)
                inv = verify_domain_invariance(
                    tv, dom, int(cfg.invariance.get("n_particles", 200)),
                    float(cfg.invariance.get("horizon", 50.0)), field=fld, tol=cfg.tolerances["ode"])
            report["invariance"] = inv.to_dict()
    except Exception as exc:  # embedded with stage attribution
        report["errors"].append(_error_entry(stage, exc))
        code = max(code, _exit_code_for(exc))
    report["timing"] = timer.block
    return report, code


# ---------------------------------------------------------------- sweep
def _sweep_point(cfg, value):
    doc = dict(cfg.vortex)
    doc[cfg.sweep["parameter"]] = float(value)
    spec = spec_from_dict(doc, base_dir=cfg.base_dir)
    tv, _ = build_vortex(cfg, spec)
    solver = StreamSolver(tv)
    cls = classify(tv, solver)
    return {"value": float(value), "speed": tv.speed, "center_speed": cls.center_speed,
            "ratio": cls.center_speed / tv.speed, "topology": cls.topology,
            "excess": cls.center_speed - tv.speed}


def _critical_point(cfg, a, b, extra, max_iter=30):
    """Regula falsi (Illinois) for center_speed = W inside the bracket [a, b].

    Stops once the class at the iterate is the lemniscate band; the iterate is
    appended to ``extra`` and returned.
    """
    fa, fb = a["excess"], b["excess"]
    xa, xb = a["value"], b["value"]
    side = 0
    for _ in range(max_iter):
        x = xb - fb * (xb - xa) / (fb - fa)
        row = _sweep_point(cfg, x)
        extra.append(row)
        if row["topology"] == LEMNISCATE:
            return row
        if np.sign(row["excess"]) == np.sign(fb):
            xb, fb = x, row["excess"]
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            xa, fa = x, row["excess"]
            if side == 1:
                fb *= 0.5
            side = 1
    return None


def run_sweep(cfg: RunConfig):
    """Regime table over the sweep parameter and a bisected transition bracket."""
    if not cfg.sweep:
        raise ConfigError("sweep block missing")
    timer = _Timer()
    lo, hi = (float(x) for x in cfg.sweep["range"])
    steps = int(cfg.sweep["steps"])
    resolution = float(cfg.sweep.get("resolution", 1e-3))
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": "sweep",
              "config": cfg.echo(), "errors": [],
              "provenance": {"rows": "domain.classify after field.calibrate_speed per value",
                             "transition": "bisection on the sign of center_speed - W"}}
    code = EXIT_OK
    with timer("table"):
        try:
            rows = [_sweep_point(cfg, v) for v in np.linspace(lo, hi, steps)]
        except Exception as exc:
            report["errors"].append(_error_entry("sweep", exc))
            report["timing"] = timer.block
            return report, _exit_code_for(exc)
    report["rows"] = rows
    ranks = [CLASS_ORDER[r["topology"]] for r in rows]
    monotone = all(np.diff(ranks) >= 0) or all(np.diff(ranks) <= 0)
    report["monotone"] = bool(monotone)
    flips = [i for i in range(len(rows) - 1) if np.sign(rows[i]["excess"]) != np.sign(rows[i + 1]["excess"])]
    report["n_sign_changes"] = len(flips)
    extra = []
    if not flips and monotone:
        report["transition"] = None  # a single regime over the whole range
    elif not monotone or len(flips) > 1:
        report["errors"].append({"stage": "sweep", "type": "NonMonotoneSequence",
                                 "message": f"class sequence {[r['topology'] for r in rows]} with "
                                            f"{len(flips)} sign changes; no bisection"})
        report["transition"] = None
        code = EXIT_NUMERICAL
    else:
        i = flips[0]
        a, b = rows[i], rows[i + 1]
        with timer("bisection"):
            try:
                while b["value"] - a["value"] > resolution:
                    mid = _sweep_point(cfg, 0.5 * (a["value"] + b["value"]))
                    extra.append(mid)
                    if np.sign(mid["excess"]) == np.sign(a["excess"]):
                        a = mid
                    else:
                        b = mid
                critical = _critical_point(cfg, a, b, extra)
            except Exception as exc:
                report["errors"].append(_error_entry("bisection", exc))
                code = _exit_code_for(exc)
                critical = None
        report["transition"] = {"parameter": cfg.sweep["parameter"], "lower": a["value"],
                                "upper": b["value"], "width": b["value"] - a["value"],
                                "classes": [a["topology"], b["topology"]], "critical": critical}
    report["refinement"] = extra
    ordered = sorted(rows + extra, key=lambda r: r["value"])
    sequence = [r["topology"] for r in ordered]
    report["sequence"] = [c for k, c in enumerate(sequence) if k == 0 or c != sequence[k - 1]]
    if code != EXIT_IO:
        try:
            ensure_output_dir(cfg.output_dir)
            with open(os.path.join(cfg.output_dir, "regime.csv"), "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["schema_version", SCHEMA_VERSION])
                w.writerow([cfg.sweep["parameter"], "speed", "center_speed", "ratio", "topology"])
                for r in ordered:
                    w.writerow([repr(r["value"]), repr(r["speed"]), repr(r["center_speed"]),
                                repr(r["ratio"]), r["topology"]])
        except OSError as exc:
            report["errors"].append(_error_entry("output", exc))
            code = EXIT_IO
    report["timing"] = timer.block
    return report, code


# ---------------------------------------------------------------- trace
def read_seeds(path):
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise OutputError(f"cannot read seeds {path}: {exc}") from exc
    pts = []
    for r in rows:
        try:
            pts.append((float(r[0]), float(r[1])))
        except ValueError:
            if pts:
                raise ConfigError(f"bad seed row {r!r}") from None
    if not pts:
        raise ConfigError(f"no seeds in {path}")
    return pts


def run_trace(cfg: RunConfig, seeds):
    timer = _Timer()
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": "trace",
              "config": cfg.echo(), "errors": [],
              "provenance": {"traces": "tracer.trace_many"}}
    try:
        with timer("setup"):
            tv, _ = build_vortex(cfg)
            solver = StreamSolver(tv)
            fld = SplineField(tv, solver) if cfg.trace.get("field") == "spline" else QuadratureField(tv, solver)
        report["speed"] = tv.speed
        horizon = float(cfg.trace.get("horizon", 50.0))
        with timer("trace"):
            traces = trace_many(tv, seeds, horizon, tol=cfg.tolerances["ode"], field=fld)
        ensure_output_dir(cfg.output_dir)
        summaries = []
        for i, tr in enumerate(traces):
            name = f"trace_{i:03d}.csv"
            tr.write_csv(os.path.join(cfg.output_dir, name))
            s = tr.summary()
            s["csv"] = name
            summaries.append(s)
        report["traces"] = summaries
        code = EXIT_OK
    except Exception as exc:
        report["errors"].append(_error_entry("trace", exc))
        code = _exit_code_for(exc)
    report["timing"] = timer.block
    return report, code


# ---------------------------------------------------------------- validate
def _prop(name, passed, value, threshold, detail=""):
    return {"name": name, "passed": bool(passed), "value": value, "threshold": threshold, "detail": detail}


def run_validate(cfg: RunConfig):
    """Property suites against the configured vortex; every property is attempted."""
    timer = _Timer()
    props = []
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": "validate",
              "config": cfg.echo(), "errors": []}
    rng = np.random.default_rng(12345)
    precondition_failed = False

    def attempt(name, fn):
        try:
            with timer(name):
                props.append(fn())
        except Exception as exc:
            props.append(_prop(name, False, None, None, f"{type(exc).__name__}: {exc}"))

    try:
        spec = spec_from_dict(cfg.vortex, base_dir=cfg.base_dir)
    except Exception as exc:
        report["errors"].append(_error_entry("config", exc))
        report["timing"] = timer.block
        return report, _exit_code_for(exc)

    st = check_steiner(spec)
    props.append(_prop("steiner_symmetry", st.is_symmetric, st.max_violation, 1e-12,
                       "evenness and monotone decrease in |a| of the vorticity"))
    precondition_failed |= not st.is_symmetric

    try:
        tv, _ = build_vortex(cfg, spec)
    except Exception as exc:
        report["errors"].append(_error_entry("speed", exc))
        report["properties"] = props
        report["timing"] = timer.block
        return report, _exit_code_for(exc)
    solver = StreamSolver(tv)
    res = steadiness_residual(tv, solver)
    props.append(_prop("steadiness", res <= RESIDUAL_THRESHOLD, res, RESIDUAL_THRESHOLD))
    precondition_failed |= res > RESIDUAL_THRESHOLD
    a0, a1, b0, b1 = spec.bbox()
    R = spec.support_radius

    def kernel_oracle():
        r = rng.uniform(0.05, 2.0, 40)
        z = rng.uniform(-2.0, 2.0, 40)
        rp = rng.uniform(0.05, 2.0, 40)
        zp = rng.uniform(-2.0, 2.0, 40)
        worst = 0.0
        for i in range(40):
            e = kernel3d(r[i], z[i], rp[i], zp[i]).value
            q = kernel3d(r[i], z[i], rp[i], zp[i], method="quadrature").value
            worst = max(worst, abs(e - q) / abs(q))
        return _prop("kernel_oracle", worst <= 1e-10, worst, 1e-10, "elliptic form vs direct theta quadrature")

    def strict_steiner():
        a = rng.uniform(0.02 * R, 1.5 * max(abs(a0), abs(a1)), 300)
        b = rng.uniform(max(b0, 0.02 * R), b1, 300)
        d1 = solver.raw(a, b)[1]
        worst = float(np.max(d1))
        return _prop("strict_steiner_stream", worst < 0.0, worst, 0.0, "d/da of the stream function for a > 0")

    def decay():
        radii = np.geomspace(5.0 * R, 50.0 * R, 8)
        vals = decay_probe(tv, radii, solver=solver)
        slope = decay_slope(radii, vals)
        bound = -2.5 if tv.is_ring else -0.45
        dec = bool(np.all(np.diff(vals) < 0))
        return _prop("decay", dec and slope <= bound, slope, bound, "log-log slope of the sup probe")

    def center_speed():
        cs = solver.center_speed()
        if tv.is_ring:
            return _prop("center_speed_positive", cs > 0, cs / tv.speed, 0.0, "ring: ratio reported")
        return _prop("center_speed_exceeds_twice", cs > 2 * tv.speed, cs / tv.speed, 2.0)

    validate_cache = {}

    def extraction():
        dom = extract_domain(tv, solver, cfg.boundary_samples, root_tol=cfg.tolerances["root"])
        ref = tv.speed * tv.scale ** (2 if tv.is_ring else 1)
        report["domain"] = {"topology": dom.topology, "gamma": dom.gamma, "inner_radius": dom.inner_radius,
                            "outer_radius": dom.outer_radius, "atmosphere_ratio": dom.atmosphere_ratio}
        validate_cache["domain"] = dom
        return _prop("boundary_level", dom.boundary_residual <= 1e-8 * ref, dom.boundary_residual, 1e-8 * ref,
                     "max |phi(l(s), s) - gamma| on the boundary nodes")

    def conservation():
        dom = validate_cache.get("domain")
        s_mid = 0.5 * (dom.boundary_s[0] + dom.boundary_s[-1]) if dom else 0.5 * (b0 + b1)
        lmax = float(np.max(dom.boundary_l)) if dom else max(abs(a0), abs(a1))
        seeds = [(0.0, s_mid), (0.5 * lmax, s_mid), (-1.5 * lmax, s_mid)]
        trs = trace_many(tv, seeds, float(cfg.trace.get("horizon", 50.0)), tol=cfg.tolerances["ode"],
                         field=QuadratureField(tv, solver), record=False)
        drift = max(t.max_phi_drift for t in trs)
        report["validate_traces"] = [t.summary() for t in trs]
        ok = drift <= 1e-6 and all(t.verdict in (BOUNDED, ESCAPING) for t in trs)
        return _prop("phi_conservation", ok, drift, 1e-6, "relative phi drift along moving-frame traces")

    def reversal():
        dom = validate_cache.get("domain")
        s_mid = 0.5 * (dom.boundary_s[0] + dom.boundary_s[-1]) if dom else 0.5 * (b0 + b1)
        chk = time_reversal_check(tv, (0.1 * R, s_mid), 2.0 * R / tv.speed, cfg.tolerances["ode"],
                                  QuadratureField(tv, solver))
        budget = 10.0 * chk.budget
        return _prop("time_reversal", chk.error <= budget, chk.error, budget,
                     f"forward then backward return distance; budget 10 x tol x scale x {chk.steps} steps")

    for name, fn in (("kernel_oracle", kernel_oracle), ("strict_steiner_stream", strict_steiner),
                     ("decay", decay), ("center_speed", center_speed), ("boundary_level", extraction),
                     ("phi_conservation", conservation), ("time_reversal", reversal)):
        attempt(name, fn)
    report["properties"] = props
    report["all_passed"] = all(p["passed"] for p in props)
    report["timing"] = timer.block
    if report["all_passed"]:
        return report, EXIT_OK
    return report, EXIT_PRECONDITION if precondition_failed else EXIT_NUMERICAL


# ---------------------------------------------------------------- main
def build_parser():
    p = argparse.ArgumentParser(prog="vortex-atmos", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="extract and classify the vortex domain")
    a.add_argument("--config", required=True)
    a.add_argument("--out", default=None, help="output directory (overrides the config)")
    s = sub.add_parser("sweep", help="regime table and transition bracket over a parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    t = sub.add_parser("trace", help="trace moving-frame streamlines from seed points")
    t.add_argument("--config", required=True)
    t.add_argument("--seeds", required=True, help="CSV file of seed points (a, b)")
    t.add_argument("--out", default=None)
    v = sub.add_parser("validate", help="run the property suites against the configured vortex")
    v.add_argument("--config", required=True)
    v.add_argument("--out", default=None)
    return p


REPORT_NAMES = {"analyze": "report.json", "sweep": "transition.json", "trace": "traces.json",
                "validate": "validate.json"}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, out_dir=args.out)
        ensure_output_dir(cfg.output_dir)
        if args.command == "analyze":
            report, code = run_analyze(cfg)
        elif args.command == "sweep":
            report, code = run_sweep(cfg)
        elif args.command == "trace":
            report, code = run_trace(cfg, read_seeds(args.seeds))
        else:
            report, code = run_validate(cfg)
    except (ConfigError, SpecError, OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    try:
        dump_json(report, os.path.join(cfg.output_dir, REPORT_NAMES[args.command]))
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for err in report.get("errors", []):
        print(f"[{err['stage']}] {err['type']}: {err['message']}", file=sys.stderr)
    summary = {k: report[k] for k in ("speed", "classification", "transition", "all_passed") if k in report}
    if "domain" in report and isinstance(report["domain"], dict):
        summary["topology"] = report["domain"].get("topology")
    print(json.dumps(_clean(summary), sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
