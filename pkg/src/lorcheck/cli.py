"""``lorcheck`` command line: run one task from a JSON config and write a report.

Config layout::

    {
      "task": "hypotheses",            # optional, must match the CLI task
      "metric": {"dim_space": 2, "T": 1.0, "box": [[-1, 1], [-1, 1]],  # spatial box
                 "family": {"catalog": {"name": "minkowski"}}},
      "params": {...},                 # task parameters, see TASK_DEFAULTS
      "seed": 0,
      "output": {"report": "report.json", "csv": "trace.csv"}
    }

Exit codes: 0 for pass or boundary verdicts, 2 for fail verdicts, 1 for
configuration or execution errors.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import expr as E
from . import hypotheses as H
from . import metric as M
from . import pseudoconvexity as P
from . import riccati as R
from .geodesics import GeodesicPath, radial_ray

SCHEMA_VERSION = 1
TASKS = ("hypotheses", "riccati", "frame-riccati", "strictify", "pseudoconvexity", "perturb")
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

TASK_DEFAULTS = {
    "hypotheses": {"grid": 5, "strict": False, "tol": H.SCAN_TOL, "density": H.SCAN_DENSITY,
                   "random_points": 0},
    "riccati": {"B": None, "T": 3.0, "t0": R.T0, "tol": R.COMPARISON_TOL,
                "ode_tol": R.RICCATI_TOL, "sample_times": []},
    "frame-riccati": {"base": None, "direction": None, "r_max": 1.0, "tol": R.COMPARISON_TOL,
                      "ode_tol": R.RICCATI_TOL, "sample_times": []},
    "strictify": {"grid": 5, "margin": 1.0, "delta": None, "tol": H.SCAN_TOL,
                  "density": H.SCAN_DENSITY, "random_points": 0},
    "pseudoconvexity": {"base": None, "rays": 3, "r_max": 1.0, "r_step": 0.2, "beta_max": 0.5,
                        "method": "riccati", "tol": P.PSEUDO_TOL},
    "perturb": {"h": None, "epsilons": [], "grid": 5, "tol": H.SCAN_TOL,
                "density": H.SCAN_DENSITY, "random_points": 0},
}


class ConfigError(ValueError):
    """Invalid config; ``pointer`` is the JSON pointer of the offending value."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


@dataclass
class TaskConfig:
    task: str
    metric: M.MetricSpec
    metric_config: dict
    params: dict
    seed: int
    report_path: str | None
    csv_path: str | None


@dataclass
class RunReport:
    tool_version: str
    task: str
    config: dict
    seed: int
    wall_time: float
    payload: dict | None
    verdict: str
    summary: str
    exit_code: int
    error: str | None = None
    written_to: str | None = None

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "task": self.task,
            "config": self.config,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "payload": self.payload,
            "verdict": self.verdict,
            "summary": self.summary,
            "exit_code": self.exit_code,
            "error": self.error,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# config parsing


def _ptr(*parts):
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _check_expr(src, pointer, names):
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        return
    try:
        E.parse_metric_expression(src, names=names)
    except E.ParseError as exc:
        raise ConfigError(pointer, str(exc)) from None


def _check_grid(grid, pointer, names, size=None):
    if not isinstance(grid, list) or (size is not None and len(grid) != size):
        raise ConfigError(pointer, f"expected a {size}x{size} array" if size else "expected an array")
    for j, row in enumerate(grid):
        if not isinstance(row, list) or len(row) != len(grid):
            raise ConfigError(pointer + _ptr(j), "expected a square array")
        for k, src in enumerate(row):
            _check_expr(src, pointer + _ptr(j, k), names)


def _check_catalog(cat, pointer, n):
    names = E.variable_names(n)
    if not isinstance(cat, dict) or "name" not in cat:
        raise ConfigError(pointer, "catalog entry needs a 'name'")
    if cat["name"] not in M.CATALOG_NAMES + ("expressions",):
        raise ConfigError(pointer + "/name", f"unknown catalog metric {cat['name']!r}")
    if "f" in cat:
        _check_expr(cat["f"], pointer + "/f", names)
    if "h" in cat:
        _check_grid(cat["h"], pointer + "/h", names, n + 1)
    if "expressions" in cat:
        _check_grid(cat["expressions"], pointer + "/expressions", names, n + 1)
    if "base" in cat:
        _check_catalog(cat["base"], pointer + "/base", n)


def _parse_metric(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("/metric", "expected an object")
    if "dim_space" not in cfg:
        raise ConfigError("/metric/dim_space", "missing")
    n = cfg["dim_space"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("/metric/dim_space", "must be a positive integer")
    fam = cfg.get("family")
    if not isinstance(fam, dict):
        raise ConfigError("/metric/family", "missing or not an object")
    if "catalog" in fam:
        _check_catalog(fam["catalog"], "/metric/family/catalog", n)
    elif "expressions" in fam:
        _check_grid(fam["expressions"], "/metric/family/expressions", E.variable_names(n), n + 1)
    else:
        raise ConfigError("/metric/family", "needs 'catalog' or 'expressions'")
    box = cfg.get("box")
    if box is not None:
        if not isinstance(box, list) or len(box) != n:
            raise ConfigError("/metric/box", f"expected {n} spatial intervals")
        for i, iv in enumerate(box):
            if not (isinstance(iv, list) and len(iv) == 2 and iv[0] < iv[1]):
                raise ConfigError(_ptr("metric", "box", i), "expected [lo, hi] with lo < hi")
    try:
        return M.metric_from_config(cfg)
    except (M.MetricError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("/metric", str(exc)) from None


def parse_task_config(raw, task=None, overrides=None):
    """Validate a decoded config and apply CLI overrides (``grid``, ``seed``, ``tol``)."""
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    cfg_task = raw.get("task")
    if task is None:
        task = cfg_task
    elif cfg_task is not None and cfg_task != task:
        raise ConfigError("/task", f"config is for task {cfg_task!r}, not {task!r}")
    if task not in TASKS:
        raise ConfigError("/task", f"unknown task {task!r}")
    if "metric" not in raw:
        raise ConfigError("/metric", "missing")
    spec = _parse_metric(raw["metric"])
    params = copy.deepcopy(TASK_DEFAULTS[task])
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigError("/params", "expected an object")
    for key, value in given.items():
        if key not in params:
            raise ConfigError(_ptr("params", key), f"unknown parameter for task {task!r}")
        params[key] = value
    seed = raw.get("seed", 0)
    overrides = overrides or {}
    for key in ("grid", "tol"):
        if overrides.get(key) is not None:
            if key not in params:
                raise ConfigError(_ptr("params", key), f"--{key} does not apply to task {task!r}")
            params[key] = overrides[key]
    if overrides.get("seed") is not None:
        seed = overrides["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("/seed", "must be a non-negative integer")
    if "tol" in params and not (isinstance(params["tol"], (int, float)) and params["tol"] > 0):
        raise ConfigError("/params/tol", "must be positive")
    if "grid" in params and not (isinstance(params["grid"], int) and params["grid"] >= 1):
        raise ConfigError("/params/grid", "must be a positive integer")
    if task == "riccati":
        if params["B"] is None:
            raise ConfigError("/params/B", "missing coefficient matrix")
        _check_grid(params["B"], "/params/B", ["t"])
    if task == "perturb":
        if params["h"] is None:
            raise ConfigError("/params/h", "missing perturbation direction")
        _check_grid(params["h"], "/params/h", E.variable_names(spec.dim_space), spec.dim)
    out = raw.get("output", {}) or {}
    return TaskConfig(task, spec, copy.deepcopy(raw["metric"]), params, seed,
                      out.get("report"), out.get("csv"))


# ---------------------------------------------------------------------------
# payloads


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _arr(a):
    if a is None:
        return None
    return [_arr(v) for v in a] if np.ndim(a) > 0 else _num(a)


def _hyp_payload(rep):
    w = rep.witness
    return {
        "condition": rep.condition,
        "verdict": rep.verdict,
        "sup_value": _num(rep.sup_value),
        "witness": {"point": _arr(w.point), "N": _arr(w.N), "v": _arr(w.v)},
        "grid": {"points": rep.grid_size[0], "lattice": rep.grid_size[1]},
        "refinement_iters": rep.refinement_iters,
        "tol": rep.tol,
    }


def _trace_payload(trace, comparison):
    return {
        "source": trace.source,
        "samples": len(trace),
        "t_range": [_num(trace.t[0]), _num(trace.t[-1])],
        "blowup_t": _num(trace.blowup_t),
        "null_min_min": _num(np.min(trace.null_min)),
        "comparison": {"status": comparison.status, "first_t": _num(comparison.first_t)},
    }


def _grid(spec, params, seed):
    pts = M.grid_points(spec, params["grid"])
    extra = int(params.get("random_points", 0) or 0)
    if extra:
        rng = np.random.default_rng(seed)
        pts = np.concatenate([pts, M.random_points(spec, extra, rng)])
    return pts


def _matrix_function(grid):
    nodes = [[c if isinstance(c, (int, float)) else E.parse_metric_expression(c, names=["t"])
              for c in row] for row in grid]

    def B(t):
        return np.array([[float(c) if isinstance(c, (int, float)) else float(E.evaluate(c, [t]))
                          for c in row] for row in nodes])

    return B


def _run_hypotheses(cfg, pts):
    p = cfg.params
    h1 = H.scan_curvature_condition(cfg.metric, pts, False, p["tol"], p["density"])
    h1s = H.scan_curvature_condition(cfg.metric, pts, True, p["tol"], p["density"])
    chosen = h1s if p["strict"] else h1
    payload = {"H1": _hyp_payload(h1), "H1_strict": _hyp_payload(h1s)}
    summary = f"H1 {h1.verdict}, H1_strict {h1s.verdict} (sup {h1.sup_value:.6g})"
    return payload, chosen.verdict, summary, None


def _run_riccati(cfg):
    p = cfg.params
    trace = R.integrate_riccati(_matrix_function(p["B"]), float(p["T"]), float(p["t0"]),
                                float(p["ode_tol"]), sample_times=p["sample_times"])
    cmp_ = R.verify_comparison(trace, p["tol"])
    payload = _trace_payload(trace, cmp_)
    payload["samples_at"] = _samples_at(trace, p["sample_times"])
    return payload, cmp_.status, f"comparison {cmp_}", trace


def _samples_at(trace, times):
    out = []
    for t in times:
        try:
            i = trace.at(t)
        except KeyError:
            continue
        out.append({"t": _num(trace.t[i]), "L": _arr(trace.L[i]), "null_min": _num(trace.null_min[i])})
    return out


def _base_point(cfg):
    base = cfg.params.get("base")
    if base is None:
        return 0.5 * (cfg.metric.lower + cfg.metric.upper)
    return np.asarray(base, dtype=float)


def _run_frame_riccati(cfg):
    p = cfg.params
    if p["direction"] is None:
        raise ConfigError("/params/direction", "missing ray direction")
    ray = radial_ray(cfg.metric, _base_point(cfg), p["direction"], float(p["r_max"]))
    trace = R.integrate_frame_riccati(cfg.metric, ray, float(p["ode_tol"]), sample_times=p["sample_times"])
    cmp_ = R.verify_comparison(trace, p["tol"])
    payload = _trace_payload(trace, cmp_)
    payload["samples_at"] = _samples_at(trace, p["sample_times"])
    return payload, cmp_.status, f"shape operator {cmp_}", trace


def _run_strictify(cfg, pts):
    p = cfg.params
    res = H.strictify(cfg.metric, pts, float(p["margin"]), p["delta"], p["tol"], p["density"])
    payload = {
        "constants": {"C0": res.C0, "lambda": res.lam, "C1": res.C1, "delta": res.delta},
        "f": res.f_string,
        "base": _hyp_payload(res.base_report),
        "verified": _hyp_payload(res.verified),
        "notes": res.notes,
    }
    summary = (f"C0={res.C0:.6g} lambda={res.lam:.6g} C1={res.C1:.6g} delta={res.delta:.6g}; "
               f"H1_strict {res.verified.verdict}")
    return payload, res.verified.verdict, summary, None


def _run_pseudoconvexity(cfg):
    p = cfg.params
    base = _base_point(cfg)
    probes = P.default_probe_set(cfg.metric, base, int(p["rays"]), float(p["r_max"]),
                                 float(p["r_step"]), float(p["beta_max"]))
    rep = P.verify_pseudoconvexity(cfg.metric, base, probes, p["tol"], p["method"])
    rows = []
    for pr in rep.probes:
        rows.append({
            "ray": pr.ray_index, "r": _num(pr.r), "q": _arr(pr.q),
            "min_null_hessian": _num(pr.min_null_hessian), "witness": _arr(pr.witness),
            "fd_value": _num(pr.fd_value), "disagreement": _num(pr.disagreement), "error": pr.error,
        })
    payload = {"base": _arr(base), "method": rep.method, "verdict": rep.verdict,
               "min_value": _num(rep.min_value), "max_disagreement": _num(rep.max_disagreement),
               "skipped": rep.skipped, "notes": rep.notes, "probes": rows}
    verdict = {"strict": "pass", "boundary": "boundary", "fail": "fail"}[rep.verdict]
    return payload, verdict, f"pseudo-convexity {rep.verdict} (min {rep.min_value:.6g})", rep


def _run_perturb(cfg, pts):
    p = cfg.params
    scan = H.perturbation_scan(cfg.metric, p["h"], list(p["epsilons"]), pts, p["tol"], p["density"])
    rows = []
    for eps, rep, err in zip(scan.epsilons, scan.verdicts, scan.errors):
        rows.append({"eps": eps, "report": None if rep is None else _hyp_payload(rep), "error": err})
    payload = {"kappa": _num(scan.kappa), "h": p["h"], "results": rows,
               "largest_passing": scan.largest_passing, "warnings": scan.warnings}
    ok = all(r is not None and r.passed for r in scan.verdicts)
    return payload, "pass" if ok else "fail", f"largest passing eps {scan.largest_passing}", None


def execute(cfg):
    """Run the task of a parsed config: ``(payload, verdict, summary, trace)``."""
    if cfg.task == "hypotheses":
        return _run_hypotheses(cfg, _grid(cfg.metric, cfg.params, cfg.seed))
    if cfg.task == "riccati":
        return _run_riccati(cfg)
    if cfg.task == "frame-riccati":
        return _run_frame_riccati(cfg)
    if cfg.task == "strictify":
        return _run_strictify(cfg, _grid(cfg.metric, cfg.params, cfg.seed))
    if cfg.task == "pseudoconvexity":
        return _run_pseudoconvexity(cfg)
    return _run_perturb(cfg, _grid(cfg.metric, cfg.params, cfg.seed))


def _echo(cfg):
    return {"task": cfg.task, "metric": cfg.metric_config, "params": cfg.params, "seed": cfg.seed}


def run_config(path, task=None, overrides=None, out=None, csv=None):
    """Load, run and report. Returns ``(RunReport, trace_or_None)``.

    Config errors raise :class:`ConfigError`; task failures are embedded
    in the report with exit code 1.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    cfg = parse_task_config(raw, task, overrides)
    start = time.perf_counter()
    trace = None
    try:
        payload, verdict, summary, trace = execute(cfg)
        code = EXIT_FAIL if verdict == "fail" else EXIT_OK
        error = None
    except ConfigError:
        raise
    except Exception as exc:  # task errors go into the report
        payload, verdict, summary = None, "error", f"error: {exc}"
        code, error = EXIT_ERROR, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - start
    report = RunReport(__version__, cfg.task, _echo(cfg), cfg.seed, wall, payload, verdict,
                       summary, code, error)
    out = out or cfg.report_path
    csv = csv or cfg.csv_path
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_json())
        report.written_to = out
    if csv and trace is not None:
        emit_trace_csv(trace, csv)
    return report, trace


# ---------------------------------------------------------------------------
# CSV


def _fmt(x):
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "nan"


def trace_rows(trace):
    """Header and rows for a Riccati trace, geodesic path or probe report."""
    if isinstance(trace, R.RiccatiTrace):
        if len(trace) == 0:
            raise ValueError("empty trace")
        m = trace.L.shape[-1]
        header = ["t"] + [f"L{i}{j}" for i in range(m) for j in range(m)] + ["null_min"]
        rows = [[t, *L.reshape(-1), v] for t, L, v in zip(trace.t, trace.L, trace.null_min)]
        return header, rows
    if isinstance(trace, GeodesicPath):
        if len(trace.s) == 0:
            raise ValueError("empty trace")
        d = trace.points.shape[1]
        header = ["s"] + [f"x{i}" for i in range(d)] + [f"v{i}" for i in range(d)]
        return header, [[s, *x, *v] for s, x, v in zip(trace.s, trace.points, trace.tangents)]
    if isinstance(trace, P.PseudoconvexityReport):
        if not trace.probes:
            raise ValueError("empty trace")
        header = ["ray", "r", "min_null_hessian", "fd_value"]
        rows = [[pr.ray_index, pr.r, pr.min_null_hessian,
                 math.nan if pr.fd_value is None else pr.fd_value] for pr in trace.probes]
        return header, rows
    raise TypeError(f"cannot dump {type(trace).__name__}")


def emit_trace_csv(trace, path):
    header, rows = trace_rows(trace)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="lorcheck", description=__doc__.split("\n")[0])
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True, help="task config (JSON)")
    ap.add_argument("--out", help="report path (default: config output.report, else stdout)")
    ap.add_argument("--csv", help="trace CSV path")
    ap.add_argument("--grid", type=int, help="grid points per axis")
    ap.add_argument("--seed", type=int, help="random seed")
    ap.add_argument("--tol", type=float, help="verdict tolerance")
    ap.add_argument("--version", action="version", version=f"lorcheck {__version__}")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"grid": args.grid, "seed": args.seed, "tol": args.tol}
    try:
        report, _ = run_config(args.config, args.task, overrides, args.out, args.csv)
    except ConfigError as exc:
        print(f"lorcheck: config error at {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"lorcheck: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if report.written_to is None:
        sys.stdout.write(report.to_json())
    print(f"{report.task}: {report.summary}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
