"""Pseudo-convexity of the level sets of ``r_p^2``.

Along a radial geodesic ``exp_p(r w)`` the frame Riccati solution ``S~(r)``
gives ``Hess r_p^2(N, N) = 2 <S~ n, n>_eta`` for ``N = sum n_j e_j`` in the
transported frame of ``grad r_p``'s orthogonal complement. Null ``N`` are
exactly the eta-null coefficient vectors, so strict pseudo-convexity at a
probe is the null positive-definiteness of ``S~(r)``.

An independent route differentiates ``r_p^2`` numerically: every stencil
value is a shooting solve for ``log_p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nullcone
from .curvature import christoffel_from_arrays
from .geodesics import RadialRay, ShootingError, NotSpacelikeError, distance_squared_batch, log_map
from .metric import DomainError, metric_arrays
from .riccati import RICCATI_TOL, RiccatiError, integrate_frame_riccati

FD_REL_STEP = 1e-3
ORACLE_SHOOT_TOL = 1e-12
PSEUDO_TOL = 1e-8
AGREEMENT_TOL = 1e-2
# below this magnitude both routes are compared in absolute terms
DISAGREEMENT_FLOOR = 1e-4
STRICT = "strict"
BOUNDARY = "boundary"
FAIL = "fail"


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# finite-difference oracle


def hessian_fd_oracle(spec, p, q, N, step=FD_REL_STEP, tol=ORACLE_SHOOT_TOL, v_hint=None):
    """``Hess r_p^2(N, N)`` at ``q`` by central differences of ``r_p^2``.

    ``N^i N^j (d_i d_j f - Gamma^k_ij d_k f)``: the second derivative along
    the chart line ``q + s N`` plus the connection term from the coordinate
    gradient. Steps are ``step * r_p(q)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    N = np.asarray(N, dtype=float)
    d = spec.dim
    try:
        v = log_map(spec, p, q, tol, v_hint)
        g_p, _, _ = metric_arrays(spec, p, order=1, check=False)
        n2 = float(v @ g_p @ v)
        if not n2 > 0:
            raise OracleError("probe point is not spacelike-separated from p")
        h = step * math.sqrt(n2)
        s = h / max(float(np.linalg.norm(N)), 1e-300)
        line = np.stack([q, q + s * N, q - s * N])
        targets = np.concatenate([line, q + h * np.eye(d), q - h * np.eye(d)])
        f, _ = distance_squared_batch(spec, p, targets, tol, np.tile(v, (len(targets), 1)))
    except (ShootingError, NotSpacelikeError, DomainError) as exc:
        raise OracleError(f"stencil evaluation failed: {exc}") from exc
    f0 = f[0]
    d2 = (f[1] + f[2] - 2.0 * f0) / (s * s)
    grad = (f[3:3 + d] - f[3 + d:]) / (2.0 * h)
    g, dg, _ = metric_arrays(spec, q, order=1, check=False)
    gamma = christoffel_from_arrays(g, dg)
    return float(d2 - np.einsum("kij,i,j,k->", gamma, N, N, grad))


# ---------------------------------------------------------------------------
# probe sets


@dataclass(frozen=True)
class ProbeSet:
    rays: tuple
    radii: tuple

    def __len__(self):
        return len(self.rays) * len(self.radii)


def hyperquadric_directions(spec, p, count, beta_max=0.5):
    """``count`` unit spacelike directions ``sinh(b) e0 + cosh(b) u`` at ``p``.

    ``u`` runs over a sphere lattice of the spatial frame and the boost
    parameter ``b`` cycles through ``[-beta_max, beta_max]`` by golden-ratio
    steps.
    """
    frame = nullcone.build_orthonormal_frame(spec, p)
    n = spec.dim_space
    us = nullcone.sphere_lattice(n, max(count, 2)) if n > 1 else np.array([[1.0], [-1.0]])
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    out = []
    for i in range(count):
        u = us[i % len(us)]
        b = beta_max * (2.0 * ((i * golden) % 1.0) - 1.0) if count > 1 else 0.0
        coeffs = np.concatenate([[math.sinh(b)], math.cosh(b) * u])
        out.append(frame.components(coeffs))
    return np.array(out)


def default_probe_set(spec, p, rays=3, r_max=1.0, r_step=0.2, beta_max=0.5):
    """Tensor grid of lattice rays and radii ``r_step, 2 r_step, ..., r_max``."""
    count = int(round(r_max / r_step))
    radii = tuple(round(r_step * (i + 1), 12) for i in range(count))
    dirs = hyperquadric_directions(spec, p, rays, beta_max)
    p = np.asarray(p, dtype=float)
    return ProbeSet(tuple(RadialRay(p, w, radii[-1]) for w in dirs), radii)


# ---------------------------------------------------------------------------
# verification


@dataclass
class Probe:
    ray_index: int
    direction: np.ndarray
    r: float
    q: np.ndarray | None = None
    min_null_hessian: float = math.nan
    witness: np.ndarray | None = None
    witness_frame: np.ndarray | None = None
    gradient: np.ndarray | None = None
    fd_value: float | None = None
    disagreement: float | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class PseudoconvexityReport:
    base: np.ndarray
    probes: list
    verdict: str
    method: str
    tol: float
    min_value: float
    max_disagreement: float | None = None
    skipped: int = 0
    notes: list = field(default_factory=list)

    @property
    def witness(self):
        ok = [pr for pr in self.probes if pr.ok]
        return min(ok, key=lambda pr: pr.min_null_hessian) if ok else None


def relative_disagreement(a, b, floor=DISAGREEMENT_FLOOR):
    return abs(a - b) / max(abs(a), abs(b), floor)


def _verdict(values, tol):
    lo = min(values)
    if lo < -tol:
        return FAIL
    if lo > tol:
        return STRICT
    return BOUNDARY


def verify_pseudoconvexity(spec, p, probe_set=None, tol=PSEUDO_TOL, method="riccati",
                           riccati_tol=RICCATI_TOL, density=nullcone.DEFAULT_DENSITY):
    """Minimum of ``Hess r_p^2(N, N)`` over null ``N`` orthogonal to ``grad r_p`` per probe.

    ``method`` is ``riccati`` (shape operator route), ``fd_oracle`` (minimize
    with the Riccati witness direction, value from finite differences) or
    ``both`` (Riccati values, each cross-checked by the oracle).
    Oracle values carry rounding noise near ``1e-8``; with ``fd_oracle``
    a boundary verdict needs ``tol`` above that.
    """
    if method not in ("riccati", "fd_oracle", "both"):
        raise ValueError(f"unknown method {method!r}")
    p = spec.check_point(np.asarray(p, dtype=float))
    if probe_set is None:
        probe_set = default_probe_set(spec, p)
    probes = []
    for ri, ray in enumerate(probe_set.rays):
        radii = [r for r in probe_set.radii if r <= ray.r_max + 1e-12]
        try:
            trace = integrate_frame_riccati(spec, ray, riccati_tol, sample_times=radii, density=density)
        except (RiccatiError, DomainError, nullcone.FrameError) as exc:
            probes.extend(Probe(ri, ray.direction, r, error=f"frame Riccati failed: {exc}") for r in radii)
            continue
        if trace.blowup_t is not None:
            note = f"shape operator blows up at r={trace.blowup_t:.6g}"
        for r in radii:
            if trace.blowup_t is not None and r >= trace.blowup_t:
                probes.append(Probe(ri, ray.direction, r, error=note))
                continue
            i = trace.at(r)
            vec = trace.witnesses[i]
            frames = trace.extras["frames"][i]
            N = vec @ frames
            probes.append(Probe(ri, ray.direction, r, trace.extras["points"][i],
                                2.0 * float(trace.null_min[i]) + 0.0, N, vec, trace.extras["tangents"][i]))
    if method != "riccati":
        for pr in probes:
            if not pr.ok:
                continue
            try:
                pr.fd_value = hessian_fd_oracle(spec, p, pr.q, pr.witness, v_hint=pr.r * pr.direction)
            except OracleError as exc:
                pr.error = str(exc)
                continue
            pr.disagreement = relative_disagreement(pr.min_null_hessian, pr.fd_value)
    ok = [pr for pr in probes if pr.ok]
    skipped = len(probes) - len(ok)
    if not ok:
        return PseudoconvexityReport(p, probes, FAIL, method, tol, math.nan, None, skipped,
                                     ["no probe could be evaluated"])
    key = "fd_value" if method == "fd_oracle" else "min_null_hessian"
    values = [getattr(pr, key) for pr in ok]
    dis = [pr.disagreement for pr in ok if pr.disagreement is not None]
    report = PseudoconvexityReport(p, probes, _verdict(values, tol), method, tol, float(min(values)),
                                   max(dis) if dis else None, skipped)
    if skipped:
        report.notes.append(f"{skipped} probe(s) skipped, see per-probe errors")
    if method == "both" and dis and max(dis) > AGREEMENT_TOL:
        report.notes.append(f"route disagreement {max(dis):.3e} exceeds {AGREEMENT_TOL:g}")
    return report
