"""Geodesics, exponential/log maps, causal type and the Lorentzian distance.

All integrations go through one batched right-hand side, so the 2(n+1)+1
shots of a finite-difference shooting Jacobian advance together with a
shared step sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvature import christoffel_from_arrays
from .metric import DomainError, metric_arrays
from .nullcone import Frame
from .ode import integrate

GEODESIC_TOL = 1e-12
SHOOT_TOL = 1e-10
SHOOT_FD_STEP = 1e-5
SHOOT_MAX_ITER = 50
CONJUGATE_COND = 1e6
NULL_BAND = 1e-8


class ShootingError(RuntimeError):
    """Shooting for ``log_p(q)`` failed (possible conjugate point or (H2) failure)."""

    def __init__(self, message, residual=None, v=None, reason="non-convergence"):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual
        self.v = v
        self.reason = reason


class DomainExitError(DomainError):
    pass


class NotSpacelikeError(ValueError):
    pass


@dataclass(frozen=True)
class GeodesicPath:
    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    energy: float
    exited: bool = False

    @property
    def end(self):
        return self.points[-1]


@dataclass(frozen=True)
class RadialRay:
    base: np.ndarray
    direction: np.ndarray
    r_max: float


@dataclass(frozen=True)
class CausalClass:
    kind: str
    norm2: float
    v: np.ndarray

    @property
    def in_exterior(self):
        return self.kind == "spacelike"


@dataclass(frozen=True)
class TransportedFrame:
    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    vectors: np.ndarray  # (samples, k, d)
    weights: np.ndarray

    def frame_at(self, i):
        return Frame(self.points[i], self.vectors[i], self.weights)


class _Flow:
    """Batched geodesic + parallel-transport vector field.

    Row layout: ``[x (d), v (d), e_1 (d), ..., e_k (d)]``. Rows whose
    position leaves the domain are frozen and flagged in ``exited``.
    """

    def __init__(self, spec, rows, k=0):
        self.spec = spec
        self.d = spec.dim
        self.k = k
        self.exited = np.zeros(rows, dtype=bool)
        self.lo = spec._lo
        self.hi = spec._hi

    def __call__(self, s, y):
        d = self.d
        y = y.reshape(self.exited.size, (2 + self.k) * d)
        x = y[:, :d]
        inside = np.all((x >= self.lo - 1e-12) & (x <= self.hi + 1e-12), axis=1)
        if not np.all(inside):
            self.exited |= ~inside
            x = np.clip(x, self.lo, self.hi)
        g, dg, _ = metric_arrays(self.spec, x, order=1, check=False)
        gamma = christoffel_from_arrays(g, dg)
        v = y[:, d:2 * d]
        out = np.empty_like(y)
        out[:, :d] = v
        out[:, d:2 * d] = -np.einsum("bkij,bi,bj->bk", gamma, v, v)
        if self.k:
            e = y[:, 2 * d:].reshape(-1, self.k, d)
            out[:, 2 * d:] = -np.einsum("bkij,bi,bmj->bmk", gamma, v, e).reshape(-1, self.k * d)
        out[self.exited] = 0.0
        return out.reshape(-1)


def _run(spec, states, s_max, tol, k=0, max_step=math.inf, sample_times=(), stop_on_exit=False):
    rows = states.shape[0]
    flow = _Flow(spec, rows, k)
    on_step = (lambda s, y: bool(flow.exited.any())) if stop_on_exit else None
    ts, ys, _ = integrate(flow, 0.0, states.reshape(-1), s_max, tol=tol, max_step=max_step,
                          sample_times=sample_times, on_step=on_step)
    return ts, ys.reshape(len(ts), rows, -1), flow.exited.copy()


def _inner(g, a, b):
    return np.einsum("...i,...ij,...j->...", a, g, b)


def integrate_geodesic(spec, p, v, s_max=1.0, tol=GEODESIC_TOL, max_step=math.inf):
    """Solve the geodesic equation from ``(p, v)`` up to affine time ``s_max``.

    Stops early with ``exited=True`` if the path leaves the domain box; the
    returned samples then end at the last state inside the box.
    """
    p = spec.check_point(np.asarray(p, dtype=float))
    v = np.asarray(v, dtype=float)
    g0, _, _ = metric_arrays(spec, p, order=1, check=False)
    state = np.concatenate([p, v])[None, :]
    ts, ys, exited = _run(spec, state, s_max, tol, max_step=max_step, stop_on_exit=True)
    ys = ys[:, 0, :]
    out_exit = bool(exited[0])
    if out_exit:
        ts, ys = ts[:-1], ys[:-1]
    d = spec.dim
    return GeodesicPath(ts, ys[:, :d].copy(), ys[:, d:].copy(), float(_inner(g0, v, v)), out_exit)


def geodesic_endpoints(spec, p, V, s_max=1.0, tol=GEODESIC_TOL):
    """Endpoints of many geodesics from ``p``; returns ``(points, exited)``."""
    p = np.asarray(p, dtype=float)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    P = np.broadcast_to(p, V.shape)
    _, ys, exited = _run(spec, np.concatenate([P, V], axis=1), s_max, tol)
    return ys[-1, :, :spec.dim].copy(), exited


def exp_map(spec, p, v, tol=GEODESIC_TOL):
    p = spec.check_point(np.asarray(p, dtype=float))
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return p.copy()
    pts, exited = geodesic_endpoints(spec, p, v[None, :], 1.0, tol)
    if exited[0]:
        raise DomainExitError("geodesic leaves the domain before s = 1")
    return pts[0]


def _evaluate_shots(spec, p, V, h, tol):
    """Residual endpoints and central-difference Jacobians for each row of V."""
    m, d = V.shape
    offsets = np.concatenate([np.zeros((1, d)), h * np.eye(d), -h * np.eye(d)])
    shots = (V[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    pts, exited = geodesic_endpoints(spec, p, shots, 1.0, tol)
    pts = pts.reshape(m, 2 * d + 1, d)
    exited = exited.reshape(m, 2 * d + 1).any(axis=1)
    ends = pts[:, 0, :]
    J = (pts[:, 1:d + 1, :] - pts[:, d + 1:, :]) / (2 * h)
    return ends, np.swapaxes(J, 1, 2), exited


def log_map_batch(spec, p, Q, tol=SHOOT_TOL, V0=None, fd_step=SHOOT_FD_STEP,
                  max_iter=SHOOT_MAX_ITER, geodesic_tol=GEODESIC_TOL):
    """Damped Newton shooting for ``exp_p(v_i) = q_i`` on a batch of targets.

    Returns ``(V, residuals, errors)`` where ``errors[i]`` is ``None`` or the
    :class:`ShootingError` for target ``i``.
    """
    p = spec.check_point(np.asarray(p, dtype=float))
    Q = np.atleast_2d(spec.check_point(np.asarray(Q, dtype=float)))
    m, d = Q.shape
    V = (Q - p) if V0 is None else np.array(V0, dtype=float).reshape(m, d)
    errors = [None] * m
    res = np.full(m, np.inf)
    ends, J, exited = _evaluate_shots(spec, p, V, fd_step, geodesic_tol)
    F = ends - Q
    res = np.where(exited, np.inf, np.linalg.norm(F, axis=1))
    active = np.ones(m, dtype=bool)
    for i in np.flatnonzero(exited):
        errors[i] = ShootingError("domain exit during shooting", None, V[i].copy(), "domain-exit")
        active[i] = False
    alpha = np.ones(m)
    step = np.zeros((m, d))
    done = res < tol
    active &= ~done
    for i in np.flatnonzero(active):
        step[i] = _newton_step(J[i], F[i])
    it = 0
    while active.any() and it < max_iter:
        it += 1
        idx = np.flatnonzero(active)
        trial = V[idx] + alpha[idx, None] * step[idx]
        t_ends, t_J, t_exit = _evaluate_shots(spec, p, trial, fd_step, geodesic_tol)
        t_F = t_ends - Q[idx]
        t_res = np.where(t_exit, np.inf, np.linalg.norm(t_F, axis=1))
        for n, i in enumerate(idx):
            if t_res[n] < res[i]:
                V[i], F[i], J[i], res[i] = trial[n], t_F[n], t_J[n], t_res[n]
                alpha[i] = 1.0
                if res[i] < tol:
                    done[i] = True
                    active[i] = False
                else:
                    step[i] = _newton_step(J[i], F[i])
            else:
                alpha[i] *= 0.5
                if alpha[i] < 1e-8:
                    active[i] = False
    for i in range(m):
        if errors[i] is not None:
            continue
        if not done[i]:
            errors[i] = ShootingError("shooting did not converge", float(res[i]), V[i].copy())
        elif np.linalg.cond(J[i]) > CONJUGATE_COND:
            errors[i] = ShootingError("exponential map is singular at the solution (conjugate point)",
                                      float(res[i]), V[i].copy(), "conjugate")
    return V, res, errors


def _newton_step(J, F):
    try:
        return np.linalg.solve(J, -F)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(J, -F, rcond=None)[0]


def log_map(spec, p, q, tol=SHOOT_TOL, v0=None):
    """Initial velocity ``v`` with ``exp_p(v) = q`` (chart error below ``tol``)."""
    V, _, errors = log_map_batch(spec, p, np.asarray(q, dtype=float)[None, :], tol,
                                 None if v0 is None else np.asarray(v0)[None, :])
    if errors[0] is not None:
        raise errors[0]
    return V[0]


def causal_type(norm2, vnorm2, band=NULL_BAND):
    if abs(norm2) <= band * vnorm2:
        return "null"
    return "spacelike" if norm2 > 0 else "timelike"


def causal_classify(spec, p, q, tol=SHOOT_TOL, v0=None):
    """Causal type of ``log_p(q)``; ``spacelike`` means ``q`` lies in the exterior set."""
    p = np.asarray(p, dtype=float)
    v = log_map(spec, p, q, tol, v0)
    g, _, _ = metric_arrays(spec, p, order=1)
    n2 = float(v @ g @ v)
    return CausalClass(causal_type(n2, float(v @ v)), n2, v)


def lorentzian_distance(spec, p, q, tol=SHOOT_TOL, v0=None):
    """``r_p(q) = sqrt(g_p(v, v))`` for ``v = log_p(q)`` spacelike."""
    cc = causal_classify(spec, p, q, tol, v0)
    if cc.kind != "spacelike":
        raise NotSpacelikeError(f"q is {cc.kind}-separated from p")
    return math.sqrt(cc.norm2)


def distance_squared_batch(spec, p, Q, tol=SHOOT_TOL, V0=None):
    """``r_p^2`` at many points (``nan`` where shooting fails or not spacelike)."""
    V, _, errors = log_map_batch(spec, p, Q, tol, V0)
    for e in errors:
        if e is not None:
            raise e
    g, _, _ = metric_arrays(spec, np.asarray(p, dtype=float), order=1)
    n2 = np.einsum("bi,ij,bj->b", V, g, V)
    for n2_i, v in zip(n2, V):
        if causal_type(n2_i, v @ v) != "spacelike":
            raise NotSpacelikeError("stencil point left the exterior of the null cone")
    return n2, V


def parallel_transport_frame(spec, path, frame0, tol=GEODESIC_TOL, sample_times=None):
    """Transport ``frame0`` along the geodesic that ``path`` starts with.

    The geodesic is re-integrated together with the frame vectors
    (``e' + Gamma(x', e) = 0``) by the same adaptive scheme.
    """
    p = np.asarray(path.points[0], dtype=float)
    v = np.asarray(path.tangents[0], dtype=float)
    vecs = np.asarray(frame0.vectors, dtype=float)
    k = vecs.shape[0]
    s_max = float(path.s[-1])
    state = np.concatenate([p, v, vecs.reshape(-1)])[None, :]
    marks = path.s if sample_times is None else sample_times
    ts, ys, exited = _run(spec, state, s_max, tol, k=k, sample_times=marks, stop_on_exit=True)
    if exited[0]:
        raise DomainExitError("transport path leaves the domain")
    ys = ys[:, 0, :]
    d = spec.dim
    return TransportedFrame(ts, ys[:, :d].copy(), ys[:, d:2 * d].copy(),
                            ys[:, 2 * d:].reshape(len(ts), k, d).copy(),
                            np.asarray(frame0.weights, dtype=float))


def radial_ray(spec, p, direction, r_max):
    """Ray with ``direction`` normalized onto the hyperquadric ``g(w, w) = 1``."""
    p = spec.check_point(np.asarray(p, dtype=float))
    w = np.asarray(direction, dtype=float)
    g, _, _ = metric_arrays(spec, p, order=1, check=False)
    n2 = float(w @ g @ w)
    if not n2 > 0:
        raise NotSpacelikeError("ray direction must be spacelike")
    return RadialRay(p, w / math.sqrt(n2), float(r_max))
