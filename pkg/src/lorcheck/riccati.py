"""The singular matrix Riccati problem ``t L' + L^2 - L + t^2 B = 0, L(0) = id``.

The equation has a regular singular point at ``t = 0``; integration starts
at a small ``t0`` from the second-order jet ``L(0) = id, L'(0) = 0,
L''(0) = -2/3 B(0)``. Deviations from the regular solution decay like
``t0 / t``, so the start error does not grow.

The same equation, with ``B`` the directional curvature matrix in a
parallel frame, governs the shape operator of the level sets of the
Lorentzian distance along a radial geodesic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nullcone
from .curvature import directional_matrix, riemann_from_arrays
from .geodesics import GEODESIC_TOL, RadialRay, _run
from .metric import metric_arrays
from .ode import integrate

T0 = 1e-3
BLOWUP = 1e8
MAX_STEP = 1e-2
RICCATI_TOL = 1e-11
COMPARISON_TOL = 1e-12


class RiccatiError(RuntimeError):
    pass


@dataclass
class RiccatiTrace:
    """Sampled solution with the null-cone minimum of every sample.

    ``null_min[i] = min <L(t_i) v, v>`` over null ``v = (1, w)``, ``|w| = 1``;
    ``B`` holds the coefficient matrix at each sample.
    """

    t: np.ndarray
    L: np.ndarray
    null_min: np.ndarray
    witnesses: np.ndarray
    B: np.ndarray
    source: str
    blowup_t: float | None = None
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def at(self, t):
        """Index of the sample at time ``t`` (exact match required)."""
        hits = np.flatnonzero(np.isclose(self.t, t, rtol=0, atol=1e-12))
        if not hits.size:
            raise KeyError(f"no sample at t={t}")
        return int(hits[0])


def riccati_initial_condition(B0, t0=T0):
    """``L(t0) = id - t0^2 B(0) / 3`` from the jet at the singular point."""
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    B0 = np.asarray(B0, dtype=float)
    return np.eye(B0.shape[0]) - (t0 * t0 / 3.0) * B0


def _null_minima(Ls, density):
    vals = np.empty(len(Ls))
    wit = np.empty((len(Ls), Ls.shape[-1]))
    for i, L in enumerate(Ls):
        vals[i], wit[i] = nullcone.null_min(L, density)
    return vals, wit


def integrate_riccati(B, T, t0=T0, tol=RICCATI_TOL, max_step=MAX_STEP, sample_times=(),
                      density=nullcone.DEFAULT_DENSITY):
    """Integrate ``L' = (L - L^2 - t^2 B(t)) / t`` from ``t0`` to ``T``.

    ``B`` is a callable ``t -> (m, m)`` array. Integration stops and sets
    ``blowup_t`` once ``|L|`` exceeds ``1e8``.
    """
    if not 0 < t0 < T:
        raise ValueError("need 0 < t0 < T")
    try:
        B0 = np.asarray(B(0.0), dtype=float)
    except Exception as exc:
        raise RiccatiError(f"B(0) evaluation failed: {exc}") from exc
    m = B0.shape[0]
    nullcone.check_eta_symmetric(B0, 1e-8)
    L0 = riccati_initial_condition(B0, t0)

    def rhs(t, y):
        L = y.reshape(m, m)
        try:
            Bt = np.asarray(B(t), dtype=float)
        except Exception as exc:
            raise RiccatiError(f"B({t}) evaluation failed: {exc}") from exc
        return ((L - L @ L - (t * t) * Bt) / t).reshape(-1)

    blow = []

    def on_step(t, y):
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP:
            blow.append(t)
            return True
        return False

    ts, ys, _ = integrate(rhs, t0, L0.reshape(-1), T, tol=tol, max_step=max_step,
                          sample_times=sample_times, on_step=on_step)
    Ls = ys.reshape(-1, m, m)
    blowup_t = blow[0] if blow else None
    if blowup_t is not None:
        ts, Ls = ts[:-1], Ls[:-1]
    vals, wit = _null_minima(Ls, density)
    Bs = np.array([np.asarray(B(t), dtype=float) for t in ts])
    return RiccatiTrace(ts, Ls, vals, wit, Bs, "abstract", blowup_t)


@dataclass(frozen=True)
class ComparisonResult:
    status: str
    first_t: float | None = None
    min_value: float = math.nan

    def __str__(self):
        return self.status if self.first_t is None else f"{self.status}({self.first_t:g})"


def verify_comparison(trace, tol=COMPARISON_TOL):
    """Check ``<L(t) v, v> > 0`` on the null cone at every sample (``-L`` null negative-definite)."""
    vals = np.asarray(trace.null_min)
    if vals.size == 0:
        raise ValueError("empty trace")
    lowest = float(np.min(vals))
    below = np.flatnonzero(vals < -tol)
    if below.size:
        return ComparisonResult("fail", float(trace.t[below[0]]), lowest)
    if np.all(vals > tol):
        return ComparisonResult("pass", None, lowest)
    return ComparisonResult("boundary", None, lowest)


# ---------------------------------------------------------------------------
# frame Riccati along a radial geodesic


class _FrameRiccatiField:
    """Geodesic, parallel frame and shape-operator matrix, advanced together.

    Row layout ``[x (d), v (d), e_0..e_{k-1} (k d), S (k k)]``.
    """

    def __init__(self, spec, k, eps):
        self.spec = spec
        self.d = spec.dim
        self.k = k
        self.eps = eps

    def split(self, y):
        d, k = self.d, self.k
        x = y[:d]
        v = y[d:2 * d]
        e = y[2 * d:2 * d + k * d].reshape(k, d)
        S = y[2 * d + k * d:].reshape(k, k)
        return x, v, e, S

    def __call__(self, r, y):
        x, v, e, S = self.split(y)
        if not np.all(self.spec.in_domain(x)):
            raise RiccatiError(f"radial geodesic leaves the domain at r={r:g}")
        g, dg, d2g = metric_arrays(self.spec, x, order=2, check=False)
        gamma, lo, _ = riemann_from_arrays(g, dg, d2g)
        Rt = directional_matrix(lo, e, self.eps, v)
        out = np.empty_like(y)
        d, k = self.d, self.k
        out[:d] = v
        out[d:2 * d] = -np.einsum("kij,i,j->k", gamma, v, v)
        out[2 * d:2 * d + k * d] = -np.einsum("kij,i,mj->mk", gamma, v, e).reshape(-1)
        out[2 * d + k * d:] = ((S - S @ S - (r * r) * Rt) / r).reshape(-1)
        return out


def curvature_matrix_at(spec, x, vecs, eps, radial):
    g, dg, d2g = metric_arrays(spec, x, order=2, check=False)
    _, lo, _ = riemann_from_arrays(g, dg, d2g)
    return directional_matrix(lo, vecs, eps, radial)


def integrate_frame_riccati(spec, ray, tol=RICCATI_TOL, r0=T0, max_step=MAX_STEP,
                            sample_times=(), seed=None, density=nullcone.DEFAULT_DENSITY):
    """Shape-operator matrix ``S~(r)`` along the radial geodesic ``exp_p(r w)``.

    The frame at ``p`` is an orthonormal basis of ``w^perp`` (timelike vector
    first); it is parallel transported and ``S~`` solves
    ``r S~' - S~ + S~^2 + r^2 R~ = 0`` from the singular start.
    """
    if not isinstance(ray, RadialRay):
        raise TypeError("ray must be a RadialRay")
    p = spec.check_point(ray.base)
    w = np.asarray(ray.direction, dtype=float)
    g, _, _ = metric_arrays(spec, p, order=1, check=False)
    if abs(float(w @ g @ w) - 1.0) > 1e-10:
        raise ValueError("ray direction must satisfy g(w, w) = 1")
    frame0 = nullcone.complement_frame(g, w, seed=seed, base=p)
    k = len(frame0.vectors)
    eps = frame0.weights
    d = spec.dim
    # reach r0 along the geodesic with the frame in tow
    state = np.concatenate([p, w, frame0.vectors.reshape(-1)])[None, :]
    _, ys, exited = _run(spec, state, r0, GEODESIC_TOL, k=k)
    if exited[0]:
        raise RiccatiError("radial geodesic leaves the domain")
    y_r0 = ys[-1, 0, :]
    R0 = curvature_matrix_at(spec, p, frame0.vectors, eps, w)
    S0 = riccati_initial_condition(R0, r0)
    field_ = _FrameRiccatiField(spec, k, eps)
    y0 = np.concatenate([y_r0, S0.reshape(-1)])
    blow = []

    def on_step(r, y):
        S = y[2 * d + k * d:]
        if not np.all(np.isfinite(S)) or np.max(np.abs(S)) > BLOWUP:
            blow.append(r)
            return True
        return False

    ts, ys, _ = integrate(field_, r0, y0, ray.r_max, tol=tol, max_step=max_step,
                          sample_times=sample_times, on_step=on_step)
    if blow:
        ts, ys = ts[:-1], ys[:-1]
    xs = ys[:, :d]
    vs = ys[:, d:2 * d]
    es = ys[:, 2 * d:2 * d + k * d].reshape(-1, k, d)
    Ss = ys[:, 2 * d + k * d:].reshape(-1, k, k)
    g, dg, d2g = metric_arrays(spec, xs, order=2, check=False)
    _, lo, _ = riemann_from_arrays(g, dg, d2g)
    Rs = directional_matrix(lo, es, eps, vs)
    vals, wit = _null_minima(Ss, density)
    extras = {"points": xs, "tangents": vs, "frames": es, "weights": eps, "frame0": frame0}
    return RiccatiTrace(ts, Ss, vals, wit, Rs, "frame-geodesic",
                        blow[0] if blow else None, extras)
