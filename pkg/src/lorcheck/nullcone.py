"""Linear algebra for the Minkowski form ``<v, w> = -v0 w0 + sum_j vj wj``.

Null vectors are parametrized by the slice ``v = (1, w)`` with ``|w| = 1``;
by homogeneity (and evenness of quadratic forms) the sign of ``<Lv, v>`` on
the whole null cone is decided on that sphere. Extrema are located by a
lattice scan followed by a Nelder-Mead polish in a tangent chart.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .metric import metric_arrays

DEFAULT_TOL = 1e-8
DEFAULT_DENSITY = 512
SYMMETRY_TOL = 1e-10
REFINE_XATOL = 1e-10
_IMPROVE = 1e-15


class NullConeError(ValueError):
    pass


class FrameError(ValueError):
    pass


def eta(m):
    d = np.ones(m)
    d[0] = -1.0
    return np.diag(d)


def minkowski_inner(v, w):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return -v[..., 0] * w[..., 0] + np.sum(v[..., 1:] * w[..., 1:], axis=-1)


def eta_symmetry_residual(L):
    L = np.asarray(L, dtype=float)
    S = L.copy()
    S[..., 0, :] *= -1.0
    return float(np.max(np.abs(S - np.swapaxes(S, -1, -2))))


def check_eta_symmetric(L, tol=SYMMETRY_TOL):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NullConeError("expected a square matrix")
    if L.shape[0] < 2:
        raise NullConeError("need dimension m >= 2")
    scale = max(1.0, float(np.max(np.abs(L))))
    if eta_symmetry_residual(L) > tol * scale:
        raise NullConeError("matrix is not symmetric for the Minkowski form")
    return L


# ---------------------------------------------------------------------------
# sphere lattices and the simplex polish


@functools.lru_cache(maxsize=32)
def sphere_lattice(k, count=DEFAULT_DENSITY):
    """Deterministic, roughly uniform points on the unit sphere of ``R^k``."""
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        a = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    if k == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        rho = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + 5.0**0.5) * i
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    pts = np.random.default_rng(k).standard_normal((count, k))
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


def lattice_spacing(k, count):
    if k <= 1:
        return 0.0
    area = 2.0 * math.pi ** (k / 2) / math.gamma(k / 2)
    return (area / count) ** (1.0 / (k - 1))


def nelder_mead(f, x0, step, xatol=REFINE_XATOL, fatol=1e-15, maxiter=400):
    """Minimize ``f`` with the reflect/expand/contract/shrink simplex scheme."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    simplex = [x0]
    for i in range(n):
        x = x0.copy()
        x[i] += step
        simplex.append(x)
    values = [f(x) for x in simplex]
    for _ in range(maxiter):
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        spread = max(np.max(np.abs(x - simplex[0])) for x in simplex[1:])
        if spread <= xatol and abs(values[-1] - values[0]) <= fatol:
            break
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (worst - centroid)
        fc = f(xc)
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue
        best = simplex[0]
        simplex = [best] + [best + 0.5 * (x - best) for x in simplex[1:]]
        values = [values[0]] + [f(x) for x in simplex[1:]]
    i = int(np.argmin(values))
    return simplex[i], values[i]


def _nelder_mead_1d(f, x0, step, xatol=REFINE_XATOL, fatol=1e-15, maxiter=400):
    """Scalar specialization of :func:`nelder_mead` (two-point simplex)."""
    a, b = x0, x0 + step
    fa, fb = f(a), f(b)
    for _ in range(maxiter):
        if fb < fa:
            a, b, fa, fb = b, a, fb, fa
        if abs(b - a) <= xatol and abs(fb - fa) <= fatol:
            break
        xr = 2.0 * a - b
        fr = f(xr)
        if fr < fa:
            xe = 3.0 * a - 2.0 * b
            fe = f(xe)
            if fe < fr:
                b, fb = xe, fe
            else:
                b, fb = xr, fr
            continue
        xc = a + 0.5 * (xr - a) if fr < fb else a + 0.5 * (b - a)
        fc = f(xc)
        if fc < min(fr, fb):
            b, fb = xc, fc
        else:
            b = a + 0.5 * (b - a)
            fb = f(b)
    return (a, fa) if fa <= fb else (b, fb)


def _tangent_basis(w):
    """Orthonormal basis (rows) of the complement of the unit vector ``w``."""
    k = w.size
    q, _ = np.linalg.qr(np.column_stack([w, np.eye(k)]))
    return q[:, 1:k].T


def _slice_form(L):
    """Coefficients of ``q(w) = <L(1,w), (1,w)>`` as ``c + 2 b.w + w.A.w``."""
    M = np.asarray(L, dtype=float).copy()
    M[0, :] *= -1.0
    M = 0.5 * (M + M.T)
    return M[0, 0], M[0, 1:], M[1:, 1:]


def slice_maximum(L, density=DEFAULT_DENSITY):
    """Max of ``<Lv, v>`` over ``v = (1, w)``, ``|w| = 1``: ``(value, w)``."""
    c, b, A = _slice_form(L)
    k = b.size
    pts = sphere_lattice(k, density if k > 1 else 2)
    vals = c + 2.0 * pts @ b + np.einsum("ni,ij,nj->n", pts, A, pts)
    i = int(np.argmax(vals))
    w_best, q_best = pts[i].copy(), float(vals[i])
    if k == 1:
        return q_best, w_best
    if k == 2:
        theta0 = math.atan2(w_best[1], w_best[0])
        c0, (b0, b1) = float(c), (float(b[0]), float(b[1]))
        a00, a01, a11 = float(A[0, 0]), float(A[0, 1]), float(A[1, 1])

        def neg_q1(theta):
            x, y = math.cos(theta), math.sin(theta)
            return -(c0 + 2.0 * (b0 * x + b1 * y) + a00 * x * x + 2.0 * a01 * x * y + a11 * y * y)

        theta, f1 = _nelder_mead_1d(neg_q1, theta0, lattice_spacing(2, density))
        if -f1 > q_best + _IMPROVE * (1.0 + abs(q_best)):
            w_best, q_best = np.array([math.cos(theta), math.sin(theta)]), -f1
        return q_best, w_best
    P = _tangent_basis(w_best)

    def neg_q(z):
        w = w_best + z @ P
        w = w / math.sqrt(w @ w)
        return -(c + 2.0 * (b @ w) + w @ A @ w)

    z, fz = nelder_mead(neg_q, np.zeros(k - 1), lattice_spacing(k, density))
    if -fz > q_best + _IMPROVE * (1.0 + abs(q_best)):
        w = w_best + z @ P
        w_best, q_best = w / np.linalg.norm(w), float(-fz)
    return q_best, w_best


def null_min(L, density=DEFAULT_DENSITY):
    """``min <Lv, v>`` over normalized null ``v = (1, w)``: ``(value, v)``."""
    value, w = slice_maximum(-np.asarray(L, dtype=float), density)
    return -value, np.concatenate([[1.0], w])


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class NullDefinitenessVerdict:
    """Sign of ``<Lv, v>`` on the null cone.

    ``margin`` is ``-max <Lv, v>`` over the normalized null slice, positive
    when ``L`` is null negative-definite; ``witness`` attains that maximum.
    """

    kind: str
    margin: float
    witness: np.ndarray

    @property
    def max_value(self):
        return -self.margin


ND = "null_negative_definite"
BOUNDARY = "null_negative_semidefinite_boundary"
INDEFINITE = "null_indefinite"


def classify_null_definiteness(L, tol=DEFAULT_TOL, density=DEFAULT_DENSITY):
    L = check_eta_symmetric(L)
    qmax, w = slice_maximum(L, density)
    if qmax < -tol:
        kind = ND
    elif qmax <= tol:
        kind = BOUNDARY
    else:
        kind = INDEFINITE
    return NullDefinitenessVerdict(kind, -qmax + 0.0, np.concatenate([[1.0], w]))


class NullEigenvectorError(NullConeError):
    def __init__(self, message, witness=None, residual=None):
        super().__init__(message)
        self.witness = witness
        self.residual = residual


def _lemma_eigenvalue(L, x):
    # Lx = c0 e0 + c1 x~ + (rest); at a boundary contact rest = 0 and c0 = c1
    Lx = L @ x
    c0 = Lx[0]
    c1 = Lx[1:] @ x[1:]
    lam = 0.5 * (c0 + c1)
    return lam, float(np.linalg.norm(Lx - lam * x))


def _polish_stationary(L, w, iters=20):
    """Newton on the Lagrange system of ``max q(w)`` subject to ``|w| = 1``."""
    c, b, A = _slice_form(L)
    k = w.size
    mu = float(w @ A @ w + b @ w)
    for _ in range(iters):
        F = np.concatenate([(A - mu * np.eye(k)) @ w + b, [0.5 * (w @ w - 1.0)]])
        if np.max(np.abs(F)) < 1e-15:
            break
        J = np.zeros((k + 1, k + 1))
        J[:k, :k] = A - mu * np.eye(k)
        J[:k, k] = -w
        J[k, :k] = w
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        w = w + step[:k]
        mu += step[k]
    return w / np.linalg.norm(w)


def find_null_eigenvector(L, tol=DEFAULT_TOL, density=DEFAULT_DENSITY):
    """Null ``x`` (with ``x0 = 1``) and ``lam`` with ``Lx = lam x``.

    Only defined when ``L`` touches the null cone from below, i.e. when the
    classification is the boundary kind.
    """
    L = check_eta_symmetric(L)
    verdict = classify_null_definiteness(L, tol, density)
    if verdict.kind != BOUNDARY:
        raise NullEigenvectorError(f"no boundary contact: {verdict.kind}", verdict.witness)
    bound = tol * max(np.linalg.norm(L, 2), np.finfo(float).tiny)
    x = verdict.witness
    lam, res = _lemma_eigenvalue(L, x)
    if res > bound:
        w = _polish_stationary(L, x[1:].copy())
        x2 = np.concatenate([[1.0], w])
        lam2, res2 = _lemma_eigenvalue(L, x2)
        if res2 < res:
            x, lam, res = x2, lam2, res2
    if res > bound:
        raise NullEigenvectorError("eigen-residual not achievable at tolerance", x, res)
    return x, float(lam)


# ---------------------------------------------------------------------------
# orthonormal frames


@dataclass(frozen=True)
class Frame:
    """g-orthonormal vectors (rows, chart components) with weights ``eps``."""

    base: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray

    def gram(self, g):
        return self.vectors @ g @ self.vectors.T

    def components(self, coeffs):
        """Chart components of ``sum_j coeffs[j] e_j``."""
        return np.asarray(coeffs, dtype=float) @ self.vectors


def _gram_schmidt(g, fixed, fixed_w, candidates, want, skip_tol=1e-10):
    vecs = list(fixed)
    weights = list(fixed_w)
    out, out_w = [], []
    for w in candidates:
        if len(out) == want:
            break
        u = np.asarray(w, dtype=float).copy()
        scale = max(float(u @ u), 1e-300)
        for _ in range(2):
            for e, s in zip(vecs, weights):
                u = u - s * (u @ g @ e) * e
        n2 = float(u @ g @ u)
        if abs(n2) < skip_tol * scale:
            continue
        e = u / math.sqrt(abs(n2))
        s = 1.0 if n2 > 0 else -1.0
        vecs.append(e)
        weights.append(s)
        out.append(e)
        out_w.append(s)
    return np.array(out), np.array(out_w)


def orthonormal_frame(g, seed, base=None):
    """Frame ``e0 = seed / |seed|`` followed by coordinate directions."""
    g = np.asarray(g, dtype=float)
    seed = np.asarray(seed, dtype=float)
    d = g.shape[0]
    n2 = float(seed @ g @ seed)
    if not n2 < 0:
        raise FrameError("seed vector is not timelike")
    e0 = seed / math.sqrt(-n2)
    rest, w = _gram_schmidt(g, [e0], [-1.0], np.eye(d), d - 1)
    if len(rest) != d - 1 or np.any(w < 0):
        raise FrameError("metric is degenerate or not Lorentzian")
    vecs = np.vstack([e0, rest])
    weights = np.concatenate([[-1.0], w])
    return Frame(None if base is None else np.asarray(base, float), vecs, weights)


def build_orthonormal_frame(spec, p, seed=None):
    """Signature-aware Gram-Schmidt frame at ``p`` starting from a timelike seed."""
    p = spec.check_point(np.asarray(p, dtype=float))
    g, _, _ = metric_arrays(spec, p, order=1, check=False)
    if seed is None:
        seed = np.eye(spec.dim)[0]
    return orthonormal_frame(g, seed, base=p)


def complement_frame(g, radial, seed=None, base=None):
    """Orthonormal frame of ``radial^perp`` (``radial`` spacelike) with ``e0`` timelike."""
    g = np.asarray(g, dtype=float)
    radial = np.asarray(radial, dtype=float)
    d = g.shape[0]
    r2 = float(radial @ g @ radial)
    if not r2 > 0:
        raise FrameError("radial vector is not spacelike")
    unit = radial / math.sqrt(r2)
    if seed is None:
        seed = np.eye(d)[0]
    cands = [np.asarray(seed, dtype=float)] + list(np.eye(d))
    vecs, w = _gram_schmidt(g, [unit], [1.0], cands, d - 1)
    if len(vecs) != d - 1 or w[0] >= 0 or np.any(w[1:] < 0):
        raise FrameError("could not build a Lorentzian frame of the orthogonal complement")
    return Frame(None if base is None else np.asarray(base, float), vecs, w)
