"""Null-curvature hypotheses, the strictifying conformal factor and stability scans.

At each grid point the null direction is ``N = e0 + n`` with ``n`` a unit
vector of the spatial frame and ``v = u`` with ``u`` a unit spatial vector
orthogonal to ``n``. Adding multiples of ``N`` to ``v`` leaves
``R(N, v, N, v)`` unchanged, so these ``v`` represent all of
``N^perp / span N``. For fixed ``n`` the maximum over ``u`` is the top
eigenvalue of ``u -> R(N, u, N, u)`` on ``n^perp``; the outer maximum over
``n`` runs on a sphere lattice followed by a simplex polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from . import metric as M
from .curvature import riemann_batch
from .nullcone import FrameError, lattice_spacing, nelder_mead, orthonormal_frame, sphere_lattice

SCAN_TOL = 1e-8
SCAN_DENSITY = 512
REFINE_POINTS = 4
H1 = "H1"
H1_STRICT = "H1_strict"


class HypothesisError(RuntimeError):
    pass


class KappaError(HypothesisError):
    def __init__(self, message, witness=None, value=None):
        super().__init__(message)
        self.witness = witness
        self.value = value


@dataclass(frozen=True)
class Witness:
    point: np.ndarray
    N: np.ndarray
    v: np.ndarray
    n: np.ndarray  # spatial frame coefficients of N - e0
    u: np.ndarray  # spatial frame coefficients of v


@dataclass
class HypothesisReport:
    condition: str
    verdict: str
    sup_value: float
    witness: Witness
    grid_size: tuple
    refinement_iters: int
    tol: float

    @property
    def passed(self):
        return self.verdict == "pass"


@dataclass
class StrictificationResult:
    C0: float
    lam: float
    C1: float
    delta: float
    f: E.Node
    metric: M.MetricSpec
    verified: HypothesisReport
    base_report: HypothesisReport
    notes: list = field(default_factory=list)

    @property
    def f_string(self):
        return E.to_string(self.f)


@dataclass
class PerturbationScan:
    kappa: float | None
    direction: list
    epsilons: list
    verdicts: list  # HypothesisReport or None when the metric lost its signature
    errors: list
    largest_passing: float | None
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# grids and frames


def resolve_grid(spec, grid):
    """``grid`` is points-per-axis (int) or an explicit ``(G, d)`` array."""
    if isinstance(grid, (int, np.integer)):
        if grid < 1:
            raise ValueError("grid must have at least one point per axis")
        return M.grid_points(spec, int(grid))
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.size == 0:
        raise ValueError("grid is empty")
    spec.check_point(pts)
    return pts


def _frames(spec, points):
    g, gamma, lo = riemann_batch(spec, points)
    frames = []
    for i, gi in enumerate(g):
        try:
            frames.append(orthonormal_frame(gi, np.eye(spec.dim)[0], points[i]).vectors)
        except FrameError as exc:
            raise HypothesisError(f"frame construction failed at {points[i].tolist()}: {exc}") from exc
    return g, gamma, lo, np.array(frames)


def _complement_bases(ns):
    """Orthonormal bases (columns) of ``n^perp`` in ``R^k`` for a batch of unit ``n``."""
    K, k = ns.shape
    w = ns.copy()
    sign = np.where(ns[:, 0] >= 0, 1.0, -1.0)
    w[:, 0] += sign
    H = np.eye(k)[None] - 2.0 * np.einsum("ki,kj->kij", w, w) / np.einsum("ki,ki->k", w, w)[:, None, None]
    return H[:, :, 1:]


class _PointForm:
    """``R(N, u, N, u)`` at one point in frame coordinates, maximized over ``u``."""

    def __init__(self, riemann_lo, frame, euclid=False):
        self.frame = frame
        self.Rf = np.einsum("ijkl,ai,bj,ck,dl->abcd", riemann_lo, frame, frame, frame, frame,
                            optimize=True)
        self.k = frame.shape[0] - 1
        self.euclid = euclid
        if euclid:
            self.Gs = frame[1:] @ frame[1:].T

    def values(self, ns, want_vectors=False):
        K = ns.shape[0]
        Nf = np.concatenate([np.ones((K, 1)), ns], axis=1)
        half = np.tensordot(Nf, self.Rf, axes=(1, 0))
        Mfull = np.einsum("kbcd,kc->kbd", half, Nf)[:, 1:, 1:]
        Q = _complement_bases(ns)
        A = np.einsum("kib,kij,kjc->kbc", Q, Mfull, Q)
        A = 0.5 * (A + np.swapaxes(A, 1, 2))
        if self.euclid:
            B = np.einsum("kib,ij,kjc->kbc", Q, self.Gs, Q)
            L = np.linalg.cholesky(B)
            Li = np.linalg.inv(L)
            A = Li @ A @ np.swapaxes(Li, 1, 2)
            A = 0.5 * (A + np.swapaxes(A, 1, 2))
            Nc = Nf @ self.frame
            norm_n = np.einsum("ki,ki->k", Nc, Nc)
        w, vec = np.linalg.eigh(A)
        vals = w[:, -1]
        if self.euclid:
            vals = vals / norm_n
        if not want_vectors:
            return vals
        y = vec[:, :, -1]
        if self.euclid:
            y = np.einsum("kji,kj->ki", Li, y)
        u = np.einsum("kib,kb->ki", Q, y)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return vals, u


def _sphere_max(fun, k, density, refine):
    """Maximize ``fun`` (batched over unit vectors of ``R^k``): ``(value, n, evals)``."""
    pts = sphere_lattice(k, density if k > 1 else 2)
    vals = fun(pts)
    i = int(np.argmax(vals))
    best_n, best = pts[i].copy(), float(vals[i])
    if not refine or k == 1:
        return best, best_n, len(pts)
    basis = np.linalg.qr(np.column_stack([best_n, np.eye(k)]))[0][:, 1:k].T
    count = [0]

    def neg(z):
        count[0] += 1
        w = best_n + z @ basis
        w = w / np.linalg.norm(w)
        return -float(fun(w[None])[0])

    z, fz = nelder_mead(neg, np.zeros(k - 1), lattice_spacing(k, density))
    if -fz > best:
        w = best_n + z @ basis
        best_n, best = w / np.linalg.norm(w), -fz
    return best, best_n, len(pts) + count[0]


def _scan(spec, grid, density, refine_points, euclid=False):
    if spec.dim_space < 2:
        raise HypothesisError("null-curvature conditions need at least two spatial dimensions")
    pts = resolve_grid(spec, grid)
    _, _, lo, frames = _frames(spec, pts)
    k = spec.dim_space
    lattice = sphere_lattice(k, density)
    forms = [_PointForm(lo[i], frames[i], euclid) for i in range(len(pts))]
    coarse = np.array([np.max(f.values(lattice)) for f in forms])
    order = np.argsort(-coarse, kind="stable")
    best = (-math.inf, None, None)
    iters = 0
    for rank, i in enumerate(order):
        if rank >= refine_points and coarse[i] <= best[0]:
            break
        val, n, evals = _sphere_max(forms[i].values, k, density, refine_points > 0)
        iters += evals - len(lattice)
        if val > best[0]:
            best = (val, i, n)
    val, i, n = best
    _, u = forms[i].values(n[None], want_vectors=True)
    u = u[0]
    fr = frames[i]
    N = fr[0] + n @ fr[1:]
    v = u @ fr[1:]
    return float(val), Witness(pts[i].copy(), N, v, n, u), (len(pts), len(lattice)), iters


def scan_curvature_condition(spec, grid=5, strict=False, tol=SCAN_TOL, density=SCAN_DENSITY,
                             refine_points=REFINE_POINTS):
    """Supremum of ``R(N, v, N, v)`` over the grid; verdict for (H1) or its strict form.

    ``pass`` iff ``sup <= tol`` (non-strict) or ``sup < -tol`` (strict).
    """
    sup, wit, size, iters = _scan(spec, grid, density, refine_points)
    ok = sup < -tol if strict else sup <= tol
    return HypothesisReport(H1_STRICT if strict else H1, "pass" if ok else "fail",
                            sup, wit, size, iters, tol)


def curvature_at_witness(spec, witness):
    """Re-evaluate ``R(N, v, N, v)`` at a witness from scratch."""
    _, _, lo = riemann_batch(spec, witness.point[None])
    N, v = witness.N, witness.v
    return float(np.einsum("ijkl,i,j,k,l->", lo[0], N, v, N, v))


# ---------------------------------------------------------------------------
# constants of the conformal construction


def _null_chart_vectors(frame, lattice):
    Nf = np.concatenate([np.ones((len(lattice), 1)), lattice], axis=1)
    return Nf @ frame


def _hess_t_ratios(gamma, Ns):
    """``Hess t(N, N) / N(t)^2 = -Gamma^0_ij N^i N^j / (N^0)^2`` per lattice vector."""
    n0 = Ns[:, 0]
    if np.any(np.abs(n0) < 1e-12 * np.linalg.norm(Ns, axis=1)):
        raise HypothesisError("null vector with vanishing dt component: t is not a time function here")
    return -np.einsum("ij,ki,kj->k", gamma[0], Ns, Ns) / (n0 * n0)


def estimate_C0(spec, grid=5, density=SCAN_DENSITY):
    """Max of ``|Hess t(N, N)| / N(t)^2`` over grid points and a null lattice."""
    pts = resolve_grid(spec, grid)
    _, gamma, _, frames = _frames(spec, pts)
    lattice = sphere_lattice(spec.dim_space, density)
    best = 0.0
    for i in range(len(pts)):
        ratios = _hess_t_ratios(gamma[i], _null_chart_vectors(frames[i], lattice))
        best = max(best, float(np.max(np.abs(ratios))))
    return best


def estimate_C1(spec, grid, lam, density=SCAN_DENSITY):
    """Min of ``Hess tau(N, N) / N(tau)^2`` for ``tau = exp(lam t)``.

    ``Hess tau(N, N) = lam e^{lam t} (lam N(t)^2 + Hess t(N, N))`` and
    ``N(tau) = lam e^{lam t} N(t)``, so the ratio is
    ``e^{-lam t} (1 + Hess t(N, N) / (lam N(t)^2))``.
    """
    pts = resolve_grid(spec, grid)
    _, gamma, _, frames = _frames(spec, pts)
    lattice = sphere_lattice(spec.dim_space, density)
    best = math.inf
    for i, p in enumerate(pts):
        ratios = _hess_t_ratios(gamma[i], _null_chart_vectors(frames[i], lattice))
        vals = math.exp(-lam * p[0]) * (1.0 + ratios / lam)
        best = min(best, float(np.min(vals)))
    return best


def conformal_factor(delta, lam):
    """The expression ``delta * exp(lam * t)``."""
    t = E.Var(0, E.variable_names(1)[0])
    return E.mul(E.Const(float(delta)), E.call("exp", E.mul(E.Const(float(lam)), t)))


def strictify(spec, grid=5, margin=1.0, delta=None, tol=SCAN_TOL, density=SCAN_DENSITY):
    """Conformal factor ``e^{2f}``, ``f = delta e^{lam t}``, turning (H1) into its strict form.

    ``lam = 2 C0 + margin`` and ``delta = C1 / 2`` unless ``delta`` is given.
    The grid should reach ``t = +-T`` (integer grids include the box
    corners) since ``C1`` is usually attained at the top time slice.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    base_report = scan_curvature_condition(spec, grid, strict=False, tol=tol, density=density)
    if not base_report.passed:
        raise HypothesisError(f"(H1) fails (sup {base_report.sup_value:.6g}); strictification needs it")
    C0 = estimate_C0(spec, grid, density)
    lam = 2.0 * C0 + margin
    C1 = estimate_C1(spec, grid, lam, density)
    if not C1 > 0:
        raise HypothesisError(f"internal inconsistency: C1 = {C1:.6g} <= 0 with lambda > 2 C0")
    notes = []
    if delta is None:
        delta = 0.5 * C1
    else:
        delta = float(delta)
        if not 0 < delta < C1:
            notes.append(f"delta {delta:g} outside (0, C1); strictness is not guaranteed")
    f = conformal_factor(delta, lam)
    new = M.conformal(spec, f)
    verified = scan_curvature_condition(new, grid, strict=True, tol=tol, density=density)
    if not verified.passed:
        notes.append("conformal metric fails the strict scan")
    return StrictificationResult(C0, lam, C1, delta, f, new, verified, base_report, notes)


def estimate_kappa(spec, grid=5, tol=SCAN_TOL, density=SCAN_DENSITY, refine_points=REFINE_POINTS):
    """Sup of ``R(N, v, N, v) / (|N|^2 |v|^2)`` with chart-Euclidean norms.

    ``v`` runs over the same representatives as the curvature scan.
    """
    sup, wit, _, _ = _scan(spec, grid, density, refine_points, euclid=True)
    if not sup < -tol:
        raise KappaError(f"normalized curvature reaches {sup:.6g}: the strict condition fails",
                         wit, sup)
    return sup


def perturbation_scan(spec, h, epsilons, grid=5, tol=SCAN_TOL, density=SCAN_DENSITY):
    """Strict scans of ``g + eps h`` for each ``eps``.

    A metric that loses its Lorentzian signature at some grid point gets no
    report and an error entry; the remaining epsilons are still scanned.
    """
    pts = resolve_grid(spec, grid)
    warnings = []
    try:
        kappa = estimate_kappa(spec, pts, tol, density)
    except KappaError as exc:
        kappa = None
        warnings.append(f"base metric: {exc}")
    verdicts, errors = [], []
    for eps in epsilons:
        pert = M.perturbation(spec, h, eps)
        g = M.metric_arrays(pert, pts, order=1)[0]
        bad = [i for i, gi in enumerate(g) if not M.signature_of(gi).passed]
        if bad:
            verdicts.append(None)
            errors.append(f"signature lost at {pts[bad[0]].tolist()}")
            continue
        try:
            verdicts.append(scan_curvature_condition(pert, pts, True, tol, density))
            errors.append(None)
        except HypothesisError as exc:
            verdicts.append(None)
            errors.append(str(exc))
    passing = [eps for eps, rep in zip(epsilons, verdicts) if rep is not None and rep.passed]
    largest = max(passing, key=abs) if passing else None
    for sign in (1.0, -1.0):
        seq = sorted((e for e in epsilons if e * sign > 0), key=abs)
        failed = None
        for e in seq:
            rep = verdicts[list(epsilons).index(e)]
            ok = rep is not None and rep.passed
            if failed is None and not ok:
                failed = e
            elif failed is not None and ok:
                warnings.append(f"eps={e:g} passes after a failure at eps={failed:g}; grid too coarse?")
    return PerturbationScan(kappa, h, list(epsilons), verdicts, errors, largest, warnings)
