"""Levi-Civita connection and curvature from metric jets.

Conventions
-----------
``gamma[k, i, j]`` is the Christoffel symbol Gamma^k_{ij}.

``riemann_mixed[a, b, c, d]`` is R^a_{bcd}, the ``a`` component of
``R(d_c, d_d) d_b`` with ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z
- nabla_[X,Y] Z``.

``riemann_lo[i, j, k, l] = g(R(d_i, d_j) d_l, d_k)`` so that
``R(N, v, N, v) = g(R(N, v)v, N)``; with this convention a round sphere has
``R(X, Y, X, Y) > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as E
from .jet import Jet2
from .metric import metric_arrays


class CurvatureError(ValueError):
    pass


@dataclass(frozen=True)
class CurvatureAtPoint:
    base: np.ndarray
    metric: np.ndarray
    gamma: np.ndarray
    riemann_lo: np.ndarray
    riemann_mixed: np.ndarray

    def __call__(self, x, y, z, w):
        """The 4-tensor ``R(x, y, z, w) = g(R(x, y)w, z)``."""
        return np.einsum("...ijkl,...i,...j,...k,...l->...", self.riemann_lo, x, y, z, w)


def _inverse(g):
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise CurvatureError("singular metric matrix") from exc
    if not np.all(np.isfinite(ginv)):
        raise CurvatureError("singular metric matrix")
    return ginv


def christoffel_lower(dg):
    """Gamma_{l i j} = (d_i g_jl + d_j g_il - d_l g_ij) / 2, indexed ``[l, i, j]``."""
    # dg[..., i, j, l] = d_i g_jl
    a = np.einsum("...ijl->...lij", dg)
    b = np.einsum("...jil->...lij", dg)
    return 0.5 * (a + b - dg)


def christoffel_from_arrays(g, dg):
    ginv = _inverse(g)
    return np.einsum("...kl,...lij->...kij", ginv, christoffel_lower(dg))


def christoffel(spec, p):
    """Christoffel symbols ``gamma[k, i, j]`` at ``p``."""
    g, dg, _ = metric_arrays(spec, p, order=1)
    return christoffel_from_arrays(g, dg)


def christoffel_jet(g, dg, d2g):
    """Christoffel symbols and their coordinate derivatives.

    Returns ``(gamma, dgamma)`` with ``dgamma[..., m, k, i, j] = d_m Gamma^k_ij``,
    obtained by pushing the metric 2-jet through the Christoffel formula
    (product rule on ``g^{-1}`` and the lowered symbols).
    """
    ginv = _inverse(g)
    low = christoffel_lower(dg)
    # d_m Gamma_{lij} from the second metric derivatives d2g[m, i, j, l]
    a = np.einsum("...mijl->...mlij", d2g)
    b = np.einsum("...mjil->...mlij", d2g)
    dlow = 0.5 * (a + b - d2g)
    # d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    gamma = np.einsum("...kl,...lij->...kij", ginv, low)
    dgamma = np.einsum("...mkl,...lij->...mkij", dginv, low) + np.einsum(
        "...kl,...mlij->...mkij", ginv, dlow
    )
    return gamma, dgamma


def riemann_from_arrays(g, dg, d2g):
    """``(gamma, riemann_lo, riemann_mixed)`` from metric arrays (batched)."""
    gamma, dgamma = christoffel_jet(g, dg, d2g)
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    t1 = np.einsum("...cadb->...abcd", dgamma)
    t2 = np.einsum("...dacb->...abcd", dgamma)
    t3 = np.einsum("...ace,...edb->...abcd", gamma, gamma)
    t4 = np.einsum("...ade,...ecb->...abcd", gamma, gamma)
    mixed = t1 - t2 + t3 - t4
    lo = np.einsum("...ka,...alij->...ijkl", g, mixed)
    return gamma, lo, mixed


def riemann(spec, p):
    """Curvature data at a single point ``p``."""
    p = spec.check_point(np.asarray(p, dtype=float))
    g, dg, d2g = metric_arrays(spec, p, order=2, check=False)
    gamma, lo, mixed = riemann_from_arrays(g, dg, d2g)
    return CurvatureAtPoint(p, g, gamma, lo, mixed)


def riemann_batch(spec, points):
    """Metric, Christoffels and lowered Riemann tensors at many points."""
    g, dg, d2g = metric_arrays(spec, points, order=2)
    gamma, lo, _ = riemann_from_arrays(g, dg, d2g)
    return g, gamma, lo


FRAME_TOL = 1e-8


def directional_curvature_matrix(curv, frame, radial, tol=FRAME_TOL):
    """Matrix ``R~[j, k] = eps_j R(e_k, radial, e_j, radial)`` in ``frame``.

    ``frame`` supplies ``vectors`` (rows, chart components) and ``weights``
    (``eps_j``); the vectors must be g-orthonormal and orthogonal to
    ``radial``.
    """
    vecs = np.asarray(frame.vectors, dtype=float)
    eps = np.asarray(frame.weights, dtype=float)
    g = curv.metric
    radial = np.asarray(radial, dtype=float)
    gram = vecs @ g @ vecs.T
    if np.max(np.abs(gram - np.diag(eps))) > tol:
        raise CurvatureError("frame is not orthonormal")
    if np.max(np.abs(vecs @ g @ radial)) > tol * max(1.0, np.linalg.norm(radial)):
        raise CurvatureError("frame does not span the orthogonal complement of the radial vector")
    return directional_matrix(curv.riemann_lo, vecs, eps, radial)


def directional_matrix(riemann_lo, vecs, eps, radial):
    """Unchecked core of :func:`directional_curvature_matrix` (batched)."""
    rr = np.einsum("...ijkl,...j,...l->...ik", riemann_lo, radial, radial)
    sym = np.einsum("...ai,...ik,...bk->...ab", vecs, rr, vecs)
    # sym[j, k] = R(e_j, r, e_k, r); eps_j * R(e_k, r, e_j, r)
    return eps[..., :, None] * np.swapaxes(sym, -1, -2)


def kulkarni_nomizu(h, k, tol=1e-12):
    """``(h o k)_{ijkl} = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il``."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    for name, a in (("h", h), ("k", k)):
        if np.max(np.abs(a - np.swapaxes(a, -1, -2)), initial=0.0) > tol * max(1.0, np.max(np.abs(a))):
            raise ValueError(f"{name} is not symmetric")
    return (
        np.einsum("...ik,...jl->...ijkl", h, k)
        + np.einsum("...jl,...ik->...ijkl", h, k)
        - np.einsum("...il,...jk->...ijkl", h, k)
        - np.einsum("...jk,...il->...ijkl", h, k)
    )


def conformal_curvature(spec, f, p):
    """Lowered curvature of ``e^{2f} g`` at ``p`` from the transformation rule.

    ``R~ = e^{2f} R - e^{2f} g o (Hess f - df (x) df + |df|^2 g / 2)`` with
    ``|df|^2 = g^{ij} f_i f_j``.
    """
    p = spec.check_point(np.asarray(p, dtype=float))
    if not isinstance(f, E.Node):
        f = E.parse_metric_expression(str(f), spec.dim_space)
    curv = riemann(spec, p)
    with np.errstate(all="ignore"):  # checked for finiteness below
        jet = E.evaluate(f, Jet2.variables(p, order=2))
    d = spec.dim
    if isinstance(jet, Jet2):
        f0, df, d2f = float(jet.value), np.asarray(jet.grad), np.asarray(jet.hess)
    else:
        f0, df, d2f = float(jet), np.zeros(d), np.zeros((d, d))
    if not (np.isfinite(f0) and np.all(np.isfinite(df)) and np.all(np.isfinite(d2f))):
        raise CurvatureError("conformal factor is not finite at the point")
    g = curv.metric
    hess = d2f - np.einsum("kij,k->ij", curv.gamma, df)
    norm2 = df @ np.linalg.solve(g, df)
    inner = hess - np.outer(df, df) + 0.5 * norm2 * g
    scale = np.exp(2.0 * f0)
    return scale * curv.riemann_lo - scale * kulkarni_nomizu(g, inner)
