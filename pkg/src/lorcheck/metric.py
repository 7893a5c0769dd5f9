"""Lorentzian metrics on a coordinate cylinder ``[-T, T] x box``.

Every metric, catalog or user supplied, is stored as a symmetric grid of
expression trees in the coordinates ``(t, x1, ..., xn)``. Catalog families
are just generators of such grids, so they reproduce their closed forms
exactly and share one evaluation path.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .jet import Jet2

DOMAIN_SLACK = 1e-12
DEGENERATE_TOL = 1e-10


class DomainError(ValueError):
    """A point lies outside the cylinder ``[-T, T] x box``."""


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """A metric ``g_{jk}(t, x)`` given by a symmetric grid of expressions."""

    dim_space: int
    T: float
    box: tuple
    components: tuple
    family: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.dim_space
        d = n + 1
        if n < 1:
            raise MetricError("dim_space must be >= 1")
        if not self.T > 0:
            raise MetricError("time extent T must be positive")
        if len(self.box) != n:
            raise MetricError(f"box needs {n} spatial intervals, got {len(self.box)}")
        for lo, hi in self.box:
            if not lo < hi:
                raise MetricError(f"empty interval [{lo}, {hi}]")
        if len(self.components) != d or any(len(row) != d for row in self.components):
            raise MetricError(f"component grid must be {d}x{d}")
        for j in range(d):
            for k in range(j + 1, d):
                a, b = self.components[j][k], self.components[k][j]
                if a is not b and E.to_string(a) != E.to_string(b):
                    raise MetricError(f"component grid not symmetric at ({j},{k})")
        base = np.zeros((d, d))
        live = []
        for j in range(d):
            for k in range(j, d):
                node = self.components[j][k]
                if isinstance(node, E.Const):
                    base[j, k] = base[k, j] = node.value
                else:
                    live.append((j, k, node))
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_live", tuple(live))
        lo = np.array([-self.T] + [b[0] for b in self.box], dtype=float)
        hi = np.array([self.T] + [b[1] for b in self.box], dtype=float)
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @property
    def dim(self):
        return self.dim_space + 1

    @property
    def lower(self):
        return self._lo.copy()

    @property
    def upper(self):
        return self._hi.copy()

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x >= self._lo - DOMAIN_SLACK) & (x <= self._hi + DOMAIN_SLACK), axis=-1)

    def check_point(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise DomainError(f"point has {p.shape[-1]} coordinates, metric needs {self.dim}")
        if not np.all(self.in_domain(p)):
            raise DomainError(f"point {p.tolist()} outside domain "
                              f"[{self._lo.tolist()}, {self._hi.tolist()}]")
        return p

    def component_strings(self):
        return [[E.to_string(node) for node in row] for row in self.components]

    def to_config(self):
        family = self.family or {"expressions": self.component_strings()}
        return {
            "dim_space": self.dim_space,
            "T": self.T,
            "box": [list(b) for b in self.box],
            "family": copy.deepcopy(family),
        }

    def with_components(self, components, family):
        return MetricSpec(self.dim_space, self.T, self.box, components, family)


# ---------------------------------------------------------------------------
# evaluation


def metric_arrays(spec, x, order=2, check=True):
    """Batched metric jets at points ``x`` of shape ``B + (d,)``.

    Returns ``g`` (``B+(d,d)``), ``dg`` with ``dg[..., i, j, k] = d_i g_jk``
    and, for ``order=2``, ``d2g`` with ``d2g[..., i, l, j, k] = d_i d_l g_jk``
    (``None`` otherwise).
    """
    x = np.asarray(x, dtype=float)
    if check:
        spec.check_point(x)
    d = spec.dim
    batch = x.shape[:-1]
    g = np.broadcast_to(spec._base, batch + (d, d)).copy()
    dg = np.zeros(batch + (d, d, d))
    d2g = np.zeros(batch + (d, d, d, d)) if order >= 2 else None
    if spec._live:
        env = Jet2.variables(x, order=order)
        cache = {}
        for j, k, node in spec._live:
            with np.errstate(all="ignore"):  # non-finite values are rejected below
                val = E.evaluate(node, env, cache)
            if isinstance(val, Jet2):
                g[..., j, k] = val.value
                dg[..., :, j, k] = val.grad
                if d2g is not None:
                    d2g[..., :, :, j, k] = val.hess
            else:
                g[..., j, k] = val
            if j != k:
                g[..., k, j] = g[..., j, k]
                dg[..., :, k, j] = dg[..., :, j, k]
                if d2g is not None:
                    d2g[..., :, :, k, j] = d2g[..., :, :, j, k]
    if not np.all(np.isfinite(g)) or not np.all(np.isfinite(dg)):
        raise MetricError("non-finite metric component")
    if d2g is not None and not np.all(np.isfinite(d2g)):
        raise MetricError("non-finite metric component")
    return g, dg, d2g


def eval_metric(spec, p):
    """Metric, first and second coordinate derivatives at one point ``p``."""
    p = spec.check_point(np.asarray(p, dtype=float))
    if p.ndim != 1:
        raise DomainError("eval_metric takes a single point")
    return metric_arrays(spec, p, order=2, check=False)


@dataclass(frozen=True)
class SignatureVerdict:
    negative: int
    zero: int
    positive: int
    eigenvalues: tuple

    @property
    def degenerate(self):
        return self.zero > 0

    @property
    def passed(self):
        return self.negative == 1 and self.zero == 0

    @property
    def verdict(self):
        if self.degenerate:
            return "degenerate"
        return "pass" if self.passed else "fail"


def signature_check(spec, p, tol=DEGENERATE_TOL):
    g, _, _ = metric_arrays(spec, spec.check_point(p), order=1, check=False)
    return signature_of(g, tol)


def signature_of(g, tol=DEGENERATE_TOL):
    w = np.linalg.eigvalsh(0.5 * (g + g.T))
    return SignatureVerdict(
        negative=int(np.sum(w < -tol)),
        zero=int(np.sum(np.abs(w) <= tol)),
        positive=int(np.sum(w > tol)),
        eigenvalues=tuple(float(v) for v in w),
    )


# ---------------------------------------------------------------------------
# construction


def _default_box(dim_space, spatial="euclidean"):
    if spatial == "spherical":
        # polar angles stay away from the coordinate singularities
        polar = [(0.3, math.pi - 0.3)] * max(dim_space - 1, 1)
        return tuple(polar + [(-1.0, 1.0)] * (dim_space - len(polar)))
    return tuple([(-1.0, 1.0)] * dim_space)


def _coords(dim_space):
    names = E.variable_names(dim_space)
    return [E.Var(i, name) for i, name in enumerate(names)]


def _diag(entries):
    d = len(entries)
    zero = E.Const(0.0)
    return tuple(tuple(entries[j] if j == k else zero for k in range(d)) for j in range(d))


def _spatial_factors(spatial, xs):
    """Diagonal of g0 for the given spatial factor (curvature 0, -1, +1)."""
    n = len(xs)
    one = E.Const(1.0)
    if spatial == "euclidean":
        return [one] * n
    if spatial == "hyperbolic":
        # dx1^2 + e^{2 x1} (dx2^2 + ... + dxn^2)
        w = E.call("exp", E.mul(E.Const(2.0), xs[0]))
        return [one] + [w] * (n - 1)
    if spatial == "spherical":
        # dx1^2 + sin^2 x1 (dx2^2 + sin^2 x2 (dx3^2 + ...))
        out = [one]
        w = one
        for i in range(n - 1):
            w = E.mul(w, E.power(E.call("sin", xs[i]), E.Const(2.0)))
            out.append(w)
        return out
    raise MetricError(f"unknown spatial factor {spatial!r}")


def minkowski(dim_space, T=1.0, box=None):
    box = tuple(box) if box is not None else _default_box(dim_space)
    entries = [E.Const(-1.0)] + [E.Const(1.0)] * dim_space
    return MetricSpec(dim_space, float(T), _tuple_box(box), _diag(entries),
                      {"catalog": {"name": "minkowski"}})


def ultrastatic(dim_space, spatial, T=1.0, box=None):
    box = tuple(box) if box is not None else _default_box(dim_space, spatial)
    xs = _coords(dim_space)[1:]
    entries = [E.Const(-1.0)] + _spatial_factors(spatial, xs)
    return MetricSpec(dim_space, float(T), _tuple_box(box), _diag(entries),
                      {"catalog": {"name": f"ultrastatic-{spatial}"}})


def conformal(base, f):
    """The metric ``e^{2f} g`` for a scalar expression ``f``."""
    f = _as_expr(f, base.dim_space)
    factor = E.call("exp", E.mul(E.Const(2.0), f))
    comps = tuple(tuple(E.mul(factor, node) for node in row) for row in base.components)
    family = {"catalog": {"name": "conformal", "f": E.to_string(f),
                          "base": _catalog_of(base)}}
    return base.with_components(comps, family)


def scaled(base, factor):
    """The metric ``c g`` for a constant ``c > 0``."""
    c = float(factor)
    if not c > 0:
        raise MetricError("scale factor must be positive")
    comps = tuple(tuple(E.mul(E.Const(c), node) for node in row) for row in base.components)
    family = {"catalog": {"name": "scaled", "factor": c, "base": _catalog_of(base)}}
    return base.with_components(comps, family)


def perturbation(base, h, eps):
    """The metric ``g + eps h`` for a symmetric grid ``h`` of expressions."""
    d = base.dim
    h_nodes = _expr_grid(h, base.dim_space)
    if len(h_nodes) != d:
        raise MetricError(f"perturbation grid must be {d}x{d}")
    comps = tuple(
        tuple(E.add(base.components[j][k], E.mul(E.Const(float(eps)), h_nodes[j][k]))
              for k in range(d))
        for j in range(d)
    )
    family = {"catalog": {"name": "perturbation", "eps": float(eps),
                          "h": [[E.to_string(n) for n in row] for row in h_nodes],
                          "base": _catalog_of(base)}}
    return base.with_components(comps, family)


def from_expressions(dim_space, T, box, expressions):
    comps = _expr_grid(expressions, dim_space)
    return MetricSpec(dim_space, float(T), _tuple_box(box), comps,
                      {"expressions": [[E.to_string(n) for n in row] for row in comps]})


def catalog(name, dim_space, T=1.0, box=None, **params):
    """Build a catalog metric by name (see :data:`CATALOG_NAMES`)."""
    if name == "minkowski":
        return minkowski(dim_space, T, box)
    if name.startswith("ultrastatic-"):
        return ultrastatic(dim_space, name.split("-", 1)[1], T, box)
    if name == "expressions":
        if box is None:
            box = _default_box(dim_space)
        return from_expressions(dim_space, T, box, params["expressions"])
    if name in ("conformal", "scaled", "perturbation"):
        base_params = dict(params.get("base", {"name": "minkowski"}))
        base = catalog(base_params.pop("name"), dim_space, T, box, **base_params)
        if name == "conformal":
            return conformal(base, params["f"])
        if name == "scaled":
            return scaled(base, params["factor"])
        return perturbation(base, params["h"], params.get("eps", 1.0))
    raise MetricError(f"unknown catalog metric {name!r}")


CATALOG_NAMES = (
    "minkowski",
    "ultrastatic-euclidean",
    "ultrastatic-hyperbolic",
    "ultrastatic-spherical",
    "conformal",
    "scaled",
    "perturbation",
)


def metric_from_config(cfg):
    """Build a :class:`MetricSpec` from its JSON-style dict.

    ``{"dim_space": n, "T": ..., "box": [[lo, hi], ...],
    "family": {"catalog": {"name": ..., ...}} | {"expressions": [[...], ...]}}``
    """
    try:
        n = int(cfg["dim_space"])
        T = float(cfg.get("T", 1.0))
        box = cfg.get("box")
        family = cfg["family"]
    except KeyError as exc:
        raise MetricError(f"metric config missing key {exc.args[0]!r}") from None
    if "catalog" in family:
        params = dict(family["catalog"])
        name = params.pop("name")
        return catalog(name, n, T, box, **params)
    if "expressions" in family:
        if box is None:
            box = _default_box(n)
        return from_expressions(n, T, box, family["expressions"])
    raise MetricError("family must contain 'catalog' or 'expressions'")


def load_metric(path):
    with open(path, encoding="utf-8") as fh:
        return metric_from_config(json.load(fh))


def _tuple_box(box):
    return tuple((float(lo), float(hi)) for lo, hi in box)


def _as_expr(f, dim_space):
    if isinstance(f, E.Node):
        return f
    if isinstance(f, (int, float)):
        return E.Const(f)
    return E.parse_metric_expression(f, dim_space)


def _expr_grid(grid, dim_space):
    return tuple(tuple(_as_expr(c, dim_space) for c in row) for row in grid)


def _catalog_of(spec):
    fam = spec.family
    if "catalog" in fam:
        return copy.deepcopy(fam["catalog"])
    return {"name": "expressions", "expressions": spec.component_strings()}


def random_points(spec, count, rng, margin=0.0):
    """Uniform points in the domain box shrunk by ``margin`` on each side."""
    lo = spec._lo + margin
    hi = spec._hi - margin
    return lo + (hi - lo) * rng.random((count, spec.dim))


def grid_points(spec, per_axis):
    """Tensor grid including the box corners, ``per_axis`` points per axis."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(spec._lo, spec._hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)

