"""Second-order forward-mode dual numbers.

A :class:`Jet2` carries a value together with its gradient and (optionally)
its Hessian with respect to ``d`` seed variables. All three parts may carry
leading batch dimensions, so one pass evaluates many points at once.
"""

from __future__ import annotations

import math

import numpy as np


class Jet2:
    """Truncated Taylor jet ``(value, grad, hess)``.

    ``value`` has shape ``B``, ``grad`` shape ``B + (d,)`` and ``hess`` shape
    ``B + (d, d)``. When ``hess`` is ``None`` the jet is first order only and
    all arithmetic skips the second-derivative bookkeeping.
    """

    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 100

    def __init__(self, value, grad, hess=None):
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, x, order=2):
        """Seed jets for every coordinate of ``x`` (shape ``B + (d,)``)."""
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        batch = x.shape[:-1]
        eye = np.broadcast_to(np.eye(d), batch + (d, d))
        out = []
        for i in range(d):
            hess = np.zeros(batch + (d, d)) if order >= 2 else None
            out.append(cls(x[..., i], eye[..., i, :], hess))
        return out

    @property
    def order(self):
        return 1 if self.hess is None else 2

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    # chain rule for u -> f(u) given f(u), f'(u), f''(u)
    def _apply(self, f0, f1, f2):
        f1 = np.asarray(f1)
        f2 = np.asarray(f2)
        grad = f1[..., None] * self.grad
        hess = None
        if self.hess is not None:
            g = self.grad
            hess = f1[..., None, None] * self.hess + f2[..., None, None] * (
                g[..., :, None] * g[..., None, :]
            )
        return Jet2(f0, grad, hess)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, None if self.hess is None else -self.hess)

    def __add__(self, other):
        if isinstance(other, Jet2):
            hess = None
            if self.hess is not None and other.hess is not None:
                hess = self.hess + other.hess
            return Jet2(self.value + other.value, self.grad + other.grad, hess)
        return Jet2(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            a, b = self.value, other.value
            ga, gb = self.grad, other.grad
            grad = _bcast(a, 1) * gb + _bcast(b, 1) * ga
            hess = None
            if self.hess is not None and other.hess is not None:
                outer = ga[..., :, None] * gb[..., None, :]
                hess = (
                    _bcast(a, 2) * other.hess
                    + _bcast(b, 2) * self.hess
                    + outer
                    + np.swapaxes(outer, -1, -2)
                )
            return Jet2(a * b, grad, hess)
        c = other
        return Jet2(
            self.value * c,
            _bcast(c, 1) * self.grad,
            None if self.hess is None else _bcast(c, 2) * self.hess,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.value
        inv = 1.0 / v
        return self._apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, other):
        if isinstance(other, Jet2):
            return exp(other * log(self))
        c = float(other)
        v = np.asarray(self.value, dtype=float)
        if c == 0.0:
            return Jet2(np.ones_like(v), np.zeros_like(self.grad),
                        None if self.hess is None else np.zeros_like(self.hess))
        if c.is_integer():
            k = int(c)
            if k > 0:
                f1 = k * v ** (k - 1)
                f2 = k * (k - 1) * v ** (k - 2) if k >= 2 else np.zeros_like(v)
                return self._apply(v**k, f1, f2)
            return (self ** (-k)).reciprocal()
        if np.any(v < 0):
            raise ValueError("non-integer power of a negative base")
        return self._apply(v**c, c * v ** (c - 1.0), c * (c - 1.0) * v ** (c - 2.0))


def _bcast(a, extra):
    a = np.asarray(a)
    return a.reshape(a.shape + (1,) * extra) if a.ndim else a


def exp(u):
    if isinstance(u, Jet2):
        e = np.exp(u.value)
        return u._apply(e, e, e)
    return math.exp(u)


def log(u):
    if isinstance(u, Jet2):
        inv = 1.0 / u.value
        return u._apply(np.log(u.value), inv, -inv * inv)
    return math.log(u)


def sqrt(u):
    if isinstance(u, Jet2):
        s = np.sqrt(u.value)
        return u._apply(s, 0.5 / s, -0.25 / (s * u.value))
    return math.sqrt(u)


def sin(u):
    if isinstance(u, Jet2):
        s, c = np.sin(u.value), np.cos(u.value)
        return u._apply(s, c, -s)
    return math.sin(u)


def cos(u):
    if isinstance(u, Jet2):
        s, c = np.sin(u.value), np.cos(u.value)
        return u._apply(c, -s, -c)
    return math.cos(u)


def tan(u):
    if isinstance(u, Jet2):
        t = np.tan(u.value)
        sec2 = 1.0 + t * t
        return u._apply(t, sec2, 2.0 * t * sec2)
    return math.tan(u)


def sinh(u):
    if isinstance(u, Jet2):
        s, c = np.sinh(u.value), np.cosh(u.value)
        return u._apply(s, c, s)
    return math.sinh(u)


def cosh(u):
    if isinstance(u, Jet2):
        s, c = np.sinh(u.value), np.cosh(u.value)
        return u._apply(c, s, c)
    return math.cosh(u)


def tanh(u):
    if isinstance(u, Jet2):
        t = np.tanh(u.value)
        sech2 = 1.0 - t * t
        return u._apply(t, sech2, -2.0 * t * sech2)
    return math.tanh(u)


FUNCTIONS = {
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
}
