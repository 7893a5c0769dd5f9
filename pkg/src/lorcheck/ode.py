"""Adaptive Dormand-Prince 5(4) integrator for array-valued states."""

from __future__ import annotations

import math

import numpy as np

# Butcher tableau (Dormand & Prince 1980)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class IntegrationError(RuntimeError):
    """Step-size underflow; carries the last accepted state."""

    def __init__(self, message, t, y):
        super().__init__(f"{message} at t={t!r}")
        self.t = t
        self.y = y


class StopIntegration(Exception):
    """Raised by a right-hand side to end integration at the last accepted step."""


def integrate(rhs, t0, y0, t_end, tol=1e-10, max_step=math.inf, h0=None,
              sample_times=(), on_step=None, max_steps=1_000_000):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t_end``.

    Every accepted step is recorded. Steps are shortened to land exactly on
    ``sample_times``. ``on_step(t, y)`` may return True to stop early.
    The local error per step is kept below ``tol * (1 + |y|)``
    componentwise.

    Returns ``(ts, ys, stopped)`` where ``stopped`` tells whether the run
    ended before ``t_end`` (callback or :class:`StopIntegration`).
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    t_end = float(t_end)
    direction = 1.0 if t_end >= t else -1.0
    span = abs(t_end - t)
    ts, ys = [t], [y.copy()]
    if span == 0.0:
        return np.array(ts), np.array(ys), False
    marks = sorted(float(s) for s in sample_times if (s - t) * direction > 0 and (t_end - s) * direction >= 0)
    if direction < 0:
        marks = marks[::-1]
    try:
        k1 = rhs(t, y)
    except StopIntegration:
        return np.array(ts), np.array(ys), True
    if h0 is None:
        scale = 1.0 + np.max(np.abs(y))
        dnorm = np.max(np.abs(k1)) / scale
        h = 0.01 * span if dnorm == 0 else min(span, 0.01 * tol ** 0.2 / dnorm)
    else:
        h = float(h0)
    h = max(min(h, max_step, span), 1e-300)
    min_step = 64 * np.finfo(float).eps * max(abs(t), abs(t_end), span)
    stopped = False
    for _ in range(max_steps):
        remaining = (t_end - t) * direction
        if remaining <= 0:
            break
        target = marks[0] if marks else t_end
        to_target = (target - t) * direction
        step = min(h, max_step, to_target)
        hit = step >= to_target
        if hit:
            step = to_target
        try:
            y_new, k7, err = _dopri_step(rhs, t, y, k1, direction * step)
        except StopIntegration:
            stopped = True
            break
        scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
        ratio = float(np.max(np.abs(err) / scale))
        if not np.isfinite(ratio):
            ratio = 1e10
        if ratio <= 1.0:
            t = target if hit else t + direction * step
            if hit and marks:
                marks.pop(0)
            y, k1 = y_new, k7
            ts.append(t)
            ys.append(y.copy())
            if on_step is not None and on_step(t, y):
                stopped = True
                break
            fac = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
            if not hit or fac < 1.0:
                h = step * fac
            else:
                h = max(h, step * fac)
        else:
            h = step * max(0.2, 0.9 * ratio ** -0.25)
            if h < min_step:
                raise IntegrationError("step size underflow", t, y.copy())
    else:
        raise IntegrationError("too many steps", t, y.copy())
    return np.array(ts), np.array(ys), stopped


def _dopri_step(rhs, t, y, k1, h):
    ks = [k1]
    for i in range(1, 7):
        a = _A[i]
        acc = y.copy()
        for j, aij in enumerate(a):
            if aij:
                acc += (h * aij) * ks[j]
        ks.append(rhs(t + _C[i] * h, acc))
    y_new = y.copy()
    for j, b in enumerate(_B5):
        if b:
            y_new += (h * b) * ks[j]
    err = np.zeros_like(y)
    for j, e in enumerate(_E):
        if e:
            err += (h * e) * ks[j]
    return y_new, ks[6], err
