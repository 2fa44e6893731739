"""Adaptive Dormand--Prince 5(4) integrator working on batches of states.

A batch shares one step size, chosen from the worst local error estimate in the
batch.  This keeps Newton/finite-difference stencils (which integrate a handful
of nearby states) on an identical time grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, EscapedDomain

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

H_MIN = 1e-14


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    fevals: int = 0
    max_error: float = 0.0
    min_step: float = np.inf


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # (n_samples, *state_shape)
    stats: IntegratorStats = field(default_factory=IntegratorStats)
    status: str = "ok"


def dopri5(f, t0: float, y0, t1: float, tol: float = 1e-10, h0: float | None = None,
           h_min: float = H_MIN, max_steps: int = 2_000_000, record: bool = True,
           in_domain=None, stop_outside: bool = False, absolute=None) -> Solution:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1``.

    The local error per step satisfies ``|err_i| <= tol * (1 + |y_i|)`` for every
    component, or ``|err_i| <= tol`` where the boolean mask ``absolute`` is set
    (angles, whose magnitude carries no scale).  ``in_domain(y) -> bool array`` flags states that left the chart:
    with ``stop_outside`` the integration stops there (status ``"escaped"``),
    otherwise :class:`EscapedDomain` is raised.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    stats = IntegratorStats()
    ts, ys = [t], [y.copy()]
    if span == 0:
        return Solution(np.array(ts), np.array(ys), stats)
    k = [None] * 7
    k[0] = f(t, y)
    stats.fevals += 1
    h = h0 if h0 is not None else min(span, 0.01 * max(1.0, span) / (1.0 + np.max(np.abs(k[0]))))
    h = max(h, 10 * h_min)
    status = "ok"
    while direction * (t1 - t) > 0:
        if stats.steps >= max_steps:
            raise BlowUp("maximum number of steps exceeded")
        h = min(h, abs(t1 - t))
        hs = direction * h
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    acc += hs * a * k[j]
            k[i] = f(t + _C[i] * hs, acc)
        stats.fevals += 6
        y_new = acc  # stage 7 argument is the 5th-order solution (FSAL)
        err = np.zeros_like(y)
        for i in range(7):
            if _E[i] != 0.0:
                err += hs * _E[i] * k[i]
        mag = np.maximum(np.abs(y), np.abs(y_new))
        if absolute is not None:
            mag = np.where(absolute, 0.0, mag)
        scale = tol * (1.0 + mag)
        ratio = float(np.max(np.abs(err) / scale)) if err.size else 0.0
        if not np.isfinite(ratio):
            ratio = np.inf
        if ratio <= 1.0:
            t_new = t + hs if abs(t1 - (t + hs)) > 1e-15 * max(1.0, abs(t1)) else t1
            if in_domain is not None:
                ok = np.all(np.asarray(in_domain(y_new)))
                if not ok:
                    if stop_outside:
                        status = "escaped"
                        break
                    raise EscapedDomain(f"trajectory left the chart at t = {t_new:.6g}")
            t, y = t_new, y_new
            k[0] = k[6]
            stats.steps += 1
            stats.max_error = max(stats.max_error, ratio * tol)
            stats.min_step = min(stats.min_step, h)
            if record:
                ts.append(t)
                ys.append(y.copy())
            fac = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
            h *= fac
        else:
            stats.rejected += 1
            fac = 0.2 if not np.isfinite(ratio) else max(0.1, 0.9 * ratio ** -0.2)
            h *= fac
            if h < h_min:
                raise BlowUp(f"step size {h:.3e} below floor {h_min:.1e} at t = {t:.6g}")
    if not record:
        ts.append(t)
        ys.append(y.copy())
    return Solution(np.array(ts), np.array(ys), stats, status)


def flow_map(f, y0, t0: float, t1: float, tol: float = 1e-10, **kw) -> np.ndarray:
    """Final state only."""
    return dopri5(f, t0, y0, t1, tol=tol, record=False, **kw).y[-1]
