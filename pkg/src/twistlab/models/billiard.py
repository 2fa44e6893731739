"""Billiards in strictly convex planar tables.

Phase space is the Birkhoff annulus of inward unit vectors at the boundary,
coordinatised by the incidence angle ``theta in [0, pi]`` (measured from the
positively oriented tangent) and the arc length ``phi in [0, L)``.  The billiard
map preserves ``sin(theta) dtheta ^ dphi = d(-cos theta) ^ dphi`` and extends to
the boundary circles ``theta in {0, pi}`` as the identity.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ..errors import NoConvergence, TangentRay

TWO_PI = 2 * np.pi


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


class BilliardTable:
    """Closed convex curve ``gamma(u)``, ``u in [0, 2 pi)``, counter-clockwise.

    Subclasses provide ``point``, ``velocity`` and ``curvature`` in the parameter
    ``u`` and the arc-length map ``arc(u)`` with its inverse ``param(s)``.
    """

    length: float

    def point(self, u):
        raise NotImplementedError

    def velocity(self, u):
        raise NotImplementedError

    def curvature(self, u):
        raise NotImplementedError

    def arc(self, u):
        raise NotImplementedError

    def tangent(self, u):
        v = self.velocity(u)
        return v / np.hypot(v[0], v[1])

    def param(self, s):
        """Inverse of ``arc`` by safeguarded Newton on ``arc(u) = s``."""
        s = float(np.mod(s, self.length))
        lo, hi = 0.0, TWO_PI
        u = TWO_PI * s / self.length
        for _ in range(100):
            f = self.arc(u) - s
            if f > 0:
                hi = u
            else:
                lo = u
            if abs(f) < 1e-15 * max(1.0, self.length):
                return u
            un = u - f / np.hypot(*self.velocity(u))
            u = un if lo < un < hi else 0.5 * (lo + hi)
            if hi - lo < 1e-16:
                return u
        raise NoConvergence("arc-length inversion failed")

    def check_convex(self, n: int = 720) -> float:
        k = np.array([self.curvature(u) for u in np.linspace(0, TWO_PI, n, endpoint=False)])
        if np.any(k <= 0):
            raise ValueError("table is not strictly convex")
        return float(k.min())


class CircleTable(BilliardTable):
    def __init__(self, radius: float = 1.0):
        self.R = float(radius)
        self.length = TWO_PI * self.R

    def point(self, u):
        return self.R * np.array([np.cos(u), np.sin(u)])

    def velocity(self, u):
        return self.R * np.array([-np.sin(u), np.cos(u)])

    def curvature(self, u):
        return 1.0 / self.R

    def arc(self, u):
        return self.R * float(np.mod(u, TWO_PI))

    def param(self, s):
        return float(np.mod(s, self.length)) / self.R


class EllipseTable(BilliardTable):
    """``(a cos u, b sin u)``; arc length by adaptive quadrature."""

    def __init__(self, a: float = 2.0, b: float = 1.0):
        self.a, self.b = float(a), float(b)
        self._quarter = self._integral(0.0, np.pi / 2)
        self.length = 4 * self._quarter

    def _speed(self, u):
        return np.hypot(self.a * np.sin(u), self.b * np.cos(u))

    def _integral(self, u0, u1):
        val, err = quad(self._speed, u0, u1, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val

    def point(self, u):
        return np.array([self.a * np.cos(u), self.b * np.sin(u)])

    def velocity(self, u):
        return np.array([-self.a * np.sin(u), self.b * np.cos(u)])

    def curvature(self, u):
        return self.a * self.b / self._speed(u) ** 3

    def arc(self, u):
        u = float(np.mod(u, TWO_PI))
        k = int(u // (np.pi / 2))
        return k * self._quarter + self._integral(k * np.pi / 2, u)

    @property
    def foci(self):
        c = np.sqrt(abs(self.a**2 - self.b**2))
        if self.a >= self.b:
            return np.array([c, 0.0]), np.array([-c, 0.0])
        return np.array([0.0, c]), np.array([0.0, -c])


class FourierTable(BilliardTable):
    """Support function ``h(u) = c0 + sum_k a_k cos(k u) + b_k sin(k u)``; ``u`` is the normal angle.

    ``gamma = h n + h' n'`` with ``n = (cos u, sin u)`` and radius of curvature
    ``h + h''``; the arc length is available in closed form.
    """

    def __init__(self, c0: float = 1.0, a=(), b=()):
        self.c0 = float(c0)
        K = max(len(a), len(b))
        self.a = np.zeros(K)
        self.b = np.zeros(K)
        self.a[:len(a)] = a
        self.b[:len(b)] = b
        self.k = np.arange(2, K + 2)  # coefficients start at the second harmonic
        self.length = TWO_PI * self.c0
        self.check_convex()

    def _h(self, u, d=0):
        k = self.k
        c, s = np.cos(k * u), np.sin(k * u)
        if d == 0:
            return self.c0 + np.sum(self.a * c + self.b * s)
        if d == 1:
            return np.sum(k * (-self.a * s + self.b * c))
        return np.sum(-k**2 * (self.a * c + self.b * s))

    def point(self, u):
        n = np.array([np.cos(u), np.sin(u)])
        dn = np.array([-np.sin(u), np.cos(u)])
        return self._h(u) * n + self._h(u, 1) * dn

    def velocity(self, u):
        return (self._h(u) + self._h(u, 2)) * np.array([-np.sin(u), np.cos(u)])

    def curvature(self, u):
        return 1.0 / (self._h(u) + self._h(u, 2))

    def arc(self, u):
        u = float(np.mod(u, TWO_PI))
        k = self.k
        w = (1 - k**2) / k
        return self.c0 * u + float(np.sum(w * (self.a * np.sin(k * u) + self.b * (1 - np.cos(k * u)))))


def make_table(cfg: dict) -> BilliardTable:
    kind = cfg.get("kind", "circle")
    if kind == "circle":
        return CircleTable(cfg.get("radius", 1.0))
    if kind == "ellipse":
        return EllipseTable(cfg.get("a", 2.0), cfg.get("b", 1.0))
    if kind == "fourier":
        return FourierTable(cfg.get("c0", 1.0), cfg.get("a", ()), cfg.get("b", ()))
    raise ValueError(f"unknown table kind {kind!r}")


def _direction(table: BilliardTable, u: float, theta: float) -> np.ndarray:
    T = table.tangent(u)
    N = np.array([-T[1], T[0]])  # inward for a counter-clockwise curve
    return np.cos(theta) * T + np.sin(theta) * N


def next_hit(table: BilliardTable, u0: float, d: np.ndarray, n_bracket: int = 16) -> float:
    """Parameter of the other intersection of the ray ``gamma(u0) + t d`` with the table."""
    P = table.point(u0)

    def g(du):
        return _cross(d, table.point(u0 + du) - P)

    grid = np.linspace(0, TWO_PI, n_bracket + 1)[1:-1]
    vals = np.array([g(x) for x in grid])
    sign_change = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if sign_change.size:
        i = sign_change[0]
        lo, hi = grid[i], grid[i + 1]
    elif vals[0] > 0:
        # nearly tangent ray: the root sits in the first cell, next to du = 0
        lo, hi = grid[0], grid[0]
        while g(lo) >= 0:
            lo *= 0.5
            if lo < 1e-14:
                return float(u0)
    else:
        lo, hi = TWO_PI, grid[-1]
        while g(hi) <= 0:
            hi = TWO_PI - 0.5 * (TWO_PI - hi)
            if TWO_PI - hi < 1e-14:
                return float(u0)
        lo = grid[-1]
    du = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(np.mod(u0 + du, TWO_PI))


def billiard_map(table: BilliardTable, theta: float, phi: float, strict: bool = False) -> tuple:
    """``(theta, phi) -> (theta', phi')``; tangent rays are fixed (or raise with ``strict``)."""
    theta = float(theta)
    if theta <= 0.0 or theta >= np.pi:
        if strict:
            raise TangentRay("tangent ray: the map extends as the identity")
        return theta, float(np.mod(phi, table.length))
    u0 = table.param(phi)
    d = _direction(table, u0, theta)
    u1 = next_hit(table, u0, d)
    c = float(np.clip(np.dot(d, table.tangent(u1)), -1.0, 1.0))
    return float(np.arccos(c)), float(table.arc(u1))


def billiard_orbit(table: BilliardTable, theta: float, phi: float, n: int) -> np.ndarray:
    out = [(theta, phi)]
    for _ in range(n):
        out.append(billiard_map(table, *out[-1]))
    return np.array(out)


def _wrap_diff(a, b, L):
    return (a - b + 0.5 * L) % L - 0.5 * L


def billiard_form_check(table: BilliardTable, grid=64, h: float = 1e-6) -> dict:
    """Max ``|det D - 1|`` of the map in coordinates ``(y, phi) = (-cos theta, phi)``.

    ``grid`` is either a resolution ``n`` (``n x n`` grid, midpoints in ``theta``)
    or an array of ``(theta, phi)`` points.
    """
    if np.isscalar(grid):
        n = int(grid)
        th = np.pi * (np.arange(n) + 0.5) / n
        ph = table.length * np.arange(n) / n
        pts = [(a, b) for a in th for b in ph]
    else:
        pts = [tuple(p) for p in np.asarray(grid, float)]
    L = table.length
    worst = 0.0
    for theta, phi in pts:
        y = -np.cos(theta)
        hy = min(h, 0.5 * (1 - abs(y)))

        def F(yy, pp):
            t1, p1 = billiard_map(table, np.arccos(-yy), pp)
            return np.array([-np.cos(t1), p1])

        fp, fm = F(y + hy, phi), F(y - hy, phi)
        gp, gm = F(y, phi + h), F(y, phi - h)
        col1 = np.array([(fp[0] - fm[0]) / (2 * hy), _wrap_diff(fp[1], fm[1], L) / (2 * hy)])
        col2 = np.array([(gp[0] - gm[0]) / (2 * h), _wrap_diff(gp[1], gm[1], L) / (2 * h)])
        det = col1[0] * col2[1] - col1[1] * col2[0]
        worst = max(worst, abs(det - 1.0))
    return {"max_det_error": float(worst), "n": len(pts)}
