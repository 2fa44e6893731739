"""Synthetic degenerate annulus twist model.

Phase space ``[-1, 1]_p x S^1_q`` with ``lambda = a(p) dq``,
``a(p) = (3p - p**3)/2``, so ``omega = 3/2 (1 - p**2) dp ^ dq`` degenerates at both
boundary circles.  Near ``p = 1`` one has ``a(1 - s) = 1 - 3/2 s**2 + 1/2 s**3``.
The non-degenerate coordinate is ``u = a(p)`` with ``omega = du ^ dq``.

The Hamiltonian is ``E = p**2 + kappa * beta(p) cos q`` where ``beta`` is a smooth
bump supported in ``0.2 <= |p| <= 0.8``.
"""
from __future__ import annotations

import numpy as np

from ..geometry import CollarProfile, DomainDescriptor, solve_phi
from ..hamflow import CollarChart, HamiltonianModel
from ..integrate import dopri5

TWO_PI = 2 * np.pi


def _annulus_inverse(s):
    # a(1 - phi) = 1 - s solved by the triple-angle identity, written without cancellation
    beta = (2.0 / 3.0) * np.arcsin(np.sqrt(0.5 * np.asarray(s, float)))
    return 2.0 * np.sin(0.5 * beta) ** 2 + np.sqrt(3.0) * np.sin(beta)


def annulus_profile() -> CollarProfile:
    return CollarProfile.polynomial({2: -1.5, 3: 0.5}, name="annulus", inverse=_annulus_inverse)


def a_of_p(p):
    p = np.asarray(p)
    return 0.5 * (3 * p - p**3)


def da_of_p(p):
    p = np.asarray(p)
    return 1.5 * (1 - p**2)


class Bump:
    """``beta(p) = exp(1 - 1/(1 - v**2))`` with ``v = (|p| - center)/half_width``."""

    def __init__(self, support=(0.2, 0.8)):
        lo, hi = support
        self.center = 0.5 * (lo + hi)
        self.half_width = 0.5 * (hi - lo)

    def _v(self, p):
        return (np.abs(p) - self.center) / self.half_width

    def __call__(self, p):
        v = self._v(np.asarray(p, float))
        inside = np.abs(v) < 1
        vv = np.where(inside, v, 0.0)
        return np.where(inside, np.exp(1 - 1 / (1 - vv**2)), 0.0)

    def derivative(self, p):
        p = np.asarray(p, float)
        v = self._v(p)
        inside = np.abs(v) < 1
        vv = np.where(inside, v, 0.0)
        val = np.exp(1 - 1 / (1 - vv**2)) * (-2 * vv / (1 - vv**2) ** 2)
        return np.where(inside, val * np.sign(p) / self.half_width, 0.0)


class AnnulusTwistModel:
    """Degenerate annulus with Hamiltonian ``p**2 + kappa beta(p) cos q``.

    The state used by :meth:`iterate` is ``(p, q)`` in degenerate coordinates
    with ``q`` reduced to ``[0, 2 pi)``.
    """

    dim = 2
    name = "annulus"

    def __init__(self, kappa: float = 0.1, bump_support=(0.2, 0.8), profile: CollarProfile | None = None,
                 tol: float = 1e-11):
        if kappa < 0:
            raise ValueError("kappa must be >= 0")
        self.kappa = float(kappa)
        self.bump_support = tuple(bump_support)
        self.bump = Bump(bump_support)
        self.profile = profile or annulus_profile()
        self.tol = tol
        self.chart = CollarChart(0, m=a_of_p, dm=da_of_p, r_range=(-1.0, 1.0), z_period=TWO_PI,
                                 name="annulus-degenerate")
        self.E = HamiltonianModel(self._E, self.chart, grad=self._gradE, name="annulus-E",
                                  reeb_periods=[TWO_PI], autonomous=True)
        self.nd_chart = CollarChart(0, r_range=(-1.0, 1.0), z_period=TWO_PI, name="annulus-u")
        self.H = HamiltonianModel(self._H, self.nd_chart, grad=self._gradH, name="annulus-H",
                                  reeb_periods=[TWO_PI], autonomous=True)
        self.domain = DomainDescriptor(2, "circle", self.profile)

    # Hamiltonians ---------------------------------------------------------------
    def _E(self, t, x):
        x = np.asarray(x, float)
        p, q = x[..., 0], x[..., 1]
        return p**2 + self.kappa * self.bump(p) * np.cos(q)

    def _gradE(self, t, x):
        x = np.asarray(x, float)
        p, q = x[..., 0], x[..., 1]
        g = np.empty(x.shape)
        g[..., 0] = 2 * p + self.kappa * self.bump.derivative(p) * np.cos(q)
        g[..., 1] = -self.kappa * self.bump(p) * np.sin(q)
        return g

    def p_of_u(self, u):
        """Inverse of ``a``: ``p = sign(u) (1 - phi(1 - |u|))``."""
        u = np.asarray(u, float)
        s = 1.0 - np.clip(np.abs(u), 0.0, 1.0)
        return np.sign(u) * (1.0 - solve_phi(self.profile, s))

    def _H(self, t, x):
        y = np.array(x, float, copy=True)
        y[..., 0] = self.p_of_u(y[..., 0])
        return self._E(t, y)

    def _gradH(self, t, x):
        y = np.array(x, float, copy=True)
        y[..., 0] = self.p_of_u(y[..., 0])
        g = self._gradE(t, y)
        with np.errstate(divide="ignore"):
            g[..., 0] = g[..., 0] / da_of_p(y[..., 0])
        return g

    # dynamics -------------------------------------------------------------------
    def rotation(self, p):
        """Angular speed ``dq/dt`` on the unperturbed circle ``p``: ``4p / (3(1 - p^2))``."""
        p = np.asarray(p, float)
        return 2 * p / da_of_p(p)

    def resonant_p(self, j: int, k: int) -> float:
        """Circle ``p > 0`` of the unperturbed model on which the time-1 map rotates by ``2 pi j/k``."""
        w = TWO_PI * j / k
        # 4p = 3w(1 - p^2)  ->  3w p^2 + 4p - 3w = 0
        return float((-4 + np.sqrt(16 + 36 * w**2)) / (6 * w))

    def vector_field(self, t, x):
        return self.E.vector_field(t, x)

    def flow(self, x, T: float, tol: float | None = None) -> np.ndarray:
        x = np.asarray(x, float)
        sol = dopri5(self.vector_field, 0.0, x, T, tol=tol or self.tol, record=False)
        return sol.y[-1]

    def iterate(self, x, k: int = 1, tol: float | None = None) -> np.ndarray:
        """``f^k`` with ``f`` the time-1 map (autonomous, so one integration over ``[0, k]``)."""
        return self.wrap(self.flow(x, float(k), tol))

    def wrap(self, x):
        y = np.array(x, float, copy=True)
        y[..., 1] = np.mod(y[..., 1], TWO_PI)
        return y

    def difference(self, y, x):
        """``y - x`` with the angle difference reduced to ``(-pi, pi]``."""
        d = np.asarray(y, float) - np.asarray(x, float)
        d[..., 1] = (d[..., 1] + np.pi) % TWO_PI - np.pi
        return d

    def family_key(self, x) -> tuple:
        """Connected level component of ``E``: ``(sign p, E)``."""
        x = np.asarray(x, float)
        return (int(np.sign(x[0])), float(self._E(0.0, x)))

    def in_interior(self, x, margin: float = 1e-3) -> np.ndarray:
        return np.abs(np.asarray(x)[..., 0]) < 1 - margin

    def seeds(self, k: int, n_per_circle: int = 16, spread: float = 0.02) -> np.ndarray:
        """Seeds on and near every resonant circle ``j/k`` of the unperturbed flow."""
        out = []
        q = np.linspace(0, TWO_PI, n_per_circle, endpoint=False)
        for j in range(1, k):
            p = self.resonant_p(j, k)
            if p >= 0.97:
                break
            for dp in (-spread, 0.0, spread):
                for sgn in (1, -1):
                    out.append(np.column_stack([np.full_like(q, sgn * (p + dp)), q]))
        return np.concatenate(out) if out else np.empty((0, 2))

    def orbit_action(self, x, k: int, tol: float | None = None) -> float:
        """``-int a(p) dq + int E dt`` along the orbit of ``x`` over ``[0, k]``."""
        x = np.asarray(x, float)

        def f(t, y):
            X = self.vector_field(t, y[:2])
            return np.array([X[0], X[1], float(a_of_p(y[0]) * X[1]), float(self._E(t, y[:2]))])

        y = dopri5(f, 0.0, np.concatenate([x, [0.0, 0.0]]), float(k), tol=tol or self.tol, record=False).y[-1]
        return float(-y[2] + y[3])

    def boundary_report(self, n: int = 64) -> dict:
        """Outward normal derivative of ``E`` on both boundary circles."""
        q = np.linspace(0, TWO_PI, n, endpoint=False)
        out = self._gradE(0.0, np.column_stack([np.ones(n), q]))[:, 0]
        inn = -self._gradE(0.0, np.column_stack([-np.ones(n), q]))[:, 0]
        h = np.concatenate([out, inn])
        return {"min_h": float(h.min()), "max_h": float(h.max()), "passes": bool(h.min() > 0)}


def annulus_model(kappa: float = 0.1, **kw):
    """``(DomainDescriptor, HamiltonianModel)`` of the degenerate annulus."""
    m = AnnulusTwistModel(kappa, **kw)
    return m.domain, m.E
