"""Smoothing family ``H_eps = E o Q_eps`` of an infinitely wrapping Hamiltonian.

``g0 = phi'`` blows up at the boundary.  ``g_eps`` truncates it on ``[0, eps]``
to a decreasing profile with ``g_eps(0) = 1/eps`` and the same integral, so that
``phi_eps = phi`` (and ``H_eps = H``) beyond distance ``eps`` from the boundary.
The truncation is ``g0(eps) + (1/eps - g0(eps)) (1 - x/eps)**beta`` with the
exponent fixed by the mass constraint; its integral is available in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TwistFails
from .geometry import CollarProfile, phi_prime, solve_phi
from .hamflow import CollarChart, HamiltonianModel, check_quantitative_twist, check_weakened_twist


class TruncatedProfile:
    """``g_eps`` and ``phi_eps`` on the collar coordinate ``x = 1 - r`` in ``[0, 1]``."""

    def __init__(self, profile: CollarProfile, eps: float):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        self.profile = profile
        self.eps = float(eps)
        self.g_at_eps = float(phi_prime(profile, eps))
        self.phi_at_eps = float(solve_phi(profile, eps))
        top = 1.0 / eps
        mu = (self.phi_at_eps / eps - self.g_at_eps) / (top - self.g_at_eps)
        if not 0 < mu < 1:
            raise ValueError(f"no mass-preserving truncation at eps = {eps} (mu = {mu:.3g})")
        self.beta = 1.0 / mu - 1.0
        self.amp = top - self.g_at_eps

    def g(self, x):
        x = np.asarray(x, float)
        inner = x < self.eps
        xi = np.where(inner, x, 0.0)
        trunc = self.g_at_eps + self.amp * (1.0 - xi / self.eps) ** self.beta
        xo = np.where(inner, self.eps, np.clip(x, self.eps, 1.0))
        return np.where(inner, trunc, phi_prime(self.profile, xo))

    def phi(self, x):
        x = np.asarray(x, float)
        inner = x < self.eps
        xi = np.where(inner, x, 0.0)
        b1 = self.beta + 1.0
        trunc = self.g_at_eps * xi + self.amp * self.eps / b1 * (1.0 - (1.0 - xi / self.eps) ** b1)
        xo = np.where(inner, self.eps, np.clip(x, self.eps, 1.0))
        return np.where(inner, trunc, solve_phi(self.profile, xo))


def _signed(u, fn):
    """Apply a collar reparametrisation ``F`` near ``|u| = 1`` symmetrically in ``u``."""
    u = np.asarray(u, float)
    return np.sign(u) * fn(np.abs(u))


@dataclass
class SmoothingFamily:
    """Member ``eps`` of the family: ``H_eps(r, b) = E(F_eps(r), b)``."""

    eps: float
    truncation: TruncatedProfile
    E: HamiltonianModel
    H_eps: HamiltonianModel
    symmetric: bool = False
    info: dict = field(default_factory=dict)

    def g_eps(self, x):
        return self.truncation.g(x)

    def phi_eps(self, x):
        return self.truncation.phi(x)

    def F_eps(self, r):
        def F(a):
            return 1.0 - self.truncation.phi(1.0 - np.clip(a, 0.0, 1.0))
        return _signed(r, F) if self.symmetric else F(np.asarray(r, float))

    def Q_eps(self, x):
        y = np.array(x, float, copy=True)
        y[..., 0] = self.F_eps(y[..., 0])
        return y


def _F_limit(profile: CollarProfile, r, symmetric: bool):
    def F(a):
        return 1.0 - solve_phi(profile, 1.0 - np.clip(a, 0.0, 1.0))
    return _signed(r, F) if symmetric else F(np.asarray(r, float))


def nondegenerate_hamiltonian(E: HamiltonianModel, profile: CollarProfile, symmetric: bool = False,
                              chart: CollarChart | None = None) -> HamiltonianModel:
    """``H = E o Q`` on the non-degenerate collar (infinitely wrapping at ``r = 1``)."""
    chart = chart or CollarChart(E.chart.k, name=E.chart.name + "-nondeg", r_range=(-1.0, 1.0))

    def func(t, x):
        y = np.array(x, float, copy=True)
        y[..., 0] = _F_limit(profile, y[..., 0], symmetric)
        return E(t, y)

    return HamiltonianModel(func, chart, name=E.name + "oQ", reeb_periods=E.reeb_periods,
                            autonomous=E.autonomous)


def build_family(E: HamiltonianModel, profile: CollarProfile, eps: float, symmetric: bool = False,
                 chart: CollarChart | None = None, check_twist: bool = True) -> SmoothingFamily:
    """Construct ``H_eps = E o Q_eps``.

    ``E`` is written in degenerate coordinates with the boundary at ``r = 1``
    (and, with ``symmetric``, a second boundary at ``r = -1`` mirrored in ``r``).
    """
    if check_twist:
        rep = check_weakened_twist(E, E.chart.boundary_grid())
        if not rep["passes"]:
            raise TwistFails(f"min d_r E on the boundary = {rep['min_h']:.6g}")
    trunc = TruncatedProfile(profile, eps)
    chart = chart or CollarChart(E.chart.k, name=E.chart.name + f"-eps{eps:g}",
                                 r_range=(-1.0, 1.0) if symmetric else (0.0, 1.0))
    fam = SmoothingFamily(eps, trunc, E, None, symmetric)  # type: ignore[arg-type]

    def func(t, x):
        return E(t, fam.Q_eps(x))

    def grad(t, x):
        # chain rule in r, the other coordinates pass through unchanged
        x = np.asarray(x, float)
        g = E.gradient(t, fam.Q_eps(x))
        a = np.clip(np.abs(x[..., 0]) if symmetric else x[..., 0], 0.0, 1.0)
        g[..., 0] = g[..., 0] * trunc.g(1.0 - a)
        return g

    fam.H_eps = HamiltonianModel(func, chart, grad=grad, name=f"{E.name}_eps{eps:g}",
                                 reeb_periods=E.reeb_periods, autonomous=E.autonomous)
    return fam


def slope_lower_bound(fam: SmoothingFamily, grid: dict | None = None) -> dict:
    """``min h_eps`` at the boundary against ``C / eps`` with ``C = min d_r E``."""
    grid = grid or fam.E.chart.boundary_grid()
    h = check_weakened_twist(fam.H_eps, grid)["min_h"]
    C = check_weakened_twist(fam.E, grid)["min_h"]
    bound = C / fam.eps
    return {"eps": fam.eps, "min_h": h, "C": C, "bound": bound,
            "passes": bool(h >= bound * (1 - 1e-9))}


def sup_difference(fam: SmoothingFamily, H: HamiltonianModel, points, t: float = 0.0) -> float:
    pts = np.asarray(points, float)
    return float(np.max(np.abs(fam.H_eps(t, pts) - H(t, pts))))


def verify_convergence(families, H: HamiltonianModel, grid_points, t: float = 0.0) -> dict:
    """Sup-differences ``|H_eps - H|`` on ``grid_points`` for a list ordered by decreasing ``eps``."""
    fams = sorted(families, key=lambda f: -f.eps)
    diffs = [sup_difference(f, H, grid_points, t) for f in fams]
    monotone = all(b <= a + 1e-15 for a, b in zip(diffs, diffs[1:]))
    return {"eps": [f.eps for f in fams], "sup_difference": diffs, "monotone": bool(monotone)}


def smoothing_table(E: HamiltonianModel, profile: CollarProfile, eps_list, symmetric: bool = False,
                    interior_points=None) -> list[dict]:
    """One row per ``eps``: sup-difference, boundary slope and quantitative-twist margin."""
    H = nondegenerate_hamiltonian(E, profile, symmetric)
    grid = E.chart.boundary_grid()
    rows = []
    for eps in eps_list:
        fam = build_family(E, profile, eps, symmetric)
        sl = slope_lower_bound(fam, grid)
        qt = check_quantitative_twist(fam.H_eps, grid)
        row = {"eps": eps, "min_h": sl["min_h"], "bound": sl["bound"], "slope_ok": sl["passes"],
               "margin": qt["margin"], "quantitative": qt["passes"]}
        if interior_points is not None:
            row["sup_difference"] = sup_difference(fam, H, interior_points)
        rows.append(row)
    return rows
