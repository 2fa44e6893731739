"""Extension of a Hamiltonian on ``W`` to the completion ``W u [1, inf) x B``.

Near ``r = 1`` the Hamiltonian is written as
``H = H0 + (r - 1) H1 + (r - 1)**2 / 2 * R`` and each piece is interpolated, by a
cutoff ``rho(r)``, to the linear Hamiltonian ``C0 + (r - 1) C1`` at infinity.  The
remainder ``R`` is continued past ``r = 1`` by a three-term reflection that
matches ``R, R', R''`` at the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadConstants, NotC2, QuantitativeTwistFails
from .hamflow import CollarChart, HamiltonianModel, _grid_values

FILL_RADIUS = 1e-4
FD2_STEP = 1e-5
REFLECT_LAMBDAS = (1.0, 2.0, 3.0)


def _reflection_weights(lams=REFLECT_LAMBDAS) -> np.ndarray:
    lams = np.asarray(lams, float)
    V = np.array([(-lams) ** j for j in range(len(lams))])
    return np.linalg.solve(V, np.ones(len(lams)))


REFLECT_WEIGHTS = _reflection_weights()


def _with_r(x, r):
    y = np.array(x, float, copy=True)
    y[..., 0] = r
    return y


class TaylorSplit:
    """``H0(t, b)``, ``H1(t, b)`` and the remainder ``R(t, x)`` of ``H`` at ``r = 1``.

    Without an analytic gradient, derivatives at the boundary use one-sided
    (inward) stencils so ``H`` only has to be defined on ``r <= 1``.
    """

    def __init__(self, H: HamiltonianModel, h1_step: float = 1e-5):
        self.H = H
        self.h1_step = h1_step

    def _bpoint(self, b, r=1.0):
        return self.H.boundary_point(b) if r == 1.0 else _with_r(self.H.boundary_point(b), r)

    def H0(self, t, b):
        return self.H.boundary_restriction(t, b)

    def H1(self, t, b):
        if self.H._grad is not None:
            return self.H.grad_r(t, self._bpoint(b))
        h = self.h1_step
        f = [self.H(t, self._bpoint(b, 1.0 - j * h)) for j in range(4)]
        return (11 * f[0] - 18 * f[1] + 9 * f[2] - 2 * f[3]) / (6 * h)

    def d2r(self, t, x):
        """Inward second-order stencil for ``d_r^2 H``."""
        x = np.asarray(x, float)
        r = x[..., 0]
        h = FD2_STEP
        f = [self.H(t, _with_r(x, r - j * h)) for j in range(4)]
        return (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2

    def R(self, t, x):
        """Remainder; near ``r = 1`` replaced by ``d_r^2 H`` at ``1 + (r - 1)/3``."""
        x = np.asarray(x, float)
        r = x[..., 0]
        d = r - 1.0
        b = x[..., 1:]
        H0, H1 = self.H0(t, b), self.H1(t, b)
        near = np.abs(d) < FILL_RADIUS
        dd = np.where(near, 1.0, d)
        far = 2.0 * (self.H(t, x) - H0 - d * H1) / dd**2
        if not np.any(near):
            return far
        fill = self.d2r(t, _with_r(x, 1.0 + d / 3.0))
        return np.where(near, fill, far)

    def check_c2(self, t, b, ratio: float = 20.0) -> dict:
        """Flag remainders that blow up towards the boundary (``H`` not ``C^2``)."""
        b = np.atleast_2d(np.asarray(b, float))
        vals = []
        for s in (1e-1, 1e-2, 2e-3):
            vals.append(np.max(np.abs(self.R(t, self._bpoint(b, 1.0 - s)))))
        growth = vals[-1] / max(1.0, vals[0])
        if not np.all(np.isfinite(vals)) or growth > ratio:
            raise NotC2(f"remainder grows by {growth:.3g} towards r = 1")
        return {"R_samples": [float(v) for v in vals], "growth": float(growth)}


class Cutoff:
    """Smooth step: ``rho = 1`` on ``r <= 1 + delta0`` and ``0`` on ``r >= 1 + delta1``."""

    def __init__(self, delta1: float = 0.1, delta0: float | None = None):
        self.delta1 = float(delta1)
        self.delta0 = float(delta1 / 3 if delta0 is None else delta0)
        if not 0 < self.delta0 < self.delta1:
            raise BadConstants("need 0 < delta0 < delta1")

    def _parts(self, r):
        w = self.delta1 - self.delta0
        x = np.clip(np.asarray(r, float) - 1.0 - self.delta0, 0.0, w)
        inside = (x > 0) & (x < w)
        u = np.where(inside, x / w, 0.5)
        # rho = 1 / (1 + exp(1/(1-u) - 1/u)) with u = x / w
        z = 1.0 / (1.0 - u) - 1.0 / u
        return x, w, u, z, inside

    def __call__(self, r):
        x, w, u, z, inside = self._parts(r)
        val = 0.5 * (1.0 - np.tanh(0.5 * z))
        return np.where(inside, val, np.where(x <= 0, 1.0, 0.0))

    def derivative(self, r):
        x, w, u, z, inside = self._parts(r)
        sig = 0.5 * (1.0 - np.tanh(0.5 * z))
        dz = (1.0 / (1.0 - u) ** 2 + 1.0 / u**2) / w
        return np.where(inside, -sig * (1.0 - sig) * dz, 0.0)


@dataclass
class ExtensionParams:
    """Collar widths and constants; at infinity ``Hhat = a r - epsilon`` with ``a = C1``."""

    C0: float
    C1: float
    delta1: float = 0.1
    delta0: float | None = None
    quantitative: bool = False

    def __post_init__(self):
        if self.delta0 is None:
            self.delta0 = self.delta1 / 3
        self.rho = Cutoff(self.delta1, self.delta0)

    @property
    def epsilon(self) -> float:
        return self.C1 - self.C0

    def to_dict(self) -> dict:
        return {"C0": self.C0, "C1": self.C1, "delta0": self.delta0, "delta1": self.delta1,
                "epsilon": self.epsilon, "quantitative": self.quantitative}


def boundary_ranges(H: HamiltonianModel, grid: dict, split: TaylorSplit | None = None) -> dict:
    split = split or TaylorSplit(H)
    H0 = _grid_values(split.H0, grid)
    H1 = _grid_values(split.H1, grid)
    return {"H0": H0, "H1": H1, "min_H0": float(H0.min()), "max_H0": float(H0.max()),
            "min_H1": float(H1.min()), "max_H1": float(H1.max()),
            "min_gap": float((H1 - H0).min())}


def _spectrum_near(periods, value):
    out = []
    for T in periods or ():
        k = int(round(value / T))
        out += [j * T for j in range(max(1, k - 1), k + 2)]
    return out


def _avoid_spectrum(C1: float, periods, step: float = 1e-3, tol: float = 1e-9) -> float:
    k = 0
    while any(abs(C1 - T) < tol for T in _spectrum_near(periods, C1)):
        k += 1
        C1 += step * k
    return C1


def choose_constants(H: HamiltonianModel, mode: str = "quantitative", grid: dict | None = None,
                     delta1: float = 0.1, delta0: float | None = None, reeb_periods=None,
                     split: TaylorSplit | None = None) -> ExtensionParams:
    """Default constants ``eps = (min H1 - max H0)/2``, ``C0 = max(max H0, max H1 - eps) + 1``, ``C1 = C0 + eps``.

    In ``"plain"`` mode the quantitative twist is not required and
    ``C0 = max H0 + 1``, ``C1 = max(max H1, 0) + 1``.
    """
    grid = grid or H.chart.boundary_grid()
    rng = boundary_ranges(H, grid, split)
    periods = reeb_periods if reeb_periods is not None else H.reeb_periods
    if mode == "plain":
        C0 = rng["max_H0"] + 1.0
        C1 = _avoid_spectrum(max(rng["max_H1"], 0.0) + 1.0, periods)
        return ExtensionParams(C0, C1, delta1, delta0, quantitative=False)
    if rng["min_H0"] <= 0 or rng["min_H1"] <= rng["max_H0"]:
        raise QuantitativeTwistFails(
            f"min H1 = {rng['min_H1']:.6g}, max H0 = {rng['max_H0']:.6g}, min H0 = {rng['min_H0']:.6g}")
    eps = 0.5 * (rng["min_H1"] - rng["max_H0"])
    C0 = max(rng["max_H0"], rng["max_H1"] - eps) + 1.0
    C1 = _avoid_spectrum(C0 + eps, periods)
    return ExtensionParams(C0, C1, delta1, delta0, quantitative=True)


def validate_params(c: ExtensionParams, rng: dict) -> None:
    """Raise :class:`BadConstants` naming the first violated inequality."""
    tol = 1e-12
    if not c.C1 > 0:
        raise BadConstants("C1 > 0 violated")
    if c.C0 < rng["max_H0"] - tol:
        raise BadConstants(f"C0 >= max H0 violated ({c.C0} < {rng['max_H0']})")
    if c.C1 < rng["max_H1"] - tol:
        raise BadConstants(f"C1 >= max H1 violated ({c.C1} < {rng['max_H1']})")
    if c.quantitative:
        if not c.C0 > rng["max_H0"]:
            raise BadConstants("C0 > max H0 violated")
        if not c.C0 < c.C1 < c.C0 + rng["min_gap"]:
            raise BadConstants(f"C0 < C1 < C0 + min(H1 - H0) violated (gap {rng['min_gap']})")


def extend_remainder(R, params: ExtensionParams | None = None):
    """Continue ``R(t, x)`` (defined for ``r <= 1``) past the boundary by reflection."""
    def Rbar(t, x):
        x = np.asarray(x, float)
        d = np.maximum(x[..., 0] - 1.0, 0.0)
        out = 0.0
        for a, lam in zip(REFLECT_WEIGHTS, REFLECT_LAMBDAS):
            out = out + a * R(t, _with_r(x, 1.0 - lam * d))
        return out
    return Rbar


class ExtendedHamiltonian(HamiltonianModel):
    """``Hhat``: equal to ``H`` on ``r <= 1``, linear ``C0 + (r - 1) C1`` for ``r >= 1 + delta1``."""

    def __init__(self, H: HamiltonianModel, params: ExtensionParams,
                 split: TaylorSplit | None = None, r_min: float = 0.0):
        chart = CollarChart(H.chart.k, H.chart.m, H.chart.dm, r_range=(r_min, np.inf),
                            boundary_r=1.0, b_box=H.chart.b_box, z_period=H.chart.z_period,
                            name=H.chart.name + "-completed")
        super().__init__(self._value, chart, name=H.name + "-hat", reeb_periods=H.reeb_periods,
                         autonomous=H.autonomous)
        self.base = H
        self.params = params
        self.split = split or TaylorSplit(H)
        self.rho = params.rho
        self.Rbar = extend_remainder(self.split.R, params)

    def H0(self, t, b):
        return self.split.H0(t, b)

    def H1(self, t, b):
        return self.split.H1(t, b)

    def pieces(self, t, x):
        """``(Hhat0, Hhat1, rho * Rbar)`` at points with ``r >= 1``."""
        c = self.params
        x = np.asarray(x, float)
        b = x[..., 1:]
        r = x[..., 0]
        rho = self.rho(r)
        H0 = np.full(r.shape, c.C0)
        H1 = np.full(r.shape, c.C1)
        RR = np.zeros(r.shape)
        active = rho > 0
        if np.any(active):
            ra, ba = rho[active], b[active]
            H0[active] = ra * self.split.H0(t, ba) + (1 - ra) * c.C0
            H1[active] = ra * self.split.H1(t, ba) + (1 - ra) * c.C1
            RR[active] = ra * self.Rbar(t, x[active])
        return H0, H1, RR

    # Hhat = rho * Htilde + (1 - rho) * (C0 + (r - 1) C1), where
    # Htilde = H0 + d H1 + d^2/2 Rbar expands, after cancelling the d^2 in R, to
    # (1 - sum w) H0 + d (1 + sum w lam) H1 + sum w H(1 - lam d)  with  w = a / lam^2.
    # This form has no division by d, so value and gradient stay exact near r = 1.

    def _htilde(self, t, x, grad: bool = False, h: float = 1e-4):
        """``Htilde`` (and its gradient) at points with ``r > 1``.

        All base evaluations are stacked into one value call and one gradient
        call.  ``d_b H1`` uses fourth-order central differences of ``d_r H`` with
        step ``h`` along the boundary.
        """
        n = x.shape[0]
        r, b = x[:, 0], x[:, 1:]
        d = r - 1.0
        lam = np.asarray(REFLECT_LAMBDAS)
        w = REFLECT_WEIGHTS / lam**2
        c0, c1 = 1.0 - w.sum(), 1.0 + (w * lam).sum()
        x1 = self.base.boundary_point(b)
        refl = [_with_r(x, 1.0 - lj * d) for lj in lam]
        vals = self.base(t, np.concatenate(refl + [x1])).reshape(len(lam) + 1, n)
        analytic = self.base._grad is not None
        shifts = []
        if grad and analytic:
            for i in range(b.shape[1]):
                for j in (-2, -1, 1, 2):
                    y = x1.copy()
                    y[:, 1 + i] += j * h
                    shifts.append(y)
        if analytic:
            stack = (refl if grad else []) + [x1] + shifts
            gs = self.base.gradient(t, np.concatenate(stack)).reshape(len(stack), n, x.shape[1])
            if grad:
                g_refl, gs = gs[:len(lam)], gs[len(lam):]
            H1, g1 = gs[0, :, 0], gs[0]
        else:
            H1 = self.split.H1(t, b)
            if grad:
                g_refl = np.array([self.base.gradient(t, y) for y in refl])
                g1 = self.base.gradient(t, x1)
        H0 = vals[-1]
        val = c0 * H0 + d * c1 * H1 + w @ vals[:-1]
        if not grad:
            return val, None
        if analytic:
            dH1 = np.empty(b.shape)
            for i in range(b.shape[1]):
                f = gs[1 + 4 * i: 5 + 4 * i, :, 0]
                dH1[:, i] = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        else:
            dH1 = self._dH1_db(t, b, h)
        g = np.zeros(x.shape)
        g[:, 0] = c1 * H1 - (w * lam) @ g_refl[:, :, 0]
        g[:, 1:] = c0 * g1[:, 1:] + d[:, None] * c1 * dH1 + np.einsum("j,jnk->nk", w, g_refl[:, :, 1:])
        return val, g

    def _dH1_db(self, t, b, h: float = 1e-4):
        """Fourth-order central differences of ``H1`` along the boundary coordinates."""
        b = np.asarray(b, float)
        out = np.zeros(b.shape)
        for i in range(b.shape[-1]):
            e = np.zeros(b.shape[-1])
            e[i] = h
            f = [self.split.H1(t, b + j * e) for j in (-2, -1, 1, 2)]
            out[..., i] = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        return out

    def gradient(self, t, x) -> np.ndarray:
        """Base gradient inside ``W``; outside, the chain rule through the reflection."""
        return self.value_and_gradient(t, x)[1]

    def value_and_gradient(self, t, x) -> tuple:
        x = np.asarray(x, float)
        r = x[..., 0]
        c = self.params
        g = np.zeros(x.shape)
        out = np.empty(r.shape)
        inner = r <= 1.0
        if np.any(inner):
            out[inner], g[inner] = self.base.value_and_gradient(t, x[inner])
        outer = ~inner
        out[outer] = c.C0 + (r[outer] - 1.0) * c.C1
        g[outer, 0] = c.C1
        active = outer & (self.rho(r) > 0)
        if np.any(active):
            xa = x[active]
            ra = xa[..., 0]
            rho, drho = self.rho(ra), self.rho.derivative(ra)
            val, gt = self._htilde(t, xa.reshape(-1, x.shape[-1]), grad=True)
            val, gt = val.reshape(ra.shape), gt.reshape(xa.shape)
            lin = out[active]
            ga = rho[..., None] * gt
            ga[..., 0] += drho * (val - lin) + (1 - rho) * c.C1
            g[active] = ga
            out[active] = rho * val + (1 - rho) * lin
        return (out if out.ndim else float(out)), g

    def _value(self, t, x):
        x = np.asarray(x, float)
        r = x[..., 0]
        c = self.params
        out = np.empty(r.shape)
        inner = r <= 1.0
        if np.any(inner):
            out[inner] = self.base(t, x[inner])
        outer = ~inner
        if np.any(outer):
            out[outer] = c.C0 + (r[outer] - 1.0) * c.C1
        active = outer & (self.rho(r) > 0)
        if np.any(active):
            xa = x[active]
            rho = self.rho(xa[..., 0])
            val, _ = self._htilde(t, xa.reshape(-1, x.shape[-1]))
            val = val.reshape(rho.shape)
            out[active] = rho * val + (1 - rho) * out[active]
        return out if out.ndim else float(out)


def build_extension(H: HamiltonianModel, params: ExtensionParams | None = None,
                    grid: dict | None = None, check_c2: bool = True, r_min: float = 0.0,
                    c1_tol: float = 1e-6) -> ExtendedHamiltonian:
    """Build ``Hhat`` and verify continuity and ``C^1`` matching at ``r = 1``."""
    grid = grid or H.chart.boundary_grid()
    split = TaylorSplit(H)
    if check_c2:
        split.check_c2(0.0, grid["b"])
    if params is None:
        params = choose_constants(H, "quantitative", grid, split=split)
    validate_params(params, boundary_ranges(H, grid, split))
    ext = ExtendedHamiltonian(H, params, split, r_min=r_min)
    jump = c1_jump(ext, 0.0, grid["b"])
    ext.c1_report = jump
    if jump["derivative_jump"] > c1_tol or jump["value_jump"] > c1_tol:
        raise NotC2(f"extension fails C1 matching at r = 1: {jump}")
    return ext


def c1_jump(ext: ExtendedHamiltonian, t, b, h: float = 1e-5) -> dict:
    """Value and ``d_r`` mismatch across ``r = 1`` from one-sided third-order stencils."""
    b = np.atleast_2d(np.asarray(b, float))
    x1 = ext.base.boundary_point(b)

    def f(r):
        return ext(t, _with_r(x1, r))

    fl = [f(1.0 - j * h) for j in range(4)]
    fr = [f(1.0 + j * h) for j in range(4)]
    left = (11 * fl[0] - 18 * fl[1] + 9 * fl[2] - 2 * fl[3]) / (6 * h)
    right = (-11 * fr[0] + 18 * fr[1] - 9 * fr[2] + 2 * fr[3]) / (6 * h)
    tiny = 1e-9
    right_val = f(1.0 + tiny) - tiny * right
    return {"value_jump": float(np.max(np.abs(right_val - fl[0]))),
            "derivative_jump": float(np.max(np.abs(left - right)))}


def linear_residual(ext: ExtendedHamiltonian, t, b, rs) -> float:
    """``max |Hhat - C0 - (r - 1) C1|`` at radii beyond ``1 + delta1``."""
    b = np.atleast_2d(np.asarray(b, float))
    c = ext.params
    worst = 0.0
    for r in np.atleast_1d(rs):
        x = _with_r(ext.base.boundary_point(b), r)
        worst = max(worst, float(np.max(np.abs(ext(t, x) - (c.C0 + (r - 1.0) * c.C1)))))
    return worst
