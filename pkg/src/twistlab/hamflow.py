"""Hamiltonians on collars ``(r, b)``, their vector fields, flows and twist checks.

Coordinates on a chart are ``x = (r, x_1..x_k, y_1..y_k, z)``.  The boundary
``B`` carries the contact form ``alpha = dz + 1/2 sum (x_i dy_i - y_i dx_i)``
with Reeb field ``d/dz`` (for ``k = 0`` this is ``alpha = dz`` on a circle), and
the Liouville form is ``lambda = m(r) alpha``.  ``m(r) = r`` is the
non-degenerate collar ``omega = d(r alpha)``; a degenerate profile has
``m'(1) = 0``.  Hamiltonian vector fields use ``i_X omega = -dH``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateAtBoundary, PoleAtBoundary
from .geometry import CollarProfile, phi_prime, solve_phi
from .integrate import IntegratorStats, dopri5, flow_map

FD_STEP = 1e-6


def _one(r):
    return np.ones_like(r)


class CollarChart:
    """Collar chart with Liouville form ``m(r) alpha`` over a standard contact chart.

    Parameters
    ----------
    k : int
        Number of contact-plane pairs; ``dim B = 2k + 1`` and ``dim W = 2k + 2``.
    m, dm : callable, optional
        Liouville coefficient and its derivative.  Defaults to ``m(r) = r``.
    r_range : tuple
        Coordinate range of ``r`` considered inside the chart.
    b_box : float
        Half-width of the box used to sample the ``x_i, y_i`` boundary coordinates.
    """

    def __init__(self, k: int = 0, m: Callable | None = None, dm: Callable | None = None,
                 r_range=(0.0, np.inf), boundary_r: float = 1.0, b_box: float = 1.0,
                 z_period: float = 2 * np.pi, name: str = "collar"):
        self.k = int(k)
        self.m = m if m is not None else (lambda r: r)
        self.dm = dm if dm is not None else _one
        self.r_range = r_range
        self.boundary_r = boundary_r
        self.b_box = b_box
        self.z_period = z_period
        self.name = name

    @property
    def dim(self) -> int:
        return 2 * self.k + 2

    # index helpers
    def _xi(self, i):
        return 1 + i

    def _yi(self, i):
        return 1 + self.k + i

    def in_chart(self, x) -> np.ndarray:
        r = np.asarray(x)[..., 0]
        return (r >= self.r_range[0]) & (r <= self.r_range[1])

    def alpha(self, x) -> np.ndarray:
        """``alpha`` as a covector on the full coordinate space (``dr`` slot is 0)."""
        x = np.asarray(x)
        out = np.zeros(x.shape[:-1] + (self.dim,), dtype=x.dtype)
        out[..., -1] = 1.0
        for i in range(self.k):
            xi, yi = x[..., self._xi(i)], x[..., self._yi(i)]
            out[..., self._xi(i)] = -0.5 * yi
            out[..., self._yi(i)] = 0.5 * xi
        return out

    def liouville_form(self, x) -> np.ndarray:
        return self.m(np.asarray(x)[..., 0])[..., None] * self.alpha(x)

    def omega_matrix(self, x) -> np.ndarray:
        """``Omega[i, j] = omega(d_i, d_j)`` for ``omega = m' dr^alpha + m dalpha``."""
        x = np.asarray(x)
        r = x[..., 0]
        a = self.alpha(x)
        dr = np.zeros_like(a)
        dr[..., 0] = 1.0
        mp = self.dm(r)[..., None, None]
        om = mp * (dr[..., :, None] * a[..., None, :] - a[..., :, None] * dr[..., None, :])
        m = self.m(r)
        for i in range(self.k):
            p, q = self._xi(i), self._yi(i)
            om[..., p, q] += m
            om[..., q, p] -= m
        return om

    def reeb(self, x) -> np.ndarray:
        x = np.asarray(x)
        out = np.zeros(x.shape[:-1] + (self.dim,), dtype=x.dtype)
        out[..., -1] = 1.0
        return out

    def xi_frame(self, x) -> np.ndarray:
        """Columns ``e_{x_1}, e_{y_1}, ..., e_{x_k}, e_{y_k}`` spanning ``xi``."""
        x = np.asarray(x)
        out = np.zeros(x.shape[:-1] + (self.dim, 2 * self.k), dtype=x.dtype)
        for i in range(self.k):
            out[..., self._xi(i), 2 * i] = 1.0
            out[..., -1, 2 * i] = 0.5 * x[..., self._yi(i)]
            out[..., self._yi(i), 2 * i + 1] = 1.0
            out[..., -1, 2 * i + 1] = -0.5 * x[..., self._xi(i)]
        return out

    def symplectic_frame(self, x) -> np.ndarray:
        """Frame ``xi (+) <Y, R>`` normalised so that ``M^T Omega M = J``.

        Column order is ``(e_x1, e_y1, ..., e_xk, e_yk, Y, R)`` with ``Y = r d/dr``.
        """
        x = np.asarray(x)
        r = x[..., 0]
        m = self.m(r)
        s_xi = 1.0 / np.sqrt(m)
        s_yr = 1.0 / np.sqrt(r * self.dm(r))
        out = np.zeros(x.shape[:-1] + (self.dim, self.dim), dtype=np.result_type(x, s_xi, s_yr))
        out[..., :, : 2 * self.k] = self.xi_frame(x) * s_xi[..., None, None]
        out[..., 0, -2] = r * s_yr
        out[..., -1, -1] = s_yr
        return out

    def frame_J(self) -> np.ndarray:
        return standard_J(self.k + 1)

    def hamiltonian_vector(self, x, g) -> np.ndarray:
        """Solve ``i_X omega = -g`` in closed form for a covector ``g``."""
        x = np.asarray(x)
        g = np.asarray(g)
        r = x[..., 0]
        m, mp = self.m(r), self.dm(r)
        gR = g[..., -1]
        X = np.zeros(np.broadcast_shapes(x.shape, g.shape), dtype=np.result_type(x, g))
        X[..., -1] += g[..., 0] / mp
        X[..., 0] += -gR / mp
        for i in range(self.k):
            p, q = self._xi(i), self._yi(i)
            gex = g[..., p] + 0.5 * x[..., q] * gR
            gey = g[..., q] - 0.5 * x[..., p] * gR
            # X^xi = -dH(e_y) e_x + dH(e_x) e_y
            a, b = -gey / m, gex / m
            X[..., p] += a
            X[..., -1] += a * 0.5 * x[..., q]
            X[..., q] += b
            X[..., -1] += -b * 0.5 * x[..., p]
        return X

    def sample_boundary(self, n: int, rng=None) -> np.ndarray:
        """``n`` boundary points ``b`` (uniform in ``z``, uniform box in ``x, y``)."""
        rng = np.random.default_rng(0) if rng is None else rng
        b = np.empty((n, 2 * self.k + 1))
        b[:, :-1] = rng.uniform(-self.b_box, self.b_box, (n, 2 * self.k))
        b[:, -1] = rng.uniform(0, self.z_period, n)
        return b

    def boundary_grid(self, n_b: int = 64, n_t: int = 8) -> dict:
        if self.k == 0:
            b = np.linspace(0, self.z_period, n_b, endpoint=False)[:, None]
        else:
            b = self.sample_boundary(n_b)
        return {"b": b, "t": np.linspace(0, 1, n_t, endpoint=False)}


def standard_J(n: int) -> np.ndarray:
    """Block-diagonal ``J`` with ``n`` copies of ``[[0, 1], [-1, 0]]``; ``omega(u, v) = u^T J v``."""
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[2 * i, 2 * i + 1] = 1.0
        J[2 * i + 1, 2 * i] = -1.0
    return J


def fd_gradient(func, t, x, h: float = FD_STEP) -> np.ndarray:
    """Central differences with the step scaled by coordinate magnitude."""
    x = np.asarray(x, float)
    g = np.empty_like(x)
    for i in range(x.shape[-1]):
        hi = h * np.maximum(1.0, np.abs(x[..., i]))
        xp, xm = x.copy(), x.copy()
        xp[..., i] += hi
        xm[..., i] -= hi
        g[..., i] = (func(t, xp) - func(t, xm)) / (2 * hi)
    return g


class HamiltonianModel:
    """Time-periodic Hamiltonian ``H(t, x)`` on a :class:`CollarChart`.

    ``func`` (and ``grad`` when given) must broadcast over leading axes of ``x``.
    Without ``grad``, derivatives come from central finite differences.
    """

    period = 1.0

    def __init__(self, func: Callable, chart: CollarChart, grad: Callable | None = None,
                 name: str = "H", reeb_periods=None, autonomous: bool = False):
        self.func = func
        self.chart = chart
        self._grad = grad
        self.name = name
        self.reeb_periods = reeb_periods
        self.autonomous = autonomous

    def __call__(self, t, x):
        return self.func(t, np.asarray(x, float))

    def gradient(self, t, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self._grad is not None:
            return np.asarray(self._grad(t, x), float)
        return fd_gradient(self.func, t, x)

    def grad_r(self, t, x):
        return self.gradient(t, x)[..., 0]

    def reeb_derivative(self, t, x):
        """``dH(R_alpha)``."""
        return self.gradient(t, x)[..., -1]

    def xi_part(self, t, x) -> np.ndarray:
        """Contact-Hamiltonian component ``X^xi`` with ``i_{X^xi} dalpha = -dH|xi``."""
        x = np.asarray(x, float)
        g = self.gradient(t, x)
        frame = self.chart.xi_frame(x)
        dH_e = np.einsum("...i,...ij->...j", g, frame)
        coef = np.empty_like(dH_e)
        coef[..., 0::2] = -dH_e[..., 1::2]
        coef[..., 1::2] = dH_e[..., 0::2]
        return np.einsum("...ij,...j->...i", frame, coef)

    def boundary_point(self, b) -> np.ndarray:
        b = np.atleast_1d(np.asarray(b, float))
        r = np.full(b.shape[:-1] + (1,), self.chart.boundary_r)
        return np.concatenate([r, b], axis=-1)

    def boundary_restriction(self, t, b):
        return self(t, self.boundary_point(b))

    def boundary_twist(self, t, b):
        """``h_t = d_r H`` on ``B`` (``= alpha(X_H)`` in the collar ``d(r alpha)``)."""
        return self.grad_r(t, self.boundary_point(b))

    def vector_field(self, t, x) -> np.ndarray:
        return self.chart.hamiltonian_vector(x, self.gradient(t, x))

    def value_and_gradient(self, t, x) -> tuple:
        """``(H, dH)``; subclasses override this when both share intermediate work."""
        return self(t, x), self.gradient(t, x)


@dataclass
class VectorFieldSplit:
    """``X = reeb_coeff R + xi_vec + liouville_coeff V`` with ``V = r d/dr``."""

    reeb_coeff: float
    xi_vec: np.ndarray
    liouville_coeff: float

    def reconstruct(self, chart: CollarChart, x) -> np.ndarray:
        x = np.asarray(x, float)
        X = self.reeb_coeff * chart.reeb(x) + self.xi_vec
        X[..., 0] += self.liouville_coeff * x[..., 0]
        return X


def split_vector_field(H: HamiltonianModel, t, p) -> VectorFieldSplit:
    """Reeb / contact / Liouville decomposition of ``X_H`` at ``p``.

    For ``m(r) = r`` this is ``X = (d_r H) R + (1/r)(X^xi - dH(R) V)``.
    """
    p = np.asarray(p, float)
    ch = H.chart
    r = p[0]
    m, mp = float(ch.m(r)), float(ch.dm(r))
    if r == 0 or m == 0 or mp == 0:
        raise DegenerateAtBoundary(f"collar form degenerates at r = {r}")
    g = H.gradient(t, p)
    return VectorFieldSplit(float(g[0] / mp), H.xi_part(t, p) / m, float(-g[-1] / (mp * r)))


def pullback_vector_field(E: HamiltonianModel, profile: CollarProfile, t, p,
                          chart: CollarChart | None = None) -> VectorFieldSplit:
    """Split of ``X_H`` for ``H = E o Q`` in the non-degenerate collar ``d(r alpha)``.

    ``p = (r, b)`` is a non-degenerate collar point and ``Q(r, b) = (F(r), b)`` with
    ``F(r) = 1 - phi(1 - r)``.  The Reeb coefficient ``(d_r E o Q) F'(r)`` has a
    pole at ``r = 1``; the contact and Liouville parts carry the factor ``1/r``.
    """
    p = np.asarray(p, float)
    chart = chart or CollarChart(E.chart.k)
    r = p[0]
    s = 1.0 - r
    if s <= 0:
        raise PoleAtBoundary("F'(r) has a pole at r = 1")
    if s > profile.s_max:
        Fr, dF = r, 1.0
    else:
        Fr = 1.0 - solve_phi(profile, s)
        dF = float(phi_prime(profile, s))
    q = p.copy()
    q[0] = Fr
    g = E.gradient(t, q)
    H_like = HamiltonianModel(lambda tt, xx: E(tt, xx), chart, grad=lambda tt, xx: g)
    xi = H_like.xi_part(t, q)
    return VectorFieldSplit(float(g[0] * dF), xi / r, float(-g[-1] / r))


def contraction_residual(H: HamiltonianModel, t, x, X=None) -> float:
    """``max |i_X omega + dH|`` using the coordinate matrix of ``omega``."""
    x = np.asarray(x, float)
    X = H.vector_field(t, x) if X is None else X
    Om = H.chart.omega_matrix(x)
    lhs = np.einsum("...i,...ij->...j", X, Om)
    return float(np.max(np.abs(lhs + H.gradient(t, x))))


@dataclass
class Trajectory:
    """Time-sampled flow segment; ``quadrature`` holds integrals computed alongside."""

    times: np.ndarray
    points: np.ndarray
    T: float
    integrator_stats: IntegratorStats = field(default_factory=IntegratorStats)
    quadrature: dict | None = None
    status: str = "ok"

    def to_csv(self, path, H: HamiltonianModel | None = None) -> None:
        dim = self.points.shape[-1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i}" for i in range(dim)] + ["H", "r"])
            for t, x in zip(self.times, self.points):
                Hv = float(H(t, x)) if H is not None else float("nan")
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(Hv), repr(float(x[0]))])


def integrate_flow(H: HamiltonianModel, p0, T: float, tol: float = 1e-10,
                   quadrature: HamiltonianModel | None = None, stop_outside: bool = False,
                   t0: float = 0.0) -> Trajectory:
    """Integrate ``x' = X_H(t, x)`` on ``[t0, t0 + T]`` with Dormand--Prince 5(4).

    With ``quadrature`` given, ``int lambda(x') dt`` and ``int quadrature(x) dt`` are
    integrated as two extra state components.
    """
    p0 = np.asarray(p0, float)
    dim = p0.size
    chart = H.chart
    if quadrature is None:
        def f(t, y):
            return H.vector_field(t, y)
        y0 = p0
    else:
        def f(t, y):
            x = y[:dim]
            X = H.vector_field(t, x)
            lam = float(np.dot(chart.liouville_form(x), X))
            return np.concatenate([X, [lam, float(quadrature(t, x))]])
        y0 = np.concatenate([p0, [0.0, 0.0]])

    absolute = np.zeros(y0.size, bool)
    if chart.z_period is not None:
        absolute[dim - 1] = True
    sol = dopri5(f, t0, y0, t0 + T, tol=tol, absolute=absolute,
                 in_domain=lambda y: chart.in_chart(y[:dim]), stop_outside=stop_outside)
    times = sol.t - t0
    quad = None
    pts = sol.y
    if quadrature is not None:
        quad = {"lambda": float(pts[-1, dim]), "hamiltonian": float(pts[-1, dim + 1]),
                "model": quadrature}
        pts = pts[:, :dim]
    return Trajectory(times, pts, float(times[-1]), sol.stats, quad, sol.status)


def integrate_flow_batch(H: HamiltonianModel, P0, T, tol: float = 1e-10,
                         quadrature: HamiltonianModel | None = None) -> dict:
    """Integrate many trajectories of an autonomous ``H`` with individual lengths ``T``.

    Each row is advanced on ``s in [0, 1]`` with the rescaled field ``T_i X_H``,
    so the whole batch shares one adaptive step sequence.  Returns final points,
    the per-row ``lambda`` and ``quadrature`` integrals and the componentwise
    minimum and maximum of every coordinate along the recorded steps.
    """
    if not H.autonomous:
        raise ValueError("batched integration needs an autonomous Hamiltonian")
    P0 = np.atleast_2d(np.asarray(P0, float))
    n, dim = P0.shape
    T = np.broadcast_to(np.asarray(T, float), (n,)).copy()
    chart = H.chart
    Q = quadrature

    def f(s, y):
        x = y[:, :dim]
        if Q is H:
            qv, g = H.value_and_gradient(0.0, x)
            X = chart.hamiltonian_vector(x, g)
        else:
            X = H.vector_field(0.0, x)
        out = [X]
        if Q is not None:
            if Q is not H:
                qv = Q(0.0, x)
            lam = np.einsum("ij,ij->i", chart.liouville_form(x), X)
            out += [lam[:, None], np.asarray(qv, float).reshape(n, 1)]
        return T[:, None] * np.concatenate(out, axis=1)

    y0 = np.concatenate([P0, np.zeros((n, 2))], axis=1) if Q is not None else P0
    sol = dopri5(f, 0.0, y0, 1.0, tol=tol)
    path = sol.y[:, :, :dim]
    res = {"points": path[-1], "T": T, "min": path.min(axis=0), "max": path.max(axis=0),
           "s": sol.t, "path": path, "stats": sol.stats}
    if Q is not None:
        res["lambda"] = sol.y[-1, :, dim]
        res["hamiltonian"] = sol.y[-1, :, dim + 1]
    return res


def energy_drift(H: HamiltonianModel, traj: Trajectory) -> float:
    vals = np.array([H(t, x) for t, x in zip(traj.times, traj.points)])
    return float(np.max(np.abs(vals - vals[0])))


def _grid_values(fn, grid: dict) -> np.ndarray:
    b = np.atleast_2d(np.asarray(grid["b"], float))
    return np.array([fn(float(t), b) for t in np.atleast_1d(grid["t"])])


def check_weakened_twist(H, boundary_grid: dict) -> dict:
    """Weakened twist: ``h_t = alpha(X_{H_t}) > 0`` on every grid point of ``B x S^1``.

    ``H`` is anything with a ``boundary_twist(t, b)`` method.
    """
    h = _grid_values(H.boundary_twist, boundary_grid)
    return {"min_h": float(h.min()), "max_h": float(h.max()), "passes": bool(h.min() > 0)}


def check_quantitative_twist(H, boundary_grid: dict) -> dict:
    """``H|_B > 0`` and ``min_B h_t > max_B H_t``."""
    h = _grid_values(H.boundary_twist, boundary_grid)
    HB = _grid_values(H.boundary_restriction, boundary_grid)
    margin = float(h.min() - HB.max())
    return {"min_h": float(h.min()), "max_H": float(HB.max()), "min_H": float(HB.min()),
            "margin": margin, "passes": bool(HB.min() > 0 and margin > 0)}


def time_map(H: HamiltonianModel, x0, T: float = 1.0, tol: float = 1e-10, t0: float = 0.0) -> np.ndarray:
    """Flow map on a batch of states (rows share one adaptive step sequence)."""
    def f(t, y):
        return H.vector_field(t, y)
    return dopri5(f, t0, np.asarray(x0, float), t0 + T, tol=tol, record=False).y[-1]


def vector_field_jacobian(H: HamiltonianModel, t, x, h: float = 1e-5) -> np.ndarray:
    """Fourth-order central-difference Jacobian of ``X_H`` at a single point."""
    x = np.asarray(x, float)
    dim = x.size
    E = np.eye(dim) * h
    pts = np.concatenate([x + 2 * E, x + E, x - E, x - 2 * E])
    V = H.vector_field(t, pts).reshape(4, dim, dim)
    return ((-V[0] + 8 * V[1] - 8 * V[2] + V[3]) / (12 * h)).T


def flow_jacobian(H: HamiltonianModel, x0, T: float = 1.0, tol: float = 1e-11, t0: float = 0.0,
                  h: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint and Jacobian of the time-``T`` map from the variational equation ``D' = DX D``."""
    x0 = np.asarray(x0, float)
    dim = x0.size

    def rhs(t, y):
        x = y[:dim]
        D = y[dim:].reshape(dim, dim)
        return np.concatenate([H.vector_field(t, x), (vector_field_jacobian(H, t, x, h) @ D).ravel()])

    y = flow_map(rhs, np.concatenate([x0, np.eye(dim).ravel()]), t0, t0 + T, tol=tol)
    return y[:dim], y[dim:].reshape(dim, dim)


def flow_symplecticity_residual(H: HamiltonianModel, x0, T: float = 1.0, tol: float = 1e-11,
                                h: float | None = None, n_frames: int = 4, rng=None,
                                method: str = "variational") -> float:
    """``max |omega_{x1}(Du, Dv) - omega_{x0}(u, v)|`` over random unit vectors ``u, v``.

    ``method="variational"`` integrates the linearised flow; ``"fd"`` uses a
    central-difference Jacobian of the time-``T`` map with step ``h``.
    """
    rng = np.random.default_rng(1) if rng is None else rng
    x0 = np.asarray(x0, float)
    dim = x0.size
    if method == "variational":
        x1, D = flow_jacobian(H, x0, T, tol, h=1e-5 if h is None else h)
    elif method == "fd":
        h = 1e-4 if h is None else h
        stencil = [x0]
        for i in range(dim):
            e = np.zeros(dim)
            e[i] = h
            stencil += [x0 + e, x0 - e]
        out = time_map(H, np.array(stencil), T, tol)
        x1 = out[0]
        D = np.empty((dim, dim))
        for i in range(dim):
            D[:, i] = (out[1 + 2 * i] - out[2 + 2 * i]) / (2 * h)
    else:
        raise ValueError(f"unknown method {method!r}")
    O0, O1 = H.chart.omega_matrix(x0), H.chart.omega_matrix(x1)
    worst = 0.0
    for _ in range(n_frames):
        u, v = rng.normal(size=dim), rng.normal(size=dim)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        worst = max(worst, abs((D @ u) @ O1 @ (D @ v) - u @ O0 @ v))
    return float(worst)
