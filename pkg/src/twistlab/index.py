"""Linearised Hamiltonian flows in symplectic frames and their Robbin--Salamon index.

The connection used throughout is the flat connection of a symplectic frame
``M(x)`` (``M^T Omega M = J``): a vector field is parallel when its frame
coefficients are constant.  In that frame the linearised flow solves
``Psi' = A(x(t)) Psi`` with

``A = J^{-1} M^T S M - J^{-1} M^T (dOmega[M .] X) - M^{-1} dM[X]``,

``S`` the Hessian of ``H``.  Taking only the boundary-direction block of ``S``
gives ``L1``; the remainder is ``L0``.  Both are in ``sp(2n)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .errors import FrameDegenerate, NonIsolatedCrossing
from .extension import ExtendedHamiltonian
from .hamflow import CollarChart, HamiltonianModel, standard_J, split_vector_field
from .integrate import dopri5

log = logging.getLogger(__name__)

KERNEL_TOL = 1e-9
HESS_STEP = 3e-5
CSTEP = 1e-20


# frames ------------------------------------------------------------------------

def coordinate_frame(chart: CollarChart, x) -> np.ndarray:
    """Symplectic frame ``(e_x1, e_y1, ..., d_r / m', R)``, regular wherever ``m, m' > 0``."""
    x = np.asarray(x)
    M = chart.symplectic_frame(x)
    M[..., :, -2:] = 0.0
    M[..., 0, -2] = 1.0 / chart.dm(x[..., 0])
    M[..., -1, -1] = 1.0
    return M


def _frame_fn(chart: CollarChart, frame: str | Callable) -> Callable:
    if callable(frame):
        return frame
    if frame == "collar":
        return chart.symplectic_frame
    if frame == "coordinate":
        return lambda x: coordinate_frame(chart, x)
    raise ValueError(f"unknown frame {frame!r}")


def _cstep(fn, x, v):
    """Directional derivative ``d fn(x)[v]`` by the complex step."""
    return np.imag(fn(np.asarray(x, float) + 1j * CSTEP * np.asarray(v, float))) / CSTEP


def symplectic_residual(L, J) -> float:
    """``max |L^T J + J L|``."""
    L = np.asarray(L)
    return float(np.max(np.abs(np.swapaxes(L, -1, -2) @ J + J @ L)))


def group_residual(P, J) -> float:
    """``max |P^T J P - J|``."""
    P = np.asarray(P)
    return float(np.max(np.abs(np.swapaxes(P, -1, -2) @ J @ P - J)))


def _d5(f, x, e):
    """Fourth-order central difference of ``f`` at ``x`` along the step vector ``e``."""
    return (f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / 12.0


def hessian(H: HamiltonianModel, t, x, h: float = HESS_STEP) -> np.ndarray:
    """Symmetrised fourth-order central differences of the gradient."""
    x = np.asarray(x, float)
    n = x.size
    S = np.empty((n, n))
    for j in range(n):
        hj = h * max(1.0, abs(x[j]))
        e = np.zeros(n)
        e[j] = hj
        S[:, j] = _d5(lambda y: H.gradient(t, y), x, e) / hj
    return 0.5 * (S + S.T)


def _boundary_hessian(fn, x, h: float = 1e-4) -> np.ndarray:
    """Hessian of ``fn`` in the boundary coordinates ``x[1:]`` (``r`` held fixed), padded to full size."""
    x = np.asarray(x, float)
    n = x.size
    S = np.zeros((n, n))
    f0 = fn(x)
    for i in range(1, n):
        ei = np.zeros(n)
        ei[i] = h
        S[i, i] = (fn(x + ei) - 2 * f0 + fn(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            S[i, j] = S[j, i] = (fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)) / (4 * h**2)
    return S


# generator of the linearised flow ---------------------------------------------

def covariant_generator(H: HamiltonianModel, t, x, frame="collar", S=None) -> dict:
    """``A`` with ``Psi' = A Psi`` in the frame, split into Hessian and connection parts."""
    x = np.asarray(x, float)
    chart = H.chart
    Mf = _frame_fn(chart, frame)
    M = np.asarray(Mf(x), float)
    if not np.all(np.isfinite(M)) or abs(np.linalg.det(M)) < 1e-12:
        raise FrameDegenerate(f"frame loses rank at {x}")
    J = chart.frame_J()
    Jinv = -J
    X = H.vector_field(t, x)
    S = hessian(H, t, x) if S is None else S
    C = np.column_stack([_cstep(chart.omega_matrix, x, M[:, j]) @ X for j in range(x.size)])
    conn = -Jinv @ M.T @ C - np.linalg.solve(M, _cstep(Mf, x, X))
    hess = Jinv @ M.T @ S @ M
    return {"A": hess + conn, "hessian_part": hess, "connection_part": conn, "M": M, "J": J,
            "X": X, "S": S}


def covariant_derivative_fd(H: HamiltonianModel, t, x, frame="collar", h: float = 3e-5) -> np.ndarray:
    """Independent estimate of ``A`` from central differences of ``X_H`` and of the frame."""
    x = np.asarray(x, float)
    n = x.size
    Mf = _frame_fn(H.chart, frame)
    M = np.asarray(Mf(x), float)
    DX = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        DX[:, j] = _d5(lambda y: H.vector_field(t, y), x, e) / h
    X = H.vector_field(t, x)
    dM = _d5(lambda y: np.asarray(Mf(y), float), x, h * X) / h
    return np.linalg.solve(M, DX @ M - dM)


# block decomposition -----------------------------------------------------------

@dataclass
class BlockDecomposition:
    """``A = L0 + L1`` at one point; ``L1 = (1/r) L1prime + ((r - 1)/r) L1doubleprime``."""

    L0: np.ndarray
    L1: np.ndarray
    L1prime: np.ndarray
    L1doubleprime: np.ndarray
    F: float
    G: float
    X_xi: np.ndarray
    r: float
    J: np.ndarray
    A_fd: np.ndarray | None = None

    def residuals(self) -> dict:
        out = {"L0": symplectic_residual(self.L0, self.J), "L1": symplectic_residual(self.L1, self.J)}
        r = self.r
        out["L1_identity"] = float(np.max(np.abs(self.L1 - self.L1prime / r - (r - 1) / r * self.L1doubleprime)))
        if self.A_fd is not None:
            err = float(np.max(np.abs(self.L0 + self.L1 - self.A_fd)))
            out["reconstruction"] = err
            out["reconstruction_rel"] = err / max(1.0, float(np.max(np.abs(self.A_fd))))
        return out


def _taylor_zero(H: HamiltonianModel, t):
    """``Hhat0(r, b)``: the zeroth Taylor piece at the radius of the evaluation point."""
    if isinstance(H, ExtendedHamiltonian):
        def f(x):
            if x[0] <= 1.0:
                return float(H.split.H0(t, x[1:]))
            return float(H.pieces(t, x[None, :])[0][0])
        return f
    return lambda x: float(H.boundary_restriction(t, x[1:]))


def block_decompose(H: HamiltonianModel, p, t: float = 0.0, frame="collar",
                    check_fd: bool = True) -> BlockDecomposition:
    """Split the frame derivative of ``X_H`` at ``p`` into ``L0 + L1``."""
    p = np.asarray(p, float)
    r = float(p[0])
    if r <= 0:
        raise FrameDegenerate("need r > 0")
    gen = covariant_generator(H, t, p, frame)
    M, J, S = gen["M"], gen["J"], gen["S"]
    Jinv = -J

    def lift(Q):
        return Jinv @ M.T @ Q @ M

    S_bb = S.copy()
    S_bb[0, :] = 0.0
    S_bb[:, 0] = 0.0
    L1 = lift(S_bb)
    L0 = gen["A"] - L1
    L1p = r * lift(_boundary_hessian(_taylor_zero(H, t), p))
    if abs(r - 1.0) > 1e-6:
        L1pp = (r * L1 - L1p) / (r - 1.0)
    else:
        # at r = 1 the second piece carries no weight; report d_r of the boundary Hessian
        h = 1e-4
        up = _boundary_hessian(lambda y: float(H(t, y)), p + [h] + [0.0] * (p.size - 1))
        dn = _boundary_hessian(lambda y: float(H(t, y)), p - [h] + [0.0] * (p.size - 1))
        L1pp = r * lift((up - dn) / (2 * h))
    split = split_vector_field(H, t, p)
    A_fd = covariant_derivative_fd(H, t, p, frame) if check_fd else None
    return BlockDecomposition(L0, L1, L1p, L1pp, split.reeb_coeff, split.liouville_coeff, split.xi_vec,
                              r, J, A_fd)


# paths -------------------------------------------------------------------------

@dataclass
class SymplecticPath:
    """Sampled path ``Psi(t)`` of symplectic matrices with ``Psi(times[0]) = I``.

    ``evaluate`` and ``derivative`` give ``Psi`` and ``Psi'`` at arbitrary times;
    without them a cubic spline through the samples is used.
    """

    times: np.ndarray
    matrices: np.ndarray
    frame: str = "standard"
    J: np.ndarray | None = None
    evaluate: Callable | None = None
    derivative: Callable | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.matrices = np.asarray(self.matrices, float)
        if self.J is None:
            self.J = standard_J(self.matrices.shape[-1] // 2)
        if self.evaluate is None:
            spline = CubicSpline(self.times, self.matrices, axis=0)
            self.evaluate = spline
            self.derivative = spline.derivative()
        elif self.derivative is None:
            ev = self.evaluate

            def deriv(t, h=1e-6):
                return (ev(t + h) - ev(t - h)) / (2 * h)
            self.derivative = deriv

    def symplectic_residual(self) -> float:
        return group_residual(self.matrices, self.J)

    @property
    def T(self) -> float:
        return float(self.times[-1] - self.times[0])


def rotation_path(k: float = 1.0, n: int = 1, steps: int = 201) -> SymplecticPath:
    """``exp(2 pi k t J0)`` on ``[0, 1]`` in each of ``n`` planes, ``J0`` the positive rotation generator."""
    def ev(t):
        c, s = np.cos(2 * np.pi * k * t), np.sin(2 * np.pi * k * t)
        return np.kron(np.eye(n), np.array([[c, -s], [s, c]]))

    def dev(t):
        c, s = np.cos(2 * np.pi * k * t), np.sin(2 * np.pi * k * t)
        return 2 * np.pi * k * np.kron(np.eye(n), np.array([[-s, -c], [c, -s]]))

    ts = np.linspace(0.0, 1.0, steps)
    return SymplecticPath(ts, np.array([ev(t) for t in ts]), "standard", evaluate=ev, derivative=dev)


def linearize_flow(H: HamiltonianModel, p, T: float, steps: int = 200, frame="collar",
                   tol: float = 1e-11, t0: float = 0.0) -> SymplecticPath:
    """Integrate ``x' = X_H``, ``Psi' = A(x) Psi`` and sample ``Psi`` at ``steps`` points."""
    p = np.asarray(p, float)
    n = p.size

    def rhs(t, y):
        x = y[:n]
        A = covariant_generator(H, t, x, frame)["A"]
        Psi = y[n:].reshape(n, n)
        return np.concatenate([H.vector_field(t, x), (A @ Psi).ravel()])

    times = t0 + np.linspace(0.0, T, steps)
    y = np.concatenate([p, np.eye(n).ravel()])
    states = [y]
    for a, b in zip(times[:-1], times[1:]):
        y = dopri5(rhs, a, y, b, tol=tol, record=False).y[-1]
        states.append(y)
    states = np.array(states)

    def ev(t):
        i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 1))
        if t == times[i]:
            return states[i, n:].reshape(n, n)
        return dopri5(rhs, times[i], states[i], t, tol=tol, record=False).y[-1, n:].reshape(n, n)

    def dev(t):
        i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 1))
        yt = states[i] if t == times[i] else dopri5(rhs, times[i], states[i], t, tol=tol, record=False).y[-1]
        return rhs(t, yt)[n:].reshape(n, n)

    return SymplecticPath(times - t0, states[:, n:].reshape(-1, n, n), str(frame),
                          H.chart.frame_J(), evaluate=lambda s: ev(s + t0), derivative=lambda s: dev(s + t0),
                          info={"points": states[:, :n]})


# Robbin--Salamon index ---------------------------------------------------------

def _smallest_singular(P):
    n = P.shape[-1]
    return np.linalg.svd(P - np.eye(n), compute_uv=False)[..., -1]


def _crossing_signature(path: SymplecticPath, t: float, kernel_tol: float, endpoint: bool) -> int:
    P = path.evaluate(t)
    n = P.shape[-1]
    _, sv, Vt = np.linalg.svd(P - np.eye(n))
    K = Vt[sv <= kernel_tol].T
    if K.shape[1] == 0:
        return 0
    D = path.derivative(t)
    Q = K.T @ path.J @ D @ K
    ev = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    tiny = 1e-8 * max(1.0, float(np.max(np.abs(D))))
    if np.any(np.abs(ev) <= tiny) and not endpoint:
        raise NonIsolatedCrossing(f"degenerate crossing form at t = {t:.12g}")
    return int(np.sum(ev > tiny) - np.sum(ev < -tiny))


def _sigma_slope(path: SymplecticPath, t: float) -> float:
    """Derivative ``u' Psi'(t) v`` of the smallest singular value of ``Psi(t) - I``."""
    P = path.evaluate(t)
    U, _, Vt = np.linalg.svd(P - np.eye(P.shape[-1]))
    return float(U[:, -1] @ path.derivative(t) @ Vt[-1])


def _refine_minimum(path: SymplecticPath, a: float, b: float) -> float:
    """Locate the minimum of ``sigma_min(Psi - I)`` on ``[a, b]``.

    At a crossing ``sigma_min`` has a kink where its slope changes sign, so the
    slope is bracketed with Brent's method; smooth minima fall back to a bounded
    scalar minimisation.
    """
    ga, gb = _sigma_slope(path, a), _sigma_slope(path, b)
    if ga < 0 < gb:
        return float(brentq(lambda s: _sigma_slope(path, s), a, b, xtol=1e-16, rtol=4 * np.finfo(float).eps,
                            maxiter=200))
    res = minimize_scalar(lambda s: _smallest_singular(path.evaluate(s)), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-14, "maxiter": 500})
    return float(res.x)


def crossings(path: SymplecticPath, kernel_tol: float = KERNEL_TOL) -> list[float]:
    """Interior crossing instants, refined from local minima of ``sigma_min(Psi - I)``."""
    ts = path.times
    sig = _smallest_singular(path.matrices)
    out = []
    for i in range(1, len(ts) - 1):
        if not (sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]):
            continue
        if sig[i] <= kernel_tol and (sig[i - 1] <= kernel_tol or sig[i + 1] <= kernel_tol):
            raise NonIsolatedCrossing(f"Psi - I stays singular near t = {ts[i]:.6g}")
        t = _refine_minimum(path, ts[i - 1], ts[i + 1])
        if _smallest_singular(path.evaluate(t)) <= kernel_tol:
            span = ts[-1] - ts[0]
            if min(t - ts[0], ts[-1] - t) > 1e-9 * max(1.0, span) and all(abs(t - u) > 1e-9 for u in out):
                out.append(t)
    return out


def rs_index(path: SymplecticPath, kernel_tol: float = KERNEL_TOL) -> float:
    """Half signature at the endpoints plus full signature at interior crossings."""
    if np.max(np.abs(path.matrices - np.eye(path.matrices.shape[-1]))) <= kernel_tol:
        return 0.0
    ts = path.times
    mu = 0.5 * _crossing_signature(path, float(ts[0]), kernel_tol, True)
    for t in crossings(path, kernel_tol):
        mu += _crossing_signature(path, t, kernel_tol, False)
    if _smallest_singular(path.evaluate(float(ts[-1]))) <= kernel_tol:
        mu += 0.5 * _crossing_signature(path, float(ts[-1]), kernel_tol, True)
    return float(mu)


# index growth -----------------------------------------------------------------

class ReebArcModel:
    """Linearised Reeb arcs ``T -> Psi|[0, T]`` from an explicit evaluator ``psi(t)``."""

    def __init__(self, psi: Callable, samples_per_unit: int = 40, name: str = "reeb"):
        self.psi = psi
        self.samples_per_unit = samples_per_unit
        self.name = name

    def index_path(self, T: float) -> SymplecticPath:
        steps = max(9, int(np.ceil(self.samples_per_unit * T)) + 1)
        ts = np.linspace(0.0, T, steps)
        return SymplecticPath(ts, np.array([self.psi(t) for t in ts]), "xi", evaluate=self.psi)


def katok_reeb_arcs(sys, w0, samples_per_unit: int = 40) -> ReebArcModel:
    from .models.katok import linearized_reeb_matrices

    return ReebArcModel(lambda t: linearized_reeb_matrices(sys, w0, [t])[0], samples_per_unit,
                        name="katok-reeb")


def verify_index_growth(model, arc_lengths) -> dict:
    """``|mu_RS|`` of arcs of increasing length against a fitted ``c T + d`` with ``c > 0``."""
    Ts = np.asarray(arc_lengths, float)
    mus = np.array([rs_index(model.index_path(T)) for T in Ts])
    a = np.abs(mus)
    if len(Ts) > 1:
        c, d0 = np.polyfit(Ts, a, 1)
    else:
        c, d0 = np.nan, np.nan
    d = float(np.min(a - c * Ts)) if np.isfinite(c) else np.nan
    rows = [{"T": float(T), "mu_RS": float(m), "bound": float(c * T + d)} for T, m in zip(Ts, mus)]
    passes = bool(np.isfinite(c) and c > 0 and np.all(a >= c * Ts + d - 1e-12))
    return {"fit": {"c": float(c), "d": d, "intercept": float(d0)}, "rows": rows, "passes": passes}
