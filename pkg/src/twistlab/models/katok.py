"""Katok--Brieskorn system on ``Sigma = {f = 0} cap S^{2n+1}`` in unitary ``w``-coordinates.

``f(w) = w0**2 + w1**2 - 2i sum_j w_{2j} w_{2j+1}`` and
``H_eps(w) = |w|**2 + sum_j eps_j (|w_{2j}|**2 - |w_{2j+1}|**2)``.  The Reeb flow of
``alpha / H_eps`` is diagonal with weights ``1, 1, 1 + eps_j, 1 - eps_j`` and the
return map of the page ``{w0 > 0}`` rotates the pairs ``(w_{2j}, w_{2j+1})`` by
``exp(+-2 pi i eps_j)``.

The default is ``n = 3`` (one pair).  Page points are charted by ``(w2, w3)``
together with the sign of ``Im w1``: the constraints ``f = 0``, ``|w| = 1`` and
``w0 > 0`` determine ``w1`` up to that sign.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import FrameDegenerate, NotOnPage, OffVariety

VARIETY_TOL = 1e-10


@dataclass
class KatokSystem:
    """``n = 2m + 1`` and ``eps_vec = (eps_1, ..., eps_m)``."""

    n: int = 3
    eps_vec: tuple = (0.1 / np.sqrt(2),)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError("n must be odd and >= 3")
        self.eps_vec = tuple(float(e) for e in np.atleast_1d(self.eps_vec))
        if len(self.eps_vec) != (self.n - 1) // 2:
            raise ValueError(f"need {(self.n - 1) // 2} eps values for n = {self.n}")
        if any(abs(e) >= 1 for e in self.eps_vec):
            raise ValueError("eps_j must lie in (-1, 1)")

    @property
    def m(self) -> int:
        return (self.n - 1) // 2

    @property
    def weights(self) -> np.ndarray:
        """Reeb-flow frequencies of ``w_0..w_n``."""
        out = np.ones(self.n + 1)
        for j, e in enumerate(self.eps_vec, start=1):
            out[2 * j] = 1 + e
            out[2 * j + 1] = 1 - e
        return out

    @property
    def S(self) -> np.ndarray:
        """Symmetric matrix with ``f(w) = w^T S w``."""
        S = np.zeros((self.n + 1, self.n + 1), complex)
        S[0, 0] = S[1, 1] = 1.0
        for j in range(1, self.m + 1):
            S[2 * j, 2 * j + 1] = S[2 * j + 1, 2 * j] = -1j
        return S

    def reeb_periods(self) -> list:
        return [1.0 / w for w in np.unique(self.weights)]


def unitary_change(n: int = 3) -> np.ndarray:
    """Matrix ``U`` with ``w = U z``."""
    U = np.zeros((n + 1, n + 1), complex)
    U[0, 0] = U[1, 1] = 1.0
    c = np.sqrt(2) / 2
    for j in range(1, (n - 1) // 2 + 1):
        a, b = 2 * j, 2 * j + 1
        U[a, a], U[a, b] = c, 1j * c
        U[b, a], U[b, b] = 1j * c, c
    return U


def f_w(w) -> np.ndarray:
    w = np.asarray(w, complex)
    out = w[..., 0] ** 2 + w[..., 1] ** 2
    for j in range(1, (w.shape[-1] - 2) // 2 + 1):
        out = out - 2j * w[..., 2 * j] * w[..., 2 * j + 1]
    return out


def variety_residual(w) -> np.ndarray:
    w = np.asarray(w, complex)
    return np.maximum(np.abs(f_w(w)), np.abs(np.sum(np.abs(w) ** 2, axis=-1) - 1))


def _check_sigma(w, tol=VARIETY_TOL):
    res = float(np.max(variety_residual(w)))
    if res > tol:
        raise OffVariety(f"point off Sigma (residual {res:.3e})")


def delta_eps(sys: KatokSystem, w):
    w = np.asarray(w, complex)
    out = 0.0
    for j, e in enumerate(sys.eps_vec, start=1):
        out = out + e * (np.abs(w[..., 2 * j]) ** 2 - np.abs(w[..., 2 * j + 1]) ** 2)
    return out


def hamiltonian_eps(sys: KatokSystem, w):
    w = np.asarray(w, complex)
    return np.sum(np.abs(w) ** 2, axis=-1) + delta_eps(sys, w)


def katok_reeb_flow(sys: KatokSystem, w, t) -> np.ndarray:
    """Diagonal unitary flow ``w_j -> exp(2 pi i t nu_j) w_j``."""
    w = np.asarray(w, complex)
    _check_sigma(w)
    return w * np.exp(2j * np.pi * np.multiply.outer(np.asarray(t, float), sys.weights))


def on_page(w, tol: float = VARIETY_TOL) -> bool:
    w = np.asarray(w, complex)
    return bool(np.all(np.abs(w[..., 0].imag) <= tol) and np.all(w[..., 0].real > 0)
                and float(np.max(variety_residual(w))) <= tol)


def katok_return_map(sys: KatokSystem, p) -> np.ndarray:
    """Return map of the page ``w0 > 0``: ``w_{2j} -> e^{2 pi i eps_j} w_{2j}``, ``w_{2j+1} -> e^{-2 pi i eps_j} w_{2j+1}``."""
    p = np.asarray(p, complex)
    if not on_page(p):
        raise NotOnPage("point is not on the page w0 > 0 of Sigma")
    out = p.copy()
    for j, e in enumerate(sys.eps_vec, start=1):
        out[..., 2 * j] *= np.exp(2j * np.pi * e)
        out[..., 2 * j + 1] *= np.exp(-2j * np.pi * e)
    return out


def katok_twist_function(sys: KatokSystem, p) -> np.ndarray:
    """``K_eps = Delta_eps / H_eps``, the value of ``alpha_eps`` on the generating field at the binding."""
    p = np.asarray(p, complex)
    return delta_eps(sys, p) / hamiltonian_eps(sys, p)


# page chart (n = 3) ---------------------------------------------------------------
def page_point(w2, w3, branch: int = 1) -> np.ndarray:
    """Lift ``(w2, w3)`` to the page; ``branch`` is the sign of ``Im w1``."""
    w2 = np.asarray(w2, complex)
    w3 = np.asarray(w3, complex)
    c = 2j * w2 * w3
    rho2 = 1.0 - np.abs(w2) ** 2 - np.abs(w3) ** 2
    y2 = 0.5 * (rho2 - c.real)
    if np.any(y2 <= 0):
        raise NotOnPage("(w2, w3) outside the chart")
    y = branch * np.sqrt(y2)
    x = c.imag / (2 * y)
    r02 = rho2 - x**2 - y**2
    if np.any(r02 <= 0):
        raise NotOnPage("(w2, w3) lies on or beyond the binding")
    return np.stack([np.sqrt(r02) + 0j, x + 1j * y, w2, w3], axis=-1)


def page_chart(w) -> tuple:
    w = np.asarray(w, complex)
    return w[..., 2], w[..., 3], np.where(w[..., 1].imag >= 0, 1, -1)


def chart_margin(w2, w3) -> np.ndarray:
    """``min(y**2, r0**2)`` of the lift; positive exactly on the chart."""
    w2 = np.asarray(w2, complex)
    w3 = np.asarray(w3, complex)
    c = 2j * w2 * w3
    rho2 = 1.0 - np.abs(w2) ** 2 - np.abs(w3) ** 2
    y2 = 0.5 * (rho2 - c.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        x2 = np.where(y2 > 0, c.imag**2 / (4 * np.where(y2 > 0, y2, 1.0)), np.inf)
    return np.minimum(y2, rho2 - x2 - y2)


def p0() -> np.ndarray:
    return np.array([1 / np.sqrt(2), 1j / np.sqrt(2), 0, 0], complex)


def q0() -> np.ndarray:
    return np.array([1 / np.sqrt(2), -1j / np.sqrt(2), 0, 0], complex)


def binding_points(sys: KatokSystem) -> tuple:
    """``p1`` with ``|w2| = 1`` and ``p2`` with ``|w3| = 1``."""
    return np.array([0, 0, 1, 0], complex), np.array([0, 0, 0, 1], complex)


class KatokPageMap:
    """Return map on one branch of the page, state ``(Re w2, Im w2, Re w3, Im w3)``."""

    dim = 4
    name = "katok"

    def __init__(self, sys: KatokSystem, branch: int = 1):
        if sys.n != 3:
            raise ValueError("the page chart is implemented for n = 3")
        self.sys = sys
        self.branch = branch

    @staticmethod
    def to_complex(x):
        x = np.asarray(x, float)
        return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]

    @staticmethod
    def to_real(w2, w3):
        return np.stack([np.real(w2), np.imag(w2), np.real(w3), np.imag(w3)], axis=-1)

    def iterate(self, x, k: int = 1, tol: float | None = None) -> np.ndarray:
        w2, w3 = self.to_complex(x)
        e = self.sys.eps_vec[0]
        rot = np.exp(2j * np.pi * e * k)
        return self.to_real(w2 * rot, w3 / rot)

    def difference(self, y, x):
        return np.asarray(y, float) - np.asarray(x, float)

    def wrap(self, x):
        return np.asarray(x, float)

    def in_interior(self, x, margin: float = 1e-6) -> np.ndarray:
        return chart_margin(*self.to_complex(x)) > margin

    def lift(self, x) -> np.ndarray:
        return page_point(*self.to_complex(x), branch=self.branch)

    def seeds(self, k: int = 1, n_angle: int = 16, radii=(0.05, 0.15, 0.3)) -> np.ndarray:
        """Seeds on tori ``|w2| = a``, ``|w3| = b`` inside the chart."""
        th = np.linspace(0, 2 * np.pi, n_angle, endpoint=False)
        A, B = np.meshgrid(th, th, indexing="ij")
        out = []
        for a in radii:
            for b in radii:
                pts = self.to_real(a * np.exp(1j * A.ravel()), b * np.exp(1j * B.ravel()))
                out.append(pts[self.in_interior(pts)])
        return np.concatenate(out)


def katok_fixed_point_scan(sys: KatokSystem, grid_resolution: int = 128, radii=None,
                           tol: float = 1e-8, newton_iter: int = 20) -> dict:
    """Scan ``|Phi(p) - p|`` over angle-radius grids on both branches and refine minima.

    Grid: ``grid_resolution`` values of each of ``arg w2``, ``arg w3`` times a set
    of radii ``(|w2|, |w3|)``.  Local minima of the displacement (over the radius
    axes) are polished by Newton on ``Phi(x) - x``.
    """
    radii = np.linspace(0.0, 0.4, 9) if radii is None else np.asarray(radii, float)
    if all(abs(e - round(e)) < 1e-15 for e in sys.eps_vec):
        return {"degenerate": True, "points": [], "note": "return map is the identity on the page"}
    th = np.linspace(0, 2 * np.pi, grid_resolution, endpoint=False)
    A2, A3 = np.meshgrid(th, th, indexing="ij")
    found = []
    for branch in (1, -1):
        pm = KatokPageMap(sys, branch)
        R2, R3 = np.meshgrid(radii, radii, indexing="ij")
        # displacement depends on the radii only; scan the full product grid anyway
        w2 = R2[:, :, None, None] * np.exp(1j * A2)[None, None]
        w3 = R3[:, :, None, None] * np.exp(1j * A3)[None, None]
        x = pm.to_real(w2, w3)
        ok = pm.in_interior(x)
        disp = np.linalg.norm(pm.iterate(x) - x, axis=-1)
        disp = np.where(ok, disp, np.inf)
        dr = disp.min(axis=(2, 3))
        cand = []
        for i in range(len(radii)):
            for j in range(len(radii)):
                nb = dr[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
                if np.isfinite(dr[i, j]) and dr[i, j] <= nb.min():
                    a, b = np.unravel_index(np.argmin(disp[i, j]), disp[i, j].shape)
                    cand.append(x[i, j, a, b])
        for c in cand:
            xk = c.copy()
            for _ in range(newton_iter):
                F = pm.iterate(xk) - xk
                if np.linalg.norm(F) < 1e-15:
                    break
                J = _fd_jacobian(lambda v: pm.iterate(v) - v, xk)
                xk = xk - np.linalg.lstsq(J, F, rcond=None)[0]
            res = float(np.linalg.norm(pm.iterate(xk) - xk))
            if res <= tol and pm.in_interior(xk):
                w = pm.lift(xk)
                if not any(np.linalg.norm(w - f["w"]) < 1e-6 for f in found):
                    found.append({"w": w, "residual": res, "branch": branch})
    return {"degenerate": False, "points": found}


def _fd_jacobian(F, x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, float)
    J = np.empty((x.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        J[:, i] = (F(x + e) - F(x - e)) / (2 * h)
    return J


def period_scan(sys: KatokSystem, k: int, n_angle: int = 16, radii=(0.1, 0.2, 0.3), tol: float = 1e-10) -> dict:
    """Fraction of seeds with ``|Phi^k(x) - x| <= tol`` (whole page for rational ``k eps``)."""
    counts = {}
    for branch in (1, -1):
        pm = KatokPageMap(sys, branch)
        x = pm.seeds(k, n_angle, radii)
        d = np.linalg.norm(pm.iterate(x, k) - x, axis=-1)
        counts[branch] = float(np.mean(d <= tol))
    return counts


# linearised Reeb flow ------------------------------------------------------------
def xi_basis(sys: KatokSystem, w) -> np.ndarray:
    """Orthonormal complex basis (columns) of ``xi_w``: Hermitian complement of ``w`` and ``conj(S w)``."""
    w = np.asarray(w, complex)
    N = np.stack([w, np.conj(sys.S @ w)], axis=1)
    q, r = np.linalg.qr(N, mode="complete")
    if abs(r[1, 1]) < 1e-12:
        raise FrameDegenerate("normal directions are dependent")
    return q[:, 2:]


def _orthonormal_projection(P: np.ndarray, frame0: np.ndarray) -> np.ndarray:
    """Project ``frame0`` onto the range of the orthonormal ``P`` and re-orthonormalise."""
    M = P @ (P.conj().T @ frame0)
    q, r = np.linalg.qr(M)
    d = np.diag(r)
    if np.min(np.abs(d)) < 1e-10:
        raise FrameDegenerate("projected frame lost rank")
    return q * (d / np.abs(d))[None, :]


def realify(C: np.ndarray) -> np.ndarray:
    """Real ``2k x 2k`` matrix of complex ``C`` in the ordering ``(x1, y1, x2, y2, ...)``."""
    k = C.shape[-1]
    R = np.zeros(C.shape[:-2] + (2 * k, 2 * k))
    R[..., 0::2, 0::2] = C.real
    R[..., 0::2, 1::2] = -C.imag
    R[..., 1::2, 0::2] = C.imag
    R[..., 1::2, 1::2] = C.real
    return R


def linearized_reeb_matrices(sys: KatokSystem, w0, times) -> np.ndarray:
    """``Psi(t)`` of the linearised Reeb flow on ``xi`` in a unitary frame transported by projection."""
    w0 = np.asarray(w0, complex)
    _check_sigma(w0)
    frame0 = xi_basis(sys, w0)
    out = []
    for t in np.atleast_1d(times):
        D = np.exp(2j * np.pi * t * sys.weights)
        wt = D * w0
        frame_t = _orthonormal_projection(xi_basis(sys, wt), frame0)
        out.append(frame_t.conj().T @ (D[:, None] * frame0))
    return realify(np.array(out))


def sample_sigma(sys: KatokSystem, n: int, rng=None) -> np.ndarray:
    """Random points of ``Sigma`` (Gaussian vector projected onto ``f = 0``, then normalised)."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    while len(out) < n:
        w = rng.normal(size=sys.n + 1) + 1j * rng.normal(size=sys.n + 1)
        # solve f = 0 for w1 from the others and rescale onto the sphere
        rest = w[0] ** 2
        for j in range(1, sys.m + 1):
            rest = rest - 2j * w[2 * j] * w[2 * j + 1]
        w[1] = np.sqrt(-rest)
        w /= np.linalg.norm(w)
        out.append(w)
    return np.array(out)
