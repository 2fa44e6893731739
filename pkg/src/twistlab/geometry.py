"""Collar profiles of degenerate Liouville domains and the square-root / squaring maps.

Convention: ``s`` is the distance-from-boundary coordinate on the collar, with the
boundary ``B`` at ``s = 0``.  A degenerate Liouville form reads ``lambda = A(s) alpha``
with ``A(0) = 1``, ``A'(0) = 0`` and ``A' < 0`` on ``(0, 1]``.  The outward coordinate
used elsewhere in the package is ``r = 1 - s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import NoConvergence, NonMonotoneProfile, OutOfCollar

BISECTION_TOL = 1e-12
BISECTION_MAXITER = 200
DEFAULT_GRID = 256


class CollarProfile:
    """Degeneracy profile ``A(s)`` on the collar ``s in [0, s_max]``.

    Parameters
    ----------
    A, dA, d2A : callable
        The profile and its first two derivatives, vectorised over numpy arrays.
    s_max : float
        End of the collar (``<= 1``).
    name : str
        Label used in reports.
    inverse : callable, optional
        Closed-form solution ``phi`` of ``A(phi) = 1 - s``; used by
        :func:`solve_phi` in place of the iterative root finder.
    """

    def __init__(self, A: Callable, dA: Callable, d2A: Callable, s_max: float = 1.0,
                 name: str = "custom", validate: bool = True, n_check: int = 2001,
                 inverse: Callable | None = None):
        self.A = A
        self.dA = dA
        self.d2A = d2A
        self.inverse = inverse
        self.s_max = float(s_max)
        self.name = name
        if validate:
            self.validate(n_check)

    def validate(self, n_check: int = 2001) -> None:
        if not (0 < self.s_max <= 1):
            raise ValueError("s_max must lie in (0, 1]")
        if abs(float(self.A(0.0)) - 1.0) > 1e-12:
            raise NonMonotoneProfile(f"A(0) = {float(self.A(0.0))} != 1")
        if abs(float(self.dA(0.0))) > 1e-12:
            raise NonMonotoneProfile(f"A'(0) = {float(self.dA(0.0))} != 0")
        s = np.linspace(0.0, self.s_max, n_check)[1:]
        d = self.dA(s)
        if np.any(d >= 0):
            bad = s[np.argmax(d >= 0)]
            raise NonMonotoneProfile(f"A' >= 0 at s = {bad:.6g}")
        # ties are allowed: high powers of s underflow against 1 near the boundary
        if np.any(np.diff(self.A(np.concatenate([[0.0], s]))) > 0):
            raise NonMonotoneProfile("A increases on the sample grid")

    # constructors -------------------------------------------------------------
    @classmethod
    def polynomial(cls, coefficients: dict[int, float] | int = 2, **kw) -> "CollarProfile":
        """``A(s) = 1 + sum_k c_k s**k``; an integer ``k`` means ``A = 1 - s**k``."""
        if isinstance(coefficients, (int, np.integer)):
            k = int(coefficients)
            if k < 2:
                raise NonMonotoneProfile("exponent must be >= 2 so that A'(0) = 0")
            coefficients = {k: -1.0}
            kw.setdefault("name", f"1-s^{k}")
        coeffs = {int(k): float(c) for k, c in coefficients.items()}
        if any(k < 2 for k in coeffs):
            raise NonMonotoneProfile("profile terms must have degree >= 2")
        poly = _Horner([1.0] + [coeffs.get(j, 0.0) for j in range(1, max(coeffs) + 1)])
        d1, d2 = poly.deriv(), poly.deriv().deriv()
        kw.setdefault("name", "polynomial")
        if len(coeffs) == 1:
            (k, c), = coeffs.items()
            if c < 0:
                kw.setdefault("inverse", lambda s, k=k, c=c: (np.asarray(s, float) / -c) ** (1.0 / k))
        prof = cls(poly, d1, d2, **kw)
        prof.coefficients = coeffs
        return prof

    @classmethod
    def table(cls, s: Sequence[float], A: Sequence[float], **kw) -> "CollarProfile":
        """Monotone cubic (PCHIP) interpolation of sampled ``(s, A(s))`` values.

        The derivative at ``s = 0`` is pinned to zero by mirroring the table.
        """
        s = np.asarray(s, float)
        A = np.asarray(A, float)
        if s[0] != 0.0:
            raise ValueError("table must start at s = 0")
        ss = np.concatenate([-s[:0:-1], s])
        aa = np.concatenate([A[:0:-1], A])
        # mirrored data is symmetric, so pchip gives slope 0 at the origin
        interp = PchipInterpolator(ss, aa, extrapolate=False)
        kw.setdefault("name", "table")
        return cls(interp, interp.derivative(1), interp.derivative(2), s_max=float(s[-1]), **kw)

    @classmethod
    def from_config(cls, cfg: dict) -> "CollarProfile":
        kind = cfg.get("kind", "polynomial")
        if kind == "polynomial":
            if "coefficients" in cfg:
                return cls.polynomial({int(k): v for k, v in cfg["coefficients"].items()})
            return cls.polynomial(int(cfg.get("exponent", 2)))
        if kind == "table":
            return cls.table(cfg["s"], cfg["A"])
        raise ValueError(f"unknown profile kind {kind!r}")

    def __repr__(self) -> str:
        return f"CollarProfile({self.name})"


class _Horner:
    """Polynomial with increasing-degree coefficients, evaluated by ``np.polyval``."""

    def __init__(self, coef):
        self.coef = np.asarray(coef, float)
        self._rev = self.coef[::-1].copy()

    def __call__(self, x):
        return np.polyval(self._rev, x)

    def deriv(self) -> "_Horner":
        c = self.coef[1:] * np.arange(1, len(self.coef))
        return _Horner(c if c.size else [0.0])


def default_profile() -> CollarProfile:
    return CollarProfile.polynomial(2)


@dataclass(frozen=True)
class CollarPoint:
    """A point ``(s, b)`` of the collar ``[0, s_max] x B``."""

    s: float
    b: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, float)))
        if not (0.0 <= self.s <= 1.0):
            raise OutOfCollar(f"s = {self.s} outside [0, 1]")


@dataclass
class DomainDescriptor:
    """Description of a (possibly degenerate) Liouville domain near its boundary."""

    dimension: int
    boundary_chart: str
    profile: CollarProfile | None = None
    contact_form: Callable | None = None

    def __post_init__(self):
        if self.dimension < 2 or self.dimension % 2:
            raise ValueError("dimension must be an even integer >= 2")

    @property
    def degenerate(self) -> bool:
        return self.profile is not None


def s_to_r(s):
    return 1.0 - np.asarray(s)


def r_to_s(r):
    return 1.0 - np.asarray(r)


def solve_phi(profile: CollarProfile, s, tol: float = BISECTION_TOL,
              maxiter: int = BISECTION_MAXITER, closed_form: bool = True):
    """Solve ``A(phi) = 1 - s`` for ``phi`` (vectorised, bracketed).

    Newton steps on ``A(phi) - (1 - s)`` are accepted while they stay inside the
    current bracket; otherwise the bracket is bisected.  The integrated identity
    is regular at ``s = 0`` whereas the ODE ``phi' = -1 / A'(phi)`` is singular
    there, so the ODE is never integrated.  A closed-form ``profile.inverse``
    takes precedence unless ``closed_form`` is false.
    """
    s_arr = np.asarray(s, float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    if np.any((s_arr < 0) | (s_arr > 1)):
        raise OutOfCollar("s must lie in [0, 1]")
    if closed_form and profile.inverse is not None:
        phi = np.asarray(profile.inverse(s_arr), float)
        return float(phi[0]) if scalar else phi
    target = 1.0 - s_arr
    lo = np.zeros_like(s_arr)
    hi = np.full_like(s_arr, profile.s_max)
    if np.any(profile.A(hi) > target + tol):
        raise NoConvergence("1 - s is below A(s_max): no root inside the collar")
    x = 0.5 * (lo + hi)
    done = s_arr == 0
    for _ in range(maxiter):
        f = profile.A(x) - target
        # A is decreasing: f > 0 means the root lies to the right
        lo = np.where(f > 0, x, lo)
        hi = np.where(f > 0, hi, x)
        done = done | (np.abs(f) <= 2 * np.finfo(float).eps)
        if np.all(done | (hi - lo <= 4 * np.finfo(float).eps * np.maximum(hi, 1e-300))):
            break
        d = profile.dA(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / d
        ok = np.isfinite(xn) & (xn > lo) & (xn < hi)
        done = done | (ok & (np.abs(xn - x) <= 4 * np.finfo(float).eps * x))
        x = np.where(done, x, np.where(ok, xn, 0.5 * (lo + hi)))
    phi = np.where(s_arr == 0, 0.0, x)
    resid = np.abs(profile.A(phi) - target)
    if np.any(resid > tol):
        raise NoConvergence(f"root residual {resid.max():.3e} exceeds {tol}")
    return float(phi[0]) if scalar else phi


def phi_prime(profile: CollarProfile, s):
    """``phi'(s) = -1 / A'(phi(s))``; infinite at ``s = 0``."""
    phi = np.asarray(solve_phi(profile, s))
    with np.errstate(divide="ignore"):
        return -1.0 / profile.dA(phi)


def nondegeneration_map(profile: CollarProfile, p: CollarPoint) -> CollarPoint:
    """Square-root map ``Q(s, b) = (phi(s), b)``."""
    return CollarPoint(solve_phi(profile, p.s), p.b)


def degeneration_map(profile: CollarProfile, p: CollarPoint) -> CollarPoint:
    """Squaring map ``S = Q^{-1}``: ``(s, b) -> (1 - A(s), b)``."""
    if p.s > profile.s_max:
        raise OutOfCollar(f"s = {p.s} beyond the collar end {profile.s_max}")
    return CollarPoint(float(1.0 - profile.A(p.s)), p.b)


def collar_grid(n: int = DEFAULT_GRID, s_max: float = 1.0, b=None) -> list[CollarPoint]:
    b = np.zeros(1) if b is None else b
    return [CollarPoint(float(s), b) for s in np.linspace(0.0, s_max, n)]


def pullback_form_check(profile: CollarProfile, grid: Sequence[CollarPoint]) -> dict:
    """Check ``Q^* lambda = (1 - s) alpha`` on a grid, i.e. ``A(phi(s)) = 1 - s``."""
    s = np.array([p.s for p in grid], float)
    phi = np.atleast_1d(solve_phi(profile, s))
    resid = np.abs(profile.A(phi) - (1.0 - s))
    return {"max_residual": float(resid.max(initial=0.0)), "n": int(s.size)}


def roundtrip_residual(profile: CollarProfile, grid: Sequence[CollarPoint]) -> float:
    """Max of ``|S(Q(x)) - x|`` over the grid."""
    worst = 0.0
    for p in grid:
        back = degeneration_map(profile, nondegeneration_map(profile, p))
        worst = max(worst, abs(back.s - p.s), float(np.max(np.abs(back.b - p.b))))
    return worst
