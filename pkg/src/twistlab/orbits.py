"""Periodic points, prime-iterate surveys and Lagrangian chords of the model maps.

A model exposes ``iterate(x, k, tol=None)`` (batched over leading axes),
``difference(y, x)`` and ``in_interior(x)``; optional hooks are ``seeds(k)``,
``family_key(x)`` for conserved quantities, ``orbit_action(x, k)`` and a
``tol`` attribute for the integration tolerance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence

log = logging.getLogger(__name__)

JAC_STEP = 1e-6
DEDUPE_TOL = 1e-6
RESIDUAL_TOL = 1e-8
RANK_TOL = 1e-5


@dataclass
class OrbitRecord:
    point: np.ndarray
    period: int
    residual: float
    minimal: bool
    degenerate: bool = False
    verified_residual: float | None = None
    action: float | None = None
    family: dict | None = None

    def to_row(self) -> dict:
        row = {"period": self.period, "residual": self.residual, "verified_residual": self.verified_residual,
               "minimal": self.minimal, "degenerate": self.degenerate, "action": self.action}
        for i, v in enumerate(np.atleast_1d(self.point)):
            row[f"x{i}"] = float(v)
        return row


@dataclass
class ChordRecord:
    start: np.ndarray
    order: int
    residual: float
    start_component: float
    end_component: float
    periodic: bool = False
    period: int | None = None
    sub_chords: list = field(default_factory=list)
    verified_residual: float | None = None

    def to_row(self) -> dict:
        return {"order": self.order, "p": float(self.start[0]), "q": float(self.start[1]),
                "residual": self.residual, "verified_residual": self.verified_residual,
                "start_fiber": self.start_component, "end_fiber": self.end_component,
                "periodic": self.periodic, "period": self.period,
                "sub_chords": ";".join(f"{j}" for j in self.sub_chords)}


def divisors(k: int) -> list[int]:
    return [d for d in range(1, k) if k % d == 0]


def _iterate(model, x, k, tol=None):
    return model.iterate(x, k, tol=tol) if tol is not None else model.iterate(x, k)


def _defect(model, x, k, tol=None):
    return model.difference(_iterate(model, x, k, tol), x)


def _fd_jacobians(model, X, k, h: float = JAC_STEP):
    """``F(X)`` and central-difference Jacobians of ``F = f^k - id`` for a batch of points.

    The base points and all stencil points go through one batched integration,
    so they share one step sequence and the differences are smooth in ``x``.
    """
    n, d = X.shape
    stencil = [X]
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        stencil += [X + e, X - e]
    S = np.concatenate(stencil)
    Y = _iterate(model, S, k).reshape(2 * d + 1, n, d)
    S = S.reshape(2 * d + 1, n, d)
    F = model.difference(Y[0], S[0])
    Jac = np.empty((n, d, d))
    for i in range(d):
        Jac[:, :, i] = model.difference(Y[1 + 2 * i], Y[2 + 2 * i]) / (2 * h)
        Jac[:, i, i] -= 1.0
    return F, Jac


def newton_periodic(model, seeds, k: int, tol: float = 1e-10, max_iter: int = 30,
                    h: float = JAC_STEP) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched Newton on ``f^k(x) - x`` with pseudo-inverse steps.

    Returns the final points, residuals, a convergence mask and the smallest
    normalised singular value of the last Jacobian.
    """
    X = np.array(seeds, float, copy=True)
    alive = np.ones(len(X), bool)
    res = np.full(len(X), np.inf)
    srel = np.full(len(X), np.nan)
    for _ in range(max_iter):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        F, Jac = _fd_jacobians(model, X[idx], k, h)
        res[idx] = np.linalg.norm(F, axis=-1)
        sv = np.linalg.svd(Jac, compute_uv=False)
        srel[idx] = sv[:, -1] / np.maximum(sv[:, 0], 1e-300)
        done = res[idx] <= tol
        alive[idx[done]] = False
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(Jac, rcond=1e-8), F)
        # damp long steps; drop seeds that leave the interior
        norm = np.linalg.norm(step, axis=-1)
        step *= np.minimum(1.0, 0.1 / np.maximum(norm, 1e-300))[:, None]
        upd = idx[~done]
        X[upd] = model.wrap(X[upd] + step[~done])
        out = ~model.in_interior(X[upd])
        alive[upd[out]] = False
        res[upd[out]] = np.inf
    return X, res, res <= tol, srel


def _is_minimal(model, x, k: int, tol: float) -> bool:
    for d in divisors(k):
        if np.linalg.norm(_defect(model, x, d)) <= tol:
            return False
    return True


def _family_match(model, a: OrbitRecord, b: OrbitRecord) -> bool:
    if a.family is not None and b.family is not None:
        ka, kb = a.family["key"], b.family["key"]
        return ka[0] == kb[0] and abs(ka[1] - kb[1]) <= DEDUPE_TOL
    return False


def find_periodic_points(model, k: int, seeds=None, tol: float = 1e-10, dedupe_tol: float = DEDUPE_TOL,
                         minimal_tol: float = 1e-6, verify: bool = True, with_action: bool = True) -> list[OrbitRecord]:
    """Newton from every seed, then deduplicate, classify and re-verify.

    Points whose Jacobian ``Df^k - I`` is rank deficient are flagged degenerate;
    when the model has ``family_key`` they are merged into one record per family.
    """
    if k < 1:
        raise ValueError("period must be >= 1")
    if seeds is None:
        seeds = model.seeds(k) if hasattr(model, "seeds") else None
    seeds = np.atleast_2d(np.asarray(seeds, float))
    if seeds.size == 0:
        return []
    X, res, ok, srel = newton_periodic(model, seeds, k, tol)
    records: list[OrbitRecord] = []
    for x, r, s in zip(X[ok], res[ok], srel[ok]):
        degenerate = bool(s <= RANK_TOL)
        family = None
        if degenerate and hasattr(model, "family_key"):
            family = {"kind": "invariant-circle", "key": model.family_key(x)}
        rec = OrbitRecord(x.copy(), k, float(r), True, degenerate, family=family)
        dup = False
        for other in records:
            if _family_match(model, rec, other) or np.linalg.norm(model.difference(x, other.point)) <= dedupe_tol:
                dup = True
                break
        if not dup:
            records.append(rec)
    out = []
    tight = getattr(model, "tol", None)
    for rec in records:
        rec.minimal = _is_minimal(model, rec.point, k, minimal_tol)
        if verify:
            vt = tight / 10 if tight is not None else None
            rec.verified_residual = float(np.linalg.norm(_defect(model, rec.point, k, vt)))
            if rec.verified_residual > RESIDUAL_TOL:
                log.warning("orbit at %s failed re-verification (%.3g)", rec.point, rec.verified_residual)
                continue
        if with_action and hasattr(model, "orbit_action"):
            rec.action = float(model.orbit_action(rec.point, k))
        out.append(rec)
    return out


def prime_iterate_survey(model, primes, known_periods=(), seeds=None, action_bound=None,
                         tol: float = 1e-10) -> list[dict]:
    """Minimal-period orbits for each prime; ``action_bound = (c, d)`` compares actions with ``-c T + d``."""
    primes = sorted(int(p) for p in primes)
    known = max(known_periods, default=0)
    if primes and primes[0] <= known:
        log.warning("prime %d does not exceed the known minimal periods (max %d)", primes[0], known)
    rows = []
    for p in primes:
        recs = find_periodic_points(model, p, seeds, tol)
        new = [r for r in recs if r.minimal]
        row = {"prime": p, "new_orbits": len(new), "degenerate": sum(r.degenerate for r in new),
               "isolated": sum(not r.degenerate for r in new), "non_minimal": len(recs) - len(new),
               "max_verified_residual": max((r.verified_residual or 0.0 for r in new), default=0.0),
               "actions": [r.action for r in new], "records": new}
        if action_bound is not None:
            c, d = action_bound
            bound = -c * p + d
            row["collar_bound"] = bound
            row["above_collar_bound"] = sum(1 for r in new if r.action is not None and r.action > bound)
        rows.append(row)
    return rows


# chords -----------------------------------------------------------------------

@dataclass
class FiberLagrangian:
    """Union of angle fibres ``{x[angle_index] = c}`` of an annulus-type model."""

    values: tuple = (0.0, np.pi)
    angle_index: int = 1
    radial_range: tuple = (-0.85, 0.85)
    name: str = "fibres"

    def offsets(self, x) -> np.ndarray:
        """Angle minus each fibre value, reduced to ``[-pi, pi)``; shape ``(n_fibres, ...)``."""
        q = np.asarray(x)[..., self.angle_index]
        return np.array([(q - c + np.pi) % (2 * np.pi) - np.pi for c in self.values])

    def distance(self, x) -> np.ndarray:
        return np.min(np.abs(self.offsets(x)), axis=0)

    def component(self, x) -> np.ndarray:
        return np.asarray(self.values)[np.argmin(np.abs(self.offsets(x)), axis=0)]

    def point(self, s, value):
        s = np.atleast_1d(np.asarray(s, float))
        x = np.zeros(s.shape + (2,))
        x[..., 1 - self.angle_index] = s
        x[..., self.angle_index] = value
        return x


def find_chords(model, L: FiberLagrangian, m: int, n_grid: int = 1024, tol: float = 1e-12,
                periodic_check: int | None = None) -> list[ChordRecord]:
    """Chords of order ``m`` starting on each fibre, located by sign changes of the wrapped offset of
    ``f^m`` to every fibre and refined by Brent's method."""
    if m < 1:
        raise ValueError("order must be >= 1")
    out = []
    s = np.linspace(*L.radial_range, n_grid)
    tight = getattr(model, "tol", None)
    for c in L.values:
        starts = L.point(s, c)
        offs = L.offsets(_iterate(model, starts, m))
        # a sign change of the wrapped offset away from the branch cut is a crossing
        hits = []
        for j in range(len(L.values)):
            d = offs[j]
            near = (np.abs(d[:-1]) < np.pi / 2) & (np.abs(d[1:]) < np.pi / 2)
            hits += [(i, j) for i in np.nonzero(near & (np.sign(d[:-1]) * np.sign(d[1:]) <= 0))[0]
                     if d[i + 1] != 0.0]

        def g(si, c=c, j=0):
            return float(L.offsets(_iterate(model, L.point(si, c)[0], m))[j])

        for i, j in sorted(hits):
            try:
                si = brentq(g, s[i], s[i + 1], args=(c, j), xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
            except (ValueError, RuntimeError) as exc:
                raise NoConvergence(f"chord refinement failed on fibre {c}: {exc}") from exc
            x0 = L.point(si, c)[0]
            end = _iterate(model, x0, m)
            rec = ChordRecord(x0, m, float(L.distance(end)), float(c), float(L.component(end)))
            rec.sub_chords = _sub_chords(model, L, x0, m)
            per = _minimal_period(model, x0, periodic_check or m)
            rec.periodic, rec.period = per is not None, per
            if tight is not None:
                rec.verified_residual = float(L.distance(_iterate(model, x0, m, tight / 10)))
            out.append(rec)
    return out


def _sub_chords(model, L, x0, m, tol: float = RESIDUAL_TOL) -> list[int]:
    """Orders of the pieces when intermediate iterates already lie on ``L``."""
    cuts, last, x = [], 0, np.asarray(x0, float)
    for j in range(1, m):
        x = _iterate(model, x, 1)
        if L.distance(x) <= tol:
            cuts.append(j - last)
            last = j
    return cuts + [m - last] if cuts else []


def _minimal_period(model, x0, k_max: int, tol: float = RESIDUAL_TOL) -> int | None:
    x = np.asarray(x0, float)
    for k in range(1, k_max + 1):
        x = _iterate(model, x, 1)
        if np.linalg.norm(model.difference(x, x0)) <= tol:
            return k
    return None

