"""Hamiltonian action along trajectories of ``Hhat`` and the linear action-growth bound.

For ``lambda = r alpha`` one has ``lambda(X_H) = r d_r H``, so the action integrand
is ``Hhat - r d_r Hhat`` and a trajectory of length ``T`` in the cylindrical end
satisfies ``A <= -c T + d`` with ``c`` assembled from the three cutoff zones.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, trapezoid

from .errors import BadConstants, QuadratureFailure, QuantitativeTwistFails, SampleEscaped
from .extension import ExtendedHamiltonian, ExtensionParams, build_extension, choose_constants
from .hamflow import HamiltonianModel, Trajectory, _grid_values, integrate_flow, integrate_flow_batch

log = logging.getLogger(__name__)

ETA = 1e-3


@dataclass
class ActionReport:
    action: float
    lambda_term: float
    hamiltonian_term: float
    T: float
    zone_histogram: dict = field(default_factory=dict)


def action_integrand(Hhat: HamiltonianModel, t, x) -> np.ndarray:
    """``Hhat - lambda(X_Hhat)`` pointwise."""
    x = np.asarray(x, float)
    X = Hhat.vector_field(t, x)
    lam = np.einsum("...i,...i->...", Hhat.chart.liouville_form(x), X)
    return Hhat(t, x) - lam


def zone_classify(params: ExtensionParams, r, eta: float = ETA) -> np.ndarray:
    """Zone 1 where ``rho >= 1 - eta``, zone 3 where ``rho <= eta``, zone 2 otherwise."""
    r = np.asarray(r, float)
    rho = params.rho(np.maximum(r, 1.0))
    z = np.full(r.shape, 2, dtype=int)
    z[rho >= 1 - eta] = 1
    z[rho <= eta] = 3
    return z


def compute_action(Hhat: HamiltonianModel, traj: Trajectory, tol: float = 1e-8,
                   params: ExtensionParams | None = None) -> ActionReport:
    """``-int lambda(x') dt + int Hhat dt`` along ``traj``.

    Uses the integrals carried by the trajectory when they were computed for
    ``Hhat``; otherwise composite Simpson on the samples, cross-checked against
    the trapezoid rule.
    """
    T = float(traj.T)
    q = traj.quadrature
    if q is not None and q.get("model") is Hhat:
        lam, ham = q["lambda"], q["hamiltonian"]
    elif len(traj.times) < 2:
        lam = ham = 0.0
    else:
        ts = traj.times
        X = np.array([Hhat.vector_field(t, x) for t, x in zip(ts, traj.points)])
        lam_i = np.einsum("ij,ij->i", Hhat.chart.liouville_form(traj.points), X)
        ham_i = np.array([Hhat(t, x) for t, x in zip(ts, traj.points)])
        lam, ham = float(simpson(lam_i, x=ts)), float(simpson(ham_i, x=ts))
        err = abs(lam - trapezoid(lam_i, ts)) + abs(ham - trapezoid(ham_i, ts))
        if err > max(tol, tol * T) * 1e4:
            raise QuadratureFailure(f"sample spacing too coarse (rule mismatch {err:.3e})")
    hist = {}
    p = params or getattr(Hhat, "params", None)
    if p is not None and len(traj.times) > 1:
        z = zone_classify(p, traj.points[:, 0])
        dt = np.diff(traj.times)
        for k in (1, 2, 3):
            hist[k] = float(dt[z[:-1] == k].sum())
    return ActionReport(float(-lam + ham), float(lam), float(ham), T, hist)


def zone2_interval(params: ExtensionParams, eta: float = ETA, n: int = 4001) -> np.ndarray:
    r = np.linspace(1 + params.delta0, 1 + params.delta1, n)
    rho = params.rho(r)
    return r[(rho > eta) & (rho < 1 - eta)]


def zone_constants(Hhat: ExtendedHamiltonian, grid: dict | None = None, eta: float = ETA) -> dict:
    """``c1, c2, c3`` and ``c = min(c1, c2, c3)`` for the bound ``A <= -c T + d``."""
    p = Hhat.params
    grid = grid or Hhat.base.chart.boundary_grid()
    H0 = _grid_values(Hhat.H0, grid)
    H1 = _grid_values(Hhat.H1, grid)
    c1 = float((H1 - H0).min())
    if c1 <= 0:
        raise QuantitativeTwistFails(f"min(H1 - H0) = {c1:.6g} <= 0")
    c3 = p.C1 - p.C0
    if c3 <= 0:
        raise BadConstants("C1 <= C0: degenerate constants, no growth bound")
    r2 = zone2_interval(p, eta)
    eps_t = float(p.rho(r2).min()) if r2.size else 0.0
    delta_t = float((-p.rho.derivative(r2)).min()) if r2.size else 0.0
    c2p = eps_t * float(((H1 - H0) - c3).min())
    c2pp = delta_t * float((p.C0 - H0).min())
    c2 = c2p + c2pp + c3
    return {"c1": c1, "c2": c2, "c2_prime": c2p, "c2_doubleprime": c2pp, "c3": c3,
            "c": min(c1, c2, c3), "eps_tilde": eps_t, "delta_tilde": delta_t, "eta": eta}


def integrand_sup(Hhat: HamiltonianModel, r_max: float, grid: dict | None = None, n_r: int = 121) -> float:
    """Largest pointwise action integrand over ``[1, r_max] x B x S^1``."""
    grid = grid or Hhat.chart.boundary_grid()
    b = np.atleast_2d(np.asarray(grid["b"], float))
    worst = -np.inf
    ts = [0.0] if Hhat.autonomous else np.atleast_1d(grid["t"])
    for r in np.linspace(1.0, r_max, n_r):
        x = np.column_stack([np.full(len(b), r), b])
        for t in ts:
            worst = max(worst, float(np.max(action_integrand(Hhat, float(t), x))))
    return worst


def admissible_extension(H: HamiltonianModel, delta1: float = 0.1, grid: dict | None = None,
                         max_halvings: int = 8, eta: float = ETA):
    """Build ``Hhat`` with quantitative constants, thinning the collar until the
    pointwise integrand obeys ``Hhat - r d_r Hhat <= -c`` on ``[1, 1 + delta1]``."""
    grid = grid or H.chart.boundary_grid()
    for _ in range(max_halvings + 1):
        params = choose_constants(H, "quantitative", grid, delta1=delta1)
        ext = build_extension(H, params, grid)
        zc = zone_constants(ext, grid, eta)
        sup = integrand_sup(ext, 1 + 1.2 * delta1, grid)
        if sup <= -zc["c"] + 1e-6:
            return ext, zc
        log.info("integrand %.6g exceeds -c = %.6g at delta1 = %g; halving", sup, -zc["c"], delta1)
        delta1 *= 0.5
    raise BadConstants("could not find a collar width with a pointwise action bound")


def _trajectory(Hhat, x0, T, tol):
    traj = integrate_flow(Hhat, x0, T, tol=tol, quadrature=Hhat, stop_outside=True)
    if traj.status == "escaped" or np.any(traj.points[:, 0] < 1.0):
        raise SampleEscaped(f"trajectory from r = {x0[0]:.6g} entered r < 1")
    return traj


def verify_action_growth(Hhat: ExtendedHamiltonian, N: int = 100, T_range=(1.0, 50.0), seed: int = 0,
                         tol: float = 1e-10, n_short: int = 20, grid: dict | None = None,
                         eta: float = ETA, bound_tol: float = 1e-6, slope_tol: float = 1e-3) -> dict:
    """Integrate ``N`` collar trajectories and test ``A <= -c T + d`` on each.

    ``d`` is the largest ``A + c T`` over ``n_short`` trajectories with ``T <= 1``
    (and at least 0, the value for ``T = 0``).
    """
    if N < 1:
        raise ValueError("N must be positive")
    rng = np.random.default_rng(seed)
    zc = zone_constants(Hhat, grid, eta)
    c = zc["c"]
    p = Hhat.params
    chart = Hhat.base.chart

    def draw(n):
        r = rng.uniform(1.0, 1.0 + 1.5 * p.delta1, n)
        return np.column_stack([r, chart.sample_boundary(n, rng)])

    def run(X0, Ts):
        """Actions of trajectories from ``X0``; ``None`` marks a sample that entered ``r < 1``."""
        if not Hhat.autonomous:
            out = []
            for x0, T in zip(X0, Ts):
                try:
                    rep = compute_action(Hhat, _trajectory(Hhat, x0, T, tol))
                except SampleEscaped as exc:
                    log.warning("sample excluded: %s", exc)
                    rep = None
                out.append(rep)
            return out
        res = integrate_flow_batch(Hhat, X0, Ts, tol=tol, quadrature=Hhat)
        z = zone_classify(p, res["path"][:, :, 0])
        ds = np.diff(res["s"])
        out = []
        for i, T in enumerate(res["T"]):
            if res["min"][i, 0] < 1.0:
                log.warning("sample excluded: trajectory from r = %.6g entered r < 1", X0[i, 0])
                out.append(None)
                continue
            hist = {k: float(T * ds[z[:-1, i] == k].sum()) for k in (1, 2, 3)}
            lam, ham = float(res["lambda"][i]), float(res["hamiltonian"][i])
            out.append(ActionReport(-lam + ham, lam, ham, float(T), hist))
        return out

    d = 0.0
    for rep in run(draw(n_short), rng.uniform(0.0, 1.0, n_short)):
        if rep is not None:
            d = max(d, rep.action + c * rep.T)

    rows, escaped = [], 0
    X0 = draw(N)
    for x0, rep in zip(X0, run(X0, rng.uniform(*T_range, N))):
        if rep is None:
            escaped += 1
            continue
        bound = -c * rep.T + d
        rows.append({"r0": float(x0[0]), "T": rep.T, "action": rep.action, "bound": bound,
                     "ok": bool(rep.action <= bound + bound_tol),
                     "zone1": rep.zone_histogram.get(1, 0.0), "zone2": rep.zone_histogram.get(2, 0.0),
                     "zone3": rep.zone_histogram.get(3, 0.0)})
    Ts = np.array([r["T"] for r in rows])
    As = np.array([r["action"] for r in rows])
    slope, intercept = np.polyfit(Ts, As, 1) if len(rows) > 1 else (np.nan, np.nan)
    passes = bool(rows) and all(r["ok"] for r in rows) and slope <= -c + slope_tol
    return {"c": c, "d": d, "constants": zc, "slope_fit": float(slope), "intercept": float(intercept),
            "samples": rows, "escaped": escaped, "passes": bool(passes)}


def zone3_orbit_action(Hhat: ExtendedHamiltonian, r0: float, b0, T: float, tol: float = 1e-11) -> dict:
    """Action of a trajectory in the linear region against ``(C0 - C1) T``."""
    x0 = np.concatenate([[r0], np.atleast_1d(np.asarray(b0, float))])
    rep = compute_action(Hhat, integrate_flow(Hhat, x0, T, tol=tol, quadrature=Hhat))
    expected = (Hhat.params.C0 - Hhat.params.C1) * T
    return {"action": rep.action, "expected": expected, "error": abs(rep.action - expected)}
