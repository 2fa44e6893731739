"""Named numerical checks shared by the command line, the demos and the test-suite.

Every check returns a :class:`CheckResult` with a pass flag, a flat summary and
optional tables (lists of row dicts) suitable for CSV output.
"""
from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field

import numpy as np

from .action import admissible_extension, verify_action_growth, zone3_orbit_action
from .extension import _with_r, build_extension, linear_residual
from .geometry import CollarProfile, collar_grid, roundtrip_residual, solve_phi
from .hamflow import energy_drift, flow_symplecticity_residual, integrate_flow
from .index import block_decompose, katok_reeb_arcs, rotation_path, rs_index, verify_index_growth
from .models.annulus import AnnulusTwistModel
from .models.billiard import CircleTable, billiard_form_check, billiard_map, make_table
from .models.collar import polynomial_collar_model
from .models.katok import (KatokPageMap, KatokSystem, binding_points, katok_fixed_point_scan,
                           katok_twist_function, p0, q0, sample_sigma)
from .orbits import FiberLagrangian, find_chords, prime_iterate_survey
from .smoothing import build_family, nondegenerate_hamiltonian, smoothing_table, verify_convergence


@dataclass
class CheckResult:
    name: str
    passes: bool
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passes else 'FAIL'}] {self.name} ({self.runtime:.2f} s)"


def _timed(name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kw):
            t0 = time.perf_counter()
            res = fn(*args, **kw)
            res.name = name
            res.runtime = time.perf_counter() - t0
            return res
        return run
    return wrap


def _smoothed_annulus(kappa: float = 0.1, eps: float = 0.1):
    m = AnnulusTwistModel(kappa)
    fam = build_family(m.E, m.profile, eps, symmetric=True)
    return m, fam


@_timed("katok-values")
def katok_values(eps1: float = 0.1) -> CheckResult:
    """Twist function at the two binding points against ``eps/(1+eps)`` and ``-eps/(1-eps)``."""
    sys = KatokSystem(3, (eps1,))
    p1, p2 = binding_points(sys)
    k1, k2 = float(np.real(katok_twist_function(sys, p1))), float(np.real(katok_twist_function(sys, p2)))
    e1, e2 = eps1 / (1 + eps1), -eps1 / (1 - eps1)
    err = max(abs(k1 - e1), abs(k2 - e2))
    return CheckResult("", err <= 1e-10, {"K_p1": k1, "K_p2": k2, "expected_p1": e1, "expected_p2": e2,
                                          "max_error": err})


@_timed("katok-fixed-points")
def katok_fixed_points(eps1: float = 0.1 / np.sqrt(2), resolution: int = 128) -> CheckResult:
    sys = KatokSystem(3, (eps1,))
    scan = katok_fixed_point_scan(sys, resolution)
    pts = [f["w"] for f in scan["points"]]
    refs = {"p0": p0(), "q0": q0()}
    errs = {k: min((float(np.linalg.norm(w - ref)) for w in pts), default=np.inf) for k, ref in refs.items()}
    ok = len(pts) == 2 and max(errs.values()) <= 1e-8
    rows = [{"branch": f["branch"], "residual": f["residual"],
             **{f"w{i}": str(complex(c)) for i, c in enumerate(f["w"])}} for f in scan["points"]]
    return CheckResult("", ok, {"count": len(pts), "error_p0": errs["p0"], "error_q0": errs["q0"]},
                       {"fixed_points": rows})


@_timed("degeneration-roundtrip")
def degeneration_roundtrip(exponents=(2, 3), n: int = 256) -> CheckResult:
    grid = collar_grid(n)
    summ, ok = {}, True
    for k in exponents:
        prof = CollarProfile.polynomial(int(k))
        prof.inverse = None  # exercise the iterative root finder
        rt = roundtrip_residual(prof, grid)
        summ[f"roundtrip_1-s^{k}"] = rt
        ok &= rt <= 1e-10
    s = np.linspace(0.0, 1.0, n)
    prof = CollarProfile.polynomial(2)
    sq = float(np.max(np.abs(solve_phi(prof, s, closed_form=False) - np.sqrt(s))))
    summ["sqrt_error"] = sq
    ok &= sq <= 1e-12
    return CheckResult("", bool(ok), summ)


@_timed("extension-exactness")
def extension_exactness(n_profile: int = 41) -> CheckResult:
    rows, profile, ok = [], [], True
    _, fam = _smoothed_annulus()
    for H in (polynomial_collar_model(1), fam.H_eps):
        ext = build_extension(H)
        grid = H.chart.boundary_grid(32, 4)
        c = ext.params
        lin = max(linear_residual(ext, t, grid["b"], 1 + c.delta1 + np.array([0.0, 1e-3, 0.1, 1.0, 10.0]))
                  for t in grid["t"])
        jump = ext.c1_report
        good = lin == 0.0 and jump["derivative_jump"] <= 1e-6 and jump["value_jump"] <= 1e-6
        ok &= good
        rows.append({"model": H.name, "C0": c.C0, "C1": c.C1, "delta1": c.delta1, "linear_residual": lin,
                     "value_jump": jump["value_jump"], "derivative_jump": jump["derivative_jump"], "ok": good})
        b0 = ext.base.boundary_point(grid["b"][:1])
        for r in np.linspace(max(0.5, H.chart.r_range[0]), 1 + 3 * c.delta1, n_profile):
            x = _with_r(b0, r)
            profile.append({"model": H.name, "r": r, "Hhat": float(ext(0.0, x)[0]),
                            "linear": c.C0 + (r - 1.0) * c.C1, "rho": float(ext.rho(np.array([r]))[0])})
    return CheckResult("", bool(ok), {"models": len(rows)}, {"extension": rows, "profile": profile})


@_timed("action-growth")
def action_growth(N: int = 100, T_range=(1.0, 50.0), seed: int = 0, tol: float = 1e-8) -> CheckResult:
    _, fam = _smoothed_annulus()
    ext, zc = admissible_extension(fam.H_eps)
    rep = verify_action_growth(ext, N=N, T_range=T_range, seed=seed, tol=tol)
    c = ext.params
    zone3 = []
    for j in (1, 2, 3):
        T = 2 * np.pi * j / c.C1
        zone3.append(zone3_orbit_action(ext, 1 + 2 * c.delta1, [0.3], T))
    z3 = max(z["error"] for z in zone3)
    ok = rep["passes"] and z3 <= 1e-8 and rep["escaped"] == 0
    summ = {"c": rep["c"], "d": rep["d"], "slope_fit": rep["slope_fit"], "samples": len(rep["samples"]),
            "escaped": rep["escaped"], "zone3_error": z3, "delta1": c.delta1, "C0": c.C0, "C1": c.C1,
            **{k: v for k, v in zc.items() if k in ("c1", "c2", "c3")}}
    return CheckResult("", bool(ok), summ, {"action_samples": rep["samples"]})


@_timed("smoothing")
def smoothing(eps_list=(1 / 5, 1 / 7, 1 / 11, 1 / 101), compact: float = 0.99) -> CheckResult:
    m = AnnulusTwistModel(0.1)
    u = np.linspace(-compact, compact, 401)
    q = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pts = np.array([(a, b) for a in u for b in q])
    rows = smoothing_table(m.E, m.profile, eps_list, symmetric=True, interior_points=pts)
    H = nondegenerate_hamiltonian(m.E, m.profile, symmetric=True)
    conv = verify_convergence([build_family(m.E, m.profile, e, symmetric=True) for e in eps_list], H, pts)
    slope_ok = all(r["slope_ok"] for r in rows)
    quant_ok = all(r["quantitative"] for r in rows if r["eps"] <= 1 / 11 + 1e-15)
    ok = slope_ok and quant_ok and conv["monotone"]
    return CheckResult("", bool(ok), {"slope_ok": slope_ok, "quantitative_ok": quant_ok,
                                      "monotone": conv["monotone"]}, {"smoothing": rows})


@_timed("index-suite")
def index_suite(n_points: int = 1000, k_max: int = 10, seed: int = 0,
                arcs=(0.5, 1.5, 2.5, 3.5, 4.5, 5.5)) -> CheckResult:
    rng = np.random.default_rng(seed)
    ext = build_extension(polynomial_collar_model(1))
    worst = {"L0": 0.0, "L1": 0.0, "L1_identity": 0.0, "reconstruction": 0.0}
    for _ in range(n_points):
        p = np.array([rng.uniform(0.5, 1.3), *rng.uniform(-1, 1, 2), rng.uniform(0, 2 * np.pi)])
        res = block_decompose(ext, p, t=float(rng.uniform()), check_fd=len(worst) > 0).residuals()
        for k in worst:
            worst[k] = max(worst[k], res[k])
    rot = [{"k": k, "mu_RS": rs_index(rotation_path(k, steps=40 * k + 1))} for k in range(1, k_max + 1)]
    rot_ok = all(r["mu_RS"] == 2 * r["k"] for r in rot)
    sys0 = KatokSystem(3, (0.0,))
    growth = verify_index_growth(katok_reeb_arcs(sys0, sample_sigma(sys0, 1, rng)[0]), arcs)
    sp_ok = worst["L0"] <= 1e-8 and worst["L1"] <= 1e-8
    ok = sp_ok and rot_ok and growth["passes"] and worst["reconstruction"] <= 1e-5
    return CheckResult("", bool(ok), {**{f"max_{k}": v for k, v in worst.items()}, "rotation_ok": rot_ok,
                                      "growth_slope": growth["fit"]["c"], "growth_intercept": growth["fit"]["d"]},
                       {"rotation": rot, "index_growth": growth["rows"]})


@_timed("billiard")
def billiard(grid: int = 64, tables=({"kind": "circle"}, {"kind": "ellipse", "a": 2.0, "b": 1.0})) -> CheckResult:
    circ = CircleTable(1.0)
    th = np.linspace(0.05, np.pi - 0.05, 40)
    adv = 0.0
    for a in th:
        for phi in (0.0, 1.0, 4.0):
            t1, p1 = billiard_map(circ, a, phi)
            d = (p1 - phi - 2 * a + np.pi) % (2 * np.pi) - np.pi
            adv = max(adv, abs(d), abs(t1 - a))
    rows, area_ok = [], True
    for cfg in tables:
        tab = make_table(cfg)
        rep = billiard_form_check(tab, grid)
        area_ok &= rep["max_det_error"] <= 1e-6
        rows.append({"table": cfg.get("kind"), "max_det_error": rep["max_det_error"], "points": rep["n"]})
    tangent = 0.0
    for cfg in tables:
        tab = make_table(cfg)
        for phi in np.linspace(0, tab.length, 7, endpoint=False):
            for a in (0.0, np.pi):
                t1, p1 = billiard_map(tab, a, phi)
                tangent = max(tangent, abs(t1 - a), abs(p1 - phi))
    ok = adv <= 1e-9 and area_ok and tangent == 0.0
    return CheckResult("", bool(ok), {"circle_advance_error": adv, "area_ok": area_ok,
                                      "tangent_displacement": tangent}, {"billiard_area": rows})


@_timed("orbit-survey")
def orbit_survey(primes=(5, 7, 11), kappa: float = 0.1) -> CheckResult:
    ann = AnnulusTwistModel(kappa)
    rows = prime_iterate_survey(ann, primes)
    kat = KatokPageMap(KatokSystem())
    krows = prime_iterate_survey(kat, primes)
    ann_ok = all(r["new_orbits"] >= 1 and r["max_verified_residual"] <= 1e-8 for r in rows)
    kat_ok = all(r["new_orbits"] == 0 for r in krows)
    table = [{"model": "annulus", **{k: v for k, v in r.items() if k not in ("records", "actions")}} for r in rows]
    table += [{"model": "katok", **{k: v for k, v in r.items() if k not in ("records", "actions")}} for r in krows]
    orbits = [{"model": "annulus", **rec.to_row()} for r in rows for rec in r["records"]]
    return CheckResult("", bool(ann_ok and kat_ok), {"annulus_ok": ann_ok, "katok_ok": kat_ok,
                                                     "annulus_counts": [r["new_orbits"] for r in rows]},
                       {"survey": table, "orbits": orbits})


@_timed("chords")
def chords(orders=(3, 5, 7), kappa: float = 0.1) -> CheckResult:
    ann = AnnulusTwistModel(kappa)
    L = FiberLagrangian()
    rows, ok = [], True
    for m in orders:
        recs = find_chords(ann, L, m)
        ok &= bool(recs) and all(r.residual <= 1e-8 and (r.verified_residual or 0.0) <= 1e-8 for r in recs)
        rows += [r.to_row() for r in recs]
    return CheckResult("", bool(ok), {"chords": len(rows)}, {"chords": rows})


@_timed("symplecticity")
def symplecticity(tol: float = 1e-10, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    ann = AnnulusTwistModel(0.1)
    _, fam = _smoothed_annulus()
    hat = build_extension(fam.H_eps)
    models = [
        ("annulus", ann.E, lambda: np.array([rng.uniform(-0.9, 0.9), rng.uniform(0, 2 * np.pi)])),
        ("collar-k1", polynomial_collar_model(1, autonomous=True),
         lambda: np.array([rng.uniform(0.6, 0.95), *rng.uniform(-1, 1, 2), rng.uniform(0, 2 * np.pi)])),
        ("annulus-hat", hat, lambda: np.array([rng.uniform(0.2, 1.3), rng.uniform(0, 2 * np.pi)])),
    ]
    rows, ok = [], True
    for name, H, draw in models:
        for _ in range(3):
            x0 = draw()
            sr = flow_symplecticity_residual(H, x0, 1.0, tol=tol, rng=rng)
            T = 1.0
            traj = integrate_flow(H, x0, T, tol=tol)
            drift = energy_drift(H, traj)
            good = sr <= 1e-5 and drift <= 100 * tol * T
            ok &= good
            rows.append({"model": name, "x0": " ".join(f"{v:.6g}" for v in x0), "symplectic_residual": sr,
                         "energy_drift": drift, "drift_bound": 100 * tol * T, "ok": good})
    return CheckResult("", bool(ok), {"max_symplectic_residual": max(r["symplectic_residual"] for r in rows),
                                      "max_energy_drift": max(r["energy_drift"] for r in rows)},
                       {"symplecticity": rows})


ACCEPTANCE = [katok_values, katok_fixed_points, degeneration_roundtrip, extension_exactness, action_growth,
              smoothing, index_suite, billiard, orbit_survey, symplecticity]
