"""One test per acceptance criterion, each at its stated tolerance and runtime budget."""
import pytest

from twistlab import suite


def check(report, number, fn, budget, **kw):
    res = fn(**kw)
    ok = res.passes and res.runtime < budget
    report(number, res.name, ok, res.runtime, budget, _brief(res.summary))
    assert res.passes, res.summary
    assert res.runtime < budget, f"runtime {res.runtime:.1f} s exceeds {budget} s"
    return res


def _brief(summary):
    keep = {k: v for k, v in summary.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}
    return " ".join(f"{k}={v:.3g}" for k, v in list(keep.items())[:4])


def test_criterion_01_katok_twist_values(report):
    res = check(report, 1, suite.katok_values, 1.0)
    assert abs(res.summary["K_p1"] - 1 / 11) <= 1e-10
    assert abs(res.summary["K_p2"] + 1 / 9) <= 1e-10


def test_criterion_02_katok_fixed_points(report):
    res = check(report, 2, suite.katok_fixed_points, 60.0)
    assert res.summary["count"] == 2
    assert max(res.summary["error_p0"], res.summary["error_q0"]) <= 1e-8


def test_criterion_03_degeneration_roundtrip(report):
    res = check(report, 3, suite.degeneration_roundtrip, 1.0)
    assert res.summary["roundtrip_1-s^2"] <= 1e-10 and res.summary["roundtrip_1-s^3"] <= 1e-10
    assert res.summary["sqrt_error"] <= 1e-12


def test_criterion_04_extension_exactness(report):
    res = check(report, 4, suite.extension_exactness, 1.0)
    for row in res.tables["extension"]:
        assert row["linear_residual"] == 0.0
        assert row["derivative_jump"] <= 1e-6


@pytest.mark.slow
def test_criterion_05_action_growth(report):
    res = check(report, 5, suite.action_growth, 120.0)
    s = res.summary
    assert s["samples"] == 100 and s["escaped"] == 0
    assert s["slope_fit"] <= -s["c"] + 1e-3
    assert s["zone3_error"] <= 1e-8
    assert all(r["action"] <= r["bound"] + 1e-6 for r in res.tables["action_samples"])


def test_criterion_06_smoothing(report):
    res = check(report, 6, suite.smoothing, 60.0)
    rows = res.tables["smoothing"]
    assert all(r["min_h"] >= r["bound"] * (1 - 1e-9) for r in rows)
    diffs = [r["sup_difference"] for r in rows]
    assert all(b <= a for a, b in zip(diffs, diffs[1:]))


@pytest.mark.slow
def test_criterion_07_index_suite(report):
    res = check(report, 7, suite.index_suite, 120.0)
    s = res.summary
    assert s["max_L0"] <= 1e-8 and s["max_L1"] <= 1e-8
    assert all(r["mu_RS"] == 2 * r["k"] for r in res.tables["rotation"])
    assert s["growth_slope"] > 0


def test_criterion_08_billiard(report):
    res = check(report, 8, suite.billiard, 30.0)
    assert res.summary["circle_advance_error"] <= 1e-9
    assert all(r["max_det_error"] <= 1e-6 and r["points"] == 64 * 64 for r in res.tables["billiard_area"])
    assert res.summary["tangent_displacement"] == 0.0


@pytest.mark.slow
def test_criterion_09_orbit_survey(report):
    res = check(report, 9, suite.orbit_survey, 300.0)
    rows = {(r["model"], r["prime"]): r for r in res.tables["survey"]}
    for p in (5, 7, 11):
        assert rows["annulus", p]["new_orbits"] >= 1
        assert rows["annulus", p]["max_verified_residual"] <= 1e-8
        assert rows["katok", p]["new_orbits"] == 0


def test_criterion_10_symplecticity(report):
    res = check(report, 10, suite.symplecticity, 60.0)
    rows = res.tables["symplecticity"]
    assert all(r["symplectic_residual"] <= 1e-5 for r in rows)
    assert all(r["energy_drift"] <= r["drift_bound"] for r in rows)
