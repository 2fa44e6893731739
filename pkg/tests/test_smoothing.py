import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from twistlab.errors import TwistFails
from twistlab.geometry import CollarProfile, solve_phi
from twistlab.hamflow import CollarChart, HamiltonianModel
from twistlab.smoothing import (TruncatedProfile, build_family, nondegenerate_hamiltonian, slope_lower_bound,
                                smoothing_table, sup_difference, verify_convergence)

EPS = [1 / 5, 1 / 7, 1 / 11, 1 / 101]


@pytest.mark.parametrize("eps", EPS)
@pytest.mark.parametrize("k", [2, 3])
def test_truncation_preserves_mass(eps, k):
    tp = TruncatedProfile(CollarProfile.polynomial(k), eps)
    assert tp.g(0.0) == pytest.approx(1 / eps, rel=1e-12)
    mass, _ = quad(lambda x: float(tp.g(x)), 0, eps, limit=200)
    assert mass == pytest.approx(tp.phi_at_eps, rel=1e-9)
    x = np.linspace(0, eps, 200)
    assert np.all(np.diff(tp.g(x)) <= 1e-12)


@settings(max_examples=50, deadline=None)
@given(eps=st.sampled_from(EPS), x=st.floats(0.0, 1.0))
def test_phi_eps_agrees_beyond_eps(eps, x):
    prof = CollarProfile.polynomial(2)
    tp = TruncatedProfile(prof, eps)
    if x >= eps:
        assert tp.phi(x) == pytest.approx(solve_phi(prof, x), abs=1e-14)
    else:
        assert 0.0 <= tp.phi(x) <= tp.phi_at_eps + 1e-14
        assert tp.phi(min(x + 1e-3, eps)) >= tp.phi(x)


def test_family_equals_limit_away_from_boundary(annulus):
    H = nondegenerate_hamiltonian(annulus.E, annulus.profile, symmetric=True)
    u = np.linspace(-0.79, 0.79, 61)
    pts = np.array([(a, q) for a in u for q in np.linspace(0, 6, 7)])
    for eps in EPS:
        fam = build_family(annulus.E, annulus.profile, eps, symmetric=True)
        assert sup_difference(fam, H, pts) == 0.0


def test_boundary_slope_scales_like_inverse_eps(annulus):
    for eps in EPS:
        fam = build_family(annulus.E, annulus.profile, eps, symmetric=True)
        rep = slope_lower_bound(fam)
        assert rep["C"] == pytest.approx(2.0, abs=1e-12)
        assert rep["passes"] and rep["min_h"] == pytest.approx(2.0 / eps, rel=1e-9)


def test_convergence_monotone_near_boundary(annulus):
    H = nondegenerate_hamiltonian(annulus.E, annulus.profile, symmetric=True)
    u = np.linspace(-0.99, 0.99, 801)
    pts = np.array([(a, q) for a in u for q in np.linspace(0, 6, 5)])
    rep = verify_convergence([build_family(annulus.E, annulus.profile, e, symmetric=True) for e in EPS], H, pts)
    assert rep["monotone"]
    assert rep["sup_difference"][0] > rep["sup_difference"][-1]


def test_family_gradient(annulus_family, rng):
    from twistlab.hamflow import fd_gradient
    H = annulus_family.H_eps
    for _ in range(10):
        x = np.array([rng.uniform(-0.99, 0.99), rng.uniform(0, 6)])
        assert np.allclose(H.gradient(0.0, x), fd_gradient(H, 0.0, x), rtol=1e-6, atol=1e-6)


def test_table_columns(annulus):
    rows = smoothing_table(annulus.E, annulus.profile, [0.2, 0.1], symmetric=True)
    assert [r["eps"] for r in rows] == [0.2, 0.1]
    assert all(r["slope_ok"] and r["quantitative"] for r in rows)


def test_twist_required():
    chart = CollarChart(0, r_range=(0.0, 1.0))
    E = HamiltonianModel(lambda t, x: -x[..., 0], chart, autonomous=True)
    with pytest.raises(TwistFails):
        build_family(E, CollarProfile.polynomial(2), 0.1)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_eps_range(eps):
    with pytest.raises(ValueError):
        TruncatedProfile(CollarProfile.polynomial(2), eps)
