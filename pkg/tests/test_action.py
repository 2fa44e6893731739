import numpy as np
import pytest

from twistlab.action import (compute_action, verify_action_growth, zone2_interval, zone3_orbit_action,
                             zone_classify, zone_constants)
from twistlab.hamflow import integrate_flow


def test_zone_constants_frozen(annulus_hat):
    zc = zone_constants(annulus_hat)
    assert zc["c1"] == pytest.approx(19.0, abs=1e-9)
    assert zc["c3"] == pytest.approx(9.5, abs=1e-12)
    assert zc["c"] == pytest.approx(9.5, abs=1e-12)
    assert zc["c2"] >= zc["c3"]


@pytest.mark.parametrize("j", [1, 2, 5])
def test_zone3_closed_orbits(annulus_hat, j):
    T = 2 * np.pi * j / annulus_hat.params.C1
    rep = zone3_orbit_action(annulus_hat, 1.3, [0.7], T)
    assert rep["error"] <= 1e-8


def test_zone3_orbit_closes(annulus_hat):
    T = 2 * np.pi / annulus_hat.params.C1
    tr = integrate_flow(annulus_hat, np.array([1.4, 0.7]), T, tol=1e-12)
    d = tr.points[-1] - tr.points[0]
    assert abs(d[0]) <= 1e-12 and abs((d[1] + np.pi) % (2 * np.pi) - np.pi) <= 1e-9


def test_zones_partition_collar(annulus_hat):
    p = annulus_hat.params
    r = np.linspace(1.0, 1.3, 301)
    z = zone_classify(p, r)
    assert set(np.unique(z)) <= {1, 2, 3}
    assert np.all(np.diff(z) >= 0)
    r2 = zone2_interval(p)
    assert r2.min() > 1 + p.delta0 and r2.max() < 1 + p.delta1


def test_action_bound_small_sample(annulus_hat):
    rep = verify_action_growth(annulus_hat, N=6, T_range=(1.0, 5.0), seed=3, tol=1e-8, n_short=4)
    assert rep["passes"] and rep["escaped"] == 0
    assert all(r["action"] <= r["bound"] + 1e-6 for r in rep["samples"])


def test_action_is_quadrature_of_integrand(annulus_hat):
    tr = integrate_flow(annulus_hat, np.array([1.05, 0.1]), 0.5, tol=1e-11, quadrature=annulus_hat)
    rep = compute_action(annulus_hat, tr)
    assert rep.action == pytest.approx(-tr.quadrature["lambda"] + tr.quadrature["hamiltonian"], abs=1e-12)


def test_rejects_empty_sample(annulus_hat):
    with pytest.raises(ValueError):
        verify_action_growth(annulus_hat, N=0)
