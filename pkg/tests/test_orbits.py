import numpy as np
import pytest

from twistlab.orbits import (FiberLagrangian, divisors, find_chords, find_periodic_points, newton_periodic,
                             prime_iterate_survey)

TWO_PI = 2 * np.pi


class StandardMap:
    """Chirikov map ``p' = p + K sin q``, ``q' = q + p'`` on ``|p| < 1``."""

    dim = 2

    def __init__(self, K=0.5):
        self.K = K

    def iterate(self, x, k=1, tol=None):
        y = np.array(x, float, copy=True)
        for _ in range(k):
            p = y[..., 0] + self.K * np.sin(y[..., 1])
            y[..., 0], y[..., 1] = p, np.mod(y[..., 1] + p, TWO_PI)
        return y

    def difference(self, y, x):
        d = np.asarray(y, float) - np.asarray(x, float)
        d[..., 1] = (d[..., 1] + np.pi) % TWO_PI - np.pi
        return d

    def wrap(self, x):
        y = np.array(x, float, copy=True)
        y[..., 1] = np.mod(y[..., 1], TWO_PI)
        return y

    def in_interior(self, x):
        return np.abs(np.asarray(x)[..., 0]) < 1.0

    def seeds(self, k):
        p, q = np.meshgrid(np.linspace(-0.5, 0.5, 5), np.linspace(0, TWO_PI, 12, endpoint=False))
        return np.column_stack([p.ravel(), q.ravel()])


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6]
    assert divisors(7) == [1]
    assert divisors(1) == []


def test_standard_map_fixed_points():
    m = StandardMap()
    recs = find_periodic_points(m, 1)
    assert len(recs) == 2
    for ref in ([0.0, 0.0], [0.0, np.pi]):
        assert min(np.linalg.norm(m.difference(r.point, np.array(ref))) for r in recs) <= 1e-9
    assert all(not r.degenerate and r.minimal and r.residual <= 1e-10 for r in recs)


def test_fixed_points_are_not_minimal_in_period_two():
    m = StandardMap()
    recs = find_periodic_points(m, 2, seeds=np.array([[1e-3, 1e-3], [0.0, np.pi + 1e-3]]))
    assert recs and all(not r.minimal for r in recs)
    rows = prime_iterate_survey(m, [2], seeds=np.array([[1e-3, 1e-3]]))
    assert rows[0]["new_orbits"] == 0 and rows[0]["non_minimal"] == 1


def test_newton_converges_quadratically_from_nearby_seed():
    X, res, ok, srel = newton_periodic(StandardMap(), np.array([[0.05, np.pi - 0.05]]), 1, tol=1e-13)
    assert ok[0] and res[0] <= 1e-13 and srel[0] > 1e-3


def test_annulus_families_are_degenerate(annulus):
    recs = find_periodic_points(annulus, 5)
    assert recs and all(r.degenerate and r.family is not None for r in recs)
    keys = [r.family["key"] for r in recs]
    assert len(set((k[0], round(k[1], 6)) for k in keys)) == len(keys)
    for r in recs[:3]:
        y = annulus.iterate(r.point, 5, tol=1e-13)
        assert np.linalg.norm(annulus.difference(y, r.point)) <= 1e-8


def test_survey_action_bound(annulus):
    rows = prime_iterate_survey(annulus, [3], action_bound=(9.5, 0.0))
    row = rows[0]
    assert row["new_orbits"] >= 1 and row["collar_bound"] == -28.5
    assert row["above_collar_bound"] == row["new_orbits"]


def test_fibre_geometry():
    L = FiberLagrangian(values=(0.0, 2.0, 4.0))
    x = np.array([[0.1, 2.0 + 1e-3], [0.2, 6.2]])
    assert np.allclose(L.distance(x), [1e-3, TWO_PI - 6.2])
    assert np.allclose(L.component(x), [2.0, 0.0])
    assert np.allclose(L.offsets(x)[0], [2.001, 6.2 - TWO_PI])


def test_standard_map_chords():
    # from (p, 0) and (p, pi) the first iterate lands on a fibre only for p = 0
    chords = find_chords(StandardMap(), FiberLagrangian(radial_range=(-0.5, 0.5)), 1, n_grid=101)
    assert len(chords) == 2
    assert all(abs(c.start[0]) <= 1e-12 and c.periodic and c.period == 1 for c in chords)


def test_chords_odd_fibre_count(annulus):
    L = FiberLagrangian(values=(0.0, 2.0, 4.0))
    chords = find_chords(annulus, L, 1, n_grid=256)
    assert chords
    for c in chords:
        assert c.residual <= 1e-8
        assert c.end_component in L.values


def test_invalid_orders():
    with pytest.raises(ValueError):
        find_chords(StandardMap(), FiberLagrangian(), 0)
    with pytest.raises(ValueError):
        find_periodic_points(StandardMap(), 0)
