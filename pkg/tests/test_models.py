import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.errors import TangentRay
from twistlab.models.annulus import AnnulusTwistModel, a_of_p, da_of_p
from twistlab.models.billiard import (CircleTable, EllipseTable, FourierTable, billiard_form_check, billiard_map,
                                      billiard_orbit, make_table)
from twistlab.models.katok import (KatokPageMap, KatokSystem, binding_points, katok_fixed_point_scan,
                                   katok_twist_function, p0, q0, variety_residual)
from twistlab.orbits import prime_iterate_survey


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_katok_twist_closed_form(eps):
    sys = KatokSystem(3, (eps,))
    p1, p2 = binding_points(sys)
    assert float(np.real(katok_twist_function(sys, p1))) == pytest.approx(eps / (1 + eps), abs=1e-12)
    assert float(np.real(katok_twist_function(sys, p2))) == pytest.approx(-eps / (1 - eps), abs=1e-12)


def test_katok_fixed_points():
    scan = katok_fixed_point_scan(KatokSystem(3, (0.1 / np.sqrt(2),)), 64)
    pts = [f["w"] for f in scan["points"]]
    assert len(pts) == 2
    for ref in (p0(), q0()):
        assert min(np.linalg.norm(w - ref) for w in pts) <= 1e-8
    assert all(np.linalg.norm(variety_residual(w)) <= 1e-10 for w in pts)


def test_katok_survey_finds_nothing():
    rows = prime_iterate_survey(KatokPageMap(KatokSystem()), [2, 3])
    assert all(r["new_orbits"] == 0 for r in rows)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0.01, np.pi - 0.01), phi=st.floats(0, 2 * np.pi))
def test_circle_advances_by_twice_the_angle(theta, phi):
    t1, p1 = billiard_map(CircleTable(1.0), theta, phi)
    assert abs(t1 - theta) <= 1e-10
    assert abs((p1 - phi - 2 * theta + np.pi) % (2 * np.pi) - np.pi) <= 1e-9


@pytest.mark.parametrize("n", [3, 5, 8])
def test_circle_polygon_orbits_close(n):
    orb = billiard_orbit(CircleTable(2.0), np.pi / n, 0.3, n)
    L = CircleTable(2.0).length
    assert abs((orb[-1, 1] - orb[0, 1] + L / 2) % L - L / 2) <= 1e-9


def test_ellipse_major_axis_two_periodic():
    tab = EllipseTable(2.0, 1.0)
    t1, p1 = billiard_map(tab, np.pi / 2, 0.0)
    t2, p2 = billiard_map(tab, t1, p1)
    assert t1 == pytest.approx(np.pi / 2, abs=1e-9)
    assert p1 == pytest.approx(tab.length / 2, abs=1e-9)
    assert abs(p2 % tab.length) <= 1e-9 or abs(p2 - tab.length) <= 1e-9


@pytest.mark.parametrize("cfg", [{"kind": "ellipse", "a": 1.5, "b": 1.0},
                                 {"kind": "fourier", "c0": 1.0, "a": [0.05], "b": [0.0, 0.02]}])
def test_area_preservation(cfg):
    tab = make_table(cfg)
    assert billiard_form_check(tab, 12)["max_det_error"] <= 1e-6


def test_tangent_rays_fixed():
    tab = EllipseTable(2.0, 1.0)
    assert billiard_map(tab, 0.0, 1.3) == (0.0, 1.3)
    with pytest.raises(TangentRay):
        billiard_map(tab, np.pi, 1.3, strict=True)


def test_fourier_table_convex():
    tab = FourierTable(1.0, a=(0.05,), b=(0.0, 0.02))
    assert tab.check_convex() > 0


@settings(max_examples=40, deadline=None)
@given(p=st.floats(-0.999, 0.999))
def test_annulus_profile_derivative(p):
    h = 1e-6
    fd = (a_of_p(min(p + h, 1.0)) - a_of_p(max(p - h, -1.0))) / (min(p + h, 1.0) - max(p - h, -1.0))
    assert float(da_of_p(p)) == pytest.approx(float(fd), rel=1e-5, abs=1e-8)


def test_annulus_level_sets_invariant(annulus):
    x = np.array([0.55, 1.3])
    y = annulus.iterate(x, 3)
    assert annulus.family_key(y)[1] == pytest.approx(annulus.family_key(x)[1], abs=1e-10)
    assert annulus.family_key(y)[0] == 1


def test_unperturbed_resonance():
    m = AnnulusTwistModel(0.0)
    p = m.resonant_p(1, 4)
    x = np.array([p, 0.4])
    y = m.iterate(x, 4)
    assert np.linalg.norm(m.difference(y, x)) <= 1e-9
    assert m.rotation(p) == pytest.approx(2 * np.pi / 4, rel=1e-12)


def test_annulus_boundary_twist(annulus):
    rep = annulus.boundary_report()
    assert rep["passes"] and rep["min_h"] == pytest.approx(2.0, abs=1e-12)
