import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.errors import NonMonotoneProfile, OutOfCollar
from twistlab.geometry import (CollarPoint, CollarProfile, collar_grid, degeneration_map, nondegeneration_map,
                               phi_prime, pullback_form_check, roundtrip_residual, solve_phi)
from twistlab.models.annulus import annulus_profile


def iterative(prof):
    prof = CollarProfile(prof.A, prof.dA, prof.d2A, s_max=prof.s_max, name=prof.name)
    assert prof.inverse is None
    return prof


@pytest.mark.parametrize("k", [2, 3, 4])
def test_closed_form_matches_root_finder(k):
    s = np.linspace(0, 1, 513)
    prof = CollarProfile.polynomial(k)
    assert np.max(np.abs(solve_phi(prof, s) - solve_phi(prof, s, closed_form=False))) <= 1e-13
    assert np.allclose(solve_phi(prof, s), s ** (1 / k), atol=1e-14)


def test_annulus_inverse_solves_profile_equation():
    prof = annulus_profile()
    s = np.linspace(0, 1, 1001)
    phi = solve_phi(prof, s)
    assert np.max(np.abs(prof.A(phi) - (1 - s))) <= 1e-14
    assert np.max(np.abs(phi - solve_phi(iterative(prof), s))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.0, 1.0), k=st.integers(2, 6))
def test_roundtrip_property(s, k):
    prof = iterative(CollarProfile.polynomial(k))
    p = CollarPoint(s, np.array([0.3, -1.2]))
    back = degeneration_map(prof, nondegeneration_map(prof, p))
    assert abs(back.s - s) <= 1e-12
    assert np.array_equal(back.b, p.b)


@settings(max_examples=40, deadline=None)
@given(c2=st.floats(0.2, 1.0), c4=st.floats(0.0, 0.3))
def test_mixed_polynomial_pullback(c2, c4):
    # A = 1 - c2 s^2 - c4 s^4 reaches 1 - s only on part of the collar when c2 + c4 < 1
    prof = CollarProfile.polynomial({2: -c2, 4: -c4})
    top = min(1.0, 1 - float(prof.A(1.0)))
    grid = collar_grid(65, s_max=top)
    assert pullback_form_check(prof, grid)["max_residual"] <= 1e-12


def test_table_profile_roundtrip():
    s = np.linspace(0, 1, 401)
    prof = CollarProfile.table(s, 1 - s**2)
    assert abs(float(prof.dA(0.0))) <= 1e-12
    assert roundtrip_residual(prof, collar_grid(64)) <= 1e-10


def test_sqrt_map_derivative_blows_up():
    prof = CollarProfile.polynomial(2)
    assert np.isinf(phi_prime(prof, 0.0))
    assert phi_prime(prof, 0.25) == pytest.approx(1.0, rel=1e-12)  # 1/(2 sqrt s)


@pytest.mark.parametrize("coeffs", [{2: 1.0}, {3: -1.0, 2: 0.5}])
def test_non_monotone_profiles_rejected(coeffs):
    with pytest.raises(NonMonotoneProfile):
        CollarProfile.polynomial(coeffs)


def test_linear_term_rejected():
    with pytest.raises(NonMonotoneProfile):
        CollarProfile.polynomial(1)


def test_out_of_collar():
    with pytest.raises(OutOfCollar):
        solve_phi(CollarProfile.polynomial(2), 1.5)
    with pytest.raises(OutOfCollar):
        CollarPoint(-0.1)


def test_from_config():
    prof = CollarProfile.from_config({"kind": "polynomial", "coefficients": {"3": -1.0}})
    assert solve_phi(prof, 0.125) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        CollarProfile.from_config({"kind": "spline"})
