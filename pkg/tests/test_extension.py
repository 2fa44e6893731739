import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.errors import BadConstants, QuantitativeTwistFails
from twistlab.extension import (Cutoff, ExtensionParams, _with_r, boundary_ranges, build_extension, c1_jump,
                                choose_constants, linear_residual, validate_params)
from twistlab.hamflow import CollarChart, HamiltonianModel, fd_gradient
from twistlab.models.collar import polynomial_collar_model


@pytest.fixture(scope="module")
def poly_hat():
    return build_extension(polynomial_collar_model(1))


def test_annulus_constants(annulus_hat):
    # frozen values of the quantitative construction for kappa = 0.1, eps = 0.1
    c = annulus_hat.params
    assert (c.C0, c.C1, c.delta1) == (11.5, 21.0, 0.1)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(1.1, 50.0), b=st.floats(-1, 1), z=st.floats(0, 6.3), t=st.floats(0, 1))
def test_exactly_linear_beyond_collar(poly_hat, r, b, z, t):
    c = poly_hat.params
    x = np.array([[r, b, -b / 2, z]])
    assert poly_hat(t, x)[0] == c.C0 + (r - 1.0) * c.C1


def test_equals_base_inside(poly_hat, rng):
    x = np.column_stack([rng.uniform(0.2, 1.0, 50), rng.uniform(-1, 1, (50, 2)), rng.uniform(0, 6, 50)])
    assert np.array_equal(poly_hat(0.3, x), poly_hat.base(0.3, x))


def test_c1_matching(poly_hat, annulus_hat):
    for ext in (poly_hat, annulus_hat):
        jump = c1_jump(ext, 0.0, ext.base.chart.boundary_grid(16, 2)["b"])
        assert jump["value_jump"] <= 1e-12 and jump["derivative_jump"] <= 1e-6


def test_gradient_matches_finite_differences(poly_hat, rng):
    for _ in range(20):
        x = np.array([rng.uniform(1.0, 1.12), *rng.uniform(-1, 1, 2), rng.uniform(0, 6)])
        t = float(rng.uniform())
        g = poly_hat.gradient(t, x)
        assert np.allclose(g, fd_gradient(poly_hat, t, x), rtol=1e-5, atol=1e-5)


def test_value_and_gradient_consistent(annulus_hat, rng):
    x = np.column_stack([rng.uniform(0.5, 1.2, 40), rng.uniform(0, 6, 40)])
    v, g = annulus_hat.value_and_gradient(0.0, x)
    assert np.array_equal(v, annulus_hat(0.0, x))
    assert np.array_equal(g, annulus_hat.gradient(0.0, x))


def test_pieces_reassemble(poly_hat, rng):
    x = np.column_stack([rng.uniform(1.0, 1.1, 30), rng.uniform(-1, 1, (30, 2)), rng.uniform(0, 6, 30)])
    H0, H1, RR = poly_hat.pieces(0.0, x)
    d = x[:, 0] - 1
    c = poly_hat.params
    rho = poly_hat.rho(x[:, 0])
    lin = c.C0 + d * c.C1
    assert np.allclose(H0 + d * H1 + 0.5 * d**2 * RR, poly_hat(0.0, x), atol=1e-9)
    assert np.all((rho >= 0) & (rho <= 1))
    assert np.allclose(poly_hat(0.0, x)[rho == 0], lin[rho == 0])


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.0, 3.0))
def test_cutoff_is_a_monotone_step(r):
    rho = Cutoff(0.1)
    v, dv = float(rho(np.array([r]))[0]), float(rho.derivative(np.array([r]))[0])
    assert 0.0 <= v <= 1.0 and dv <= 0.0
    if r <= 1 + 0.1 / 3:
        assert v == 1.0
    if r >= 1.1:
        assert v == 0.0


def test_choose_constants_inequalities(poly_hat):
    H = poly_hat.base
    grid = H.chart.boundary_grid()
    rng = boundary_ranges(H, grid)
    c = choose_constants(H, "quantitative", grid)
    validate_params(c, rng)
    assert rng["max_H0"] < c.C0 < c.C1 < c.C0 + rng["min_gap"]
    plain = choose_constants(H, "plain", grid)
    validate_params(plain, rng)


def test_constants_avoid_reeb_spectrum():
    chart = CollarChart(0, r_range=(0.0, 1.0))
    # boundary values H0 = 1, H1 = 2 pi + 2 put C1 exactly on the period 2 pi without the shift
    H = HamiltonianModel(lambda t, x: 1.0 + (x[..., 0] - 1) * (2 * np.pi + 2), chart,
                         reeb_periods=[2 * np.pi], autonomous=True)
    c = choose_constants(H, "plain")
    assert abs(c.C1 - 2 * np.pi * round(c.C1 / (2 * np.pi))) > 1e-9


def test_bad_constants_rejected(poly_hat):
    rng = boundary_ranges(poly_hat.base, poly_hat.base.chart.boundary_grid())
    with pytest.raises(BadConstants):
        validate_params(ExtensionParams(rng["max_H0"] - 1.0, 10.0), rng)
    with pytest.raises(BadConstants):
        validate_params(ExtensionParams(rng["max_H0"] + 0.1, rng["max_H0"] + 0.05, quantitative=True), rng)


def test_quantitative_twist_failure():
    chart = CollarChart(0, r_range=(0.0, 1.0))
    H = HamiltonianModel(lambda t, x: 5.0 + 0.5 * (x[..., 0] - 1), chart, autonomous=True)
    with pytest.raises(QuantitativeTwistFails):
        choose_constants(H, "quantitative")


def test_linear_residual_report(poly_hat):
    b = poly_hat.base.chart.boundary_grid(8, 1)["b"]
    assert linear_residual(poly_hat, 0.0, b, [1.1, 2.0, 100.0]) == 0.0
    x = _with_r(poly_hat.base.boundary_point(b), 1.05)
    assert poly_hat(0.0, x).shape == (len(b),)
