import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.hamflow import (CollarChart, HamiltonianModel, contraction_residual, energy_drift,
                              flow_symplecticity_residual, integrate_flow, integrate_flow_batch,
                              split_vector_field, vector_field_jacobian)
from twistlab.models.collar import polynomial_collar_model

coords = st.floats(-1.0, 1.0)


def d_lambda(chart, x, h=1e-6):
    n = x.size
    D = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        D[i] = (chart.liouville_form(x + e) - chart.liouville_form(x - e)) / (2 * h)
    return D.T - D  # (d lambda)_{ij} = d_i lambda_j - d_j lambda_i


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.2, 2.0), a=coords, b=coords, c=coords, d=coords, z=st.floats(0, 6.3))
def test_omega_is_d_lambda(r, a, b, c, d, z):
    chart = CollarChart(2)
    x = np.array([r, a, b, c, d, z])
    O = chart.omega_matrix(x)
    assert np.allclose(O, -O.T)
    assert np.allclose(O, d_lambda(chart, x).T, atol=1e-8) or np.allclose(O, d_lambda(chart, x), atol=1e-8)
    assert abs(np.linalg.det(O)) > 1e-12


@settings(max_examples=30, deadline=None)
@given(r=st.floats(0.3, 0.99), a=coords, b=coords, z=st.floats(0, 6.3), t=st.floats(0, 1))
def test_vector_field_contracts_to_minus_dH(r, a, b, z, t):
    H = polynomial_collar_model(1)
    x = np.array([r, a, b, z])
    assert contraction_residual(H, t, x) <= 1e-10
    split = split_vector_field(H, t, x)
    assert np.allclose(split.reconstruct(H.chart, x), H.vector_field(t, x), atol=1e-10)


def test_linear_hamiltonian_is_reeb_rotation():
    chart = CollarChart(0, r_range=(0.0, 5.0))
    H = HamiltonianModel(lambda t, x: 3.0 * x[..., 0], chart, autonomous=True)
    tr = integrate_flow(H, np.array([1.5, 0.2]), 2.0, tol=1e-12)
    assert tr.points[-1, 0] == pytest.approx(1.5, abs=1e-12)
    assert abs(abs(tr.points[-1, 1] - 0.2) - 6.0) <= 1e-9


def test_batch_matches_single_trajectories(annulus):
    rng = np.random.default_rng(3)
    X0 = np.column_stack([rng.uniform(-0.9, 0.9, 5), rng.uniform(0, 2 * np.pi, 5)])
    T = rng.uniform(0.5, 3.0, 5)
    res = integrate_flow_batch(annulus.E, X0, T, tol=1e-12)
    for x0, t, end in zip(X0, T, res["points"]):
        ref = integrate_flow(annulus.E, x0, t, tol=1e-12).points[-1]
        assert np.allclose(end, ref, atol=1e-9)


def test_batch_rejects_time_dependent():
    with pytest.raises(ValueError):
        integrate_flow_batch(polynomial_collar_model(1), np.array([[0.5, 0, 0, 0]]), 1.0)


def test_energy_conserved(annulus):
    tr = integrate_flow(annulus.E, np.array([0.5, 1.0]), 10.0, tol=1e-11)
    assert energy_drift(annulus.E, tr) <= 100 * 1e-11 * 10


def test_vector_field_jacobian_is_hamiltonian(annulus):
    x = np.array([0.4, 2.0])
    D = vector_field_jacobian(annulus.H, 0.0, x)
    # the linearised field of an area-preserving flow has zero trace in a flat chart
    assert abs(np.trace(D)) <= 1e-8 * (1 + np.abs(D).max())


@pytest.mark.parametrize("method", ["variational", "fd"])
def test_time_one_map_symplectic(method):
    H = polynomial_collar_model(1)
    x0 = np.array([0.7, 0.2, -0.4, 1.0])
    assert flow_symplecticity_residual(H, x0, 1.0, method=method) <= 1e-5


def test_trajectory_csv(tmp_path, annulus):
    tr = integrate_flow(annulus.E, np.array([0.3, 0.0]), 1.0)
    path = tmp_path / "traj.csv"
    tr.to_csv(path, annulus.E)
    head = path.read_text().splitlines()[0]
    assert head == "t,x0,x1,H,r"
