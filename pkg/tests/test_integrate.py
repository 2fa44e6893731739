import numpy as np
import pytest

from twistlab.errors import BlowUp, EscapedDomain
from twistlab.integrate import dopri5, flow_map


def test_exponential_growth():
    sol = dopri5(lambda t, y: y, 0.0, np.array([1.0]), 3.0, tol=1e-12)
    assert abs(sol.y[-1, 0] - np.exp(3.0)) <= 1e-9 * np.exp(3.0)
    assert sol.t[-1] == 3.0 and sol.stats.steps == len(sol.t) - 1


def test_backward_integration():
    y = flow_map(lambda t, y: -2 * y, np.array([1.0]), 1.0, 0.0, tol=1e-12)
    assert y[0] == pytest.approx(np.exp(2.0), rel=1e-10)


def test_batched_oscillators_share_steps():
    w = np.array([1.0, 2.0, 3.0])

    def f(t, y):
        return np.stack([y[:, 1], -w**2 * y[:, 0]], axis=1)

    y0 = np.stack([np.ones(3), np.zeros(3)], axis=1)
    y = flow_map(f, y0, 0.0, 2.0, tol=1e-12)
    assert np.allclose(y[:, 0], np.cos(2 * w), atol=1e-9)
    assert np.allclose(y[:, 1], -w * np.sin(2 * w), atol=1e-8)


def test_absolute_mask_tightens_angles():
    # a fast angle: the relative scale would loosen its tolerance by |y|
    def f(t, y):
        return np.array([100.0 + np.cos(y[0]), 0.0])

    loose = dopri5(f, 0.0, np.array([0.0, 0.0]), 10.0, tol=1e-8, record=False)
    tight = dopri5(f, 0.0, np.array([0.0, 0.0]), 10.0, tol=1e-8, record=False, absolute=np.array([True, False]))
    assert tight.stats.steps >= loose.stats.steps


def test_blow_up():
    with pytest.raises(BlowUp), np.errstate(over="ignore", invalid="ignore"):
        dopri5(lambda t, y: y**2, 0.0, np.array([1.0]), 2.0, tol=1e-10)


def test_escape_detection():
    with pytest.raises(EscapedDomain):
        dopri5(lambda t, y: np.ones_like(y), 0.0, np.array([0.0]), 2.0, in_domain=lambda y: y < 1.0)
    sol = dopri5(lambda t, y: np.ones_like(y), 0.0, np.array([0.0]), 2.0, in_domain=lambda y: y < 1.0,
                 stop_outside=True)
    assert sol.status == "escaped" and sol.y[-1, 0] < 1.0
