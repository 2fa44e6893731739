"""A polynomial-trigonometric Hamiltonian on a collar over the standard contact chart.

Used as a generic, time-dependent test case in any dimension ``2k + 2``:

``H = 1 + c_xy |x|^2 + c_z cos z + (r - 1)(h1 + s sin(z + 2 pi t)) + (r - 1)^2 (1 + q x_1 y_1)``

with ``|x|^2 = sum x_i^2 + y_i^2``.  It satisfies the quantitative twist condition
on the box ``|x_i|, |y_i| <= 1`` for the default coefficients.
"""
from __future__ import annotations

import numpy as np

from ..hamflow import CollarChart, HamiltonianModel


def polynomial_collar_model(k: int = 1, h1: float = 4.0, c_xy: float = 0.1, c_z: float = 0.05,
                            s: float = 0.5, q: float = 0.2, autonomous: bool = False) -> HamiltonianModel:
    chart = CollarChart(k, r_range=(0.0, 1.0), name=f"collar-k{k}")
    omega_t = 0.0 if autonomous else 2 * np.pi

    def parts(t, x):
        r, z = x[..., 0], x[..., -1]
        xs, ys = x[..., 1:1 + k], x[..., 1 + k:1 + 2 * k]
        d = r - 1.0
        return r, z, xs, ys, d

    def func(t, x):
        r, z, xs, ys, d = parts(t, x)
        sq = np.sum(xs**2 + ys**2, axis=-1)
        xy = xs[..., 0] * ys[..., 0] if k else 0.0
        return (1.0 + c_xy * sq + c_z * np.cos(z) + d * (h1 + s * np.sin(z + omega_t * t))
                + d**2 * (1.0 + q * xy))

    def grad(t, x):
        r, z, xs, ys, d = parts(t, x)
        g = np.zeros(np.shape(x))
        xy = xs[..., 0] * ys[..., 0] if k else 0.0
        g[..., 0] = h1 + s * np.sin(z + omega_t * t) + 2 * d * (1.0 + q * xy)
        g[..., 1:1 + k] = 2 * c_xy * xs
        g[..., 1 + k:1 + 2 * k] = 2 * c_xy * ys
        if k:
            g[..., 1] += d**2 * q * ys[..., 0]
            g[..., 1 + k] += d**2 * q * xs[..., 0]
        g[..., -1] = -c_z * np.sin(z) + d * s * np.cos(z + omega_t * t)
        return g

    return HamiltonianModel(func, chart, grad=grad, name=f"poly-collar-k{k}", autonomous=autonomous)
