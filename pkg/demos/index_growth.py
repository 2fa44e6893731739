"""Robbin--Salamon index of rotation paths and of linearised Reeb arcs.

    python demos/index_growth.py
"""
import numpy as np

from twistlab.index import katok_reeb_arcs, rotation_path, rs_index, verify_index_growth
from twistlab.models.katok import KatokSystem, sample_sigma


def main():
    for k in (0.5, 1, 1.5, 2, 3):
        print(f"rotation by 2 pi k, k = {k:3}: mu = {rs_index(rotation_path(k, steps=81)):+.1f}")
    sys0 = KatokSystem(3, (0.0,))
    w0 = sample_sigma(sys0, 1, np.random.default_rng(1))[0]
    rep = verify_index_growth(katok_reeb_arcs(sys0, w0), (0.5, 1.5, 2.5, 3.5, 4.5))
    print("\nReeb arcs on the Brieskorn sphere:")
    for r in rep["rows"]:
        print(f"  T = {r['T']:3.1f}  mu = {r['mu_RS']:+5.1f}  lower bound {r['bound']:6.2f}")
    print(f"fit |mu| >= {rep['fit']['c']:.3f} T + ({rep['fit']['d']:.3f})")


if __name__ == "__main__":
    main()
