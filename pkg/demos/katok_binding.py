"""Katok example: the twist function changes sign along the binding.

Prints the twist values at the two binding points and the interior fixed
points of the page map found by the grid scan.

    python demos/katok_binding.py
"""
import numpy as np

from twistlab import suite


def main():
    for eps in (0.05, 0.1, 0.2):
        res = suite.katok_values(eps)
        s = res.summary
        print(f"eps1 = {eps:4.2f}   K(p1) = {s['K_p1']:+.12f}   K(p2) = {s['K_p2']:+.12f}")
    res = suite.katok_fixed_points()
    print(f"\nfixed points of the page map ({res.runtime:.1f} s):")
    for row in res.tables["fixed_points"]:
        print(f"  branch {row['branch']}  residual {row['residual']:.2e}")
    print(f"distance to p0: {res.summary['error_p0']:.2e}, to q0: {res.summary['error_q0']:.2e}")


if __name__ == "__main__":
    np.set_printoptions(precision=6)
    main()
