"""Action of collar trajectories of an extended, smoothed annulus Hamiltonian.

Samples trajectories of increasing length, prints the fitted linear decay of
the action and the worst margin to the bound ``-c T + d``.

    python demos/action_growth.py [N]
"""
import sys

from twistlab import suite


def main(N: int = 30):
    res = suite.action_growth(N=N)
    s = res.summary
    print(f"C0 = {s['C0']:.4f}, C1 = {s['C1']:.4f}, delta1 = {s['delta1']:.4f}")
    print(f"c = {s['c']:.4f}, d = {s['d']:.4f}, fitted slope = {s['slope_fit']:.4f}")
    rows = sorted(res.tables["action_samples"], key=lambda r: r["T"])
    print(f"{'T':>8} {'action':>12} {'bound':>12}")
    for r in rows[:: max(1, len(rows) // 10)]:
        print(f"{r['T']:8.3f} {r['action']:12.5f} {r['bound']:12.5f}")
    margin = min(r["bound"] - r["action"] for r in rows)
    print(f"smallest margin {margin:.3e} over {len(rows)} trajectories; "
          f"{'PASS' if res.passes else 'FAIL'} in {res.runtime:.1f} s")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 30)
