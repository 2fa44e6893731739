"""Periodic orbits of prime period and Lagrangian chords of the annulus twist map.

    python demos/prime_orbits.py
"""
from twistlab.models.annulus import AnnulusTwistModel
from twistlab.orbits import FiberLagrangian, find_chords, prime_iterate_survey


def main(kappa: float = 0.1):
    model = AnnulusTwistModel(kappa)
    for row in prime_iterate_survey(model, (3, 5)):
        print(f"prime {row['prime']}: {row['new_orbits']} orbits "
              f"({row['isolated']} isolated, {row['degenerate']} degenerate families)")
        for rec in row["records"]:
            act = "n/a" if rec.action is None else f"{rec.action:+.6f}"
            print(f"   p = {rec.point[0]:+.6f}  q = {rec.point[1]:.6f}  action {act}")
    L = FiberLagrangian()
    recs = find_chords(model, L, 3)
    print(f"\n{len(recs)} chords of order 3 between the fibres q = 0 and q = pi")
    for r in recs[:6]:
        print(f"   start p = {r.start[0]:+.6f} on q = {r.start_component:.4f} -> q = {r.end_component:.4f}"
              f"  residual {r.residual:.1e}")


if __name__ == "__main__":
    main()
