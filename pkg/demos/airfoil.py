"""Parameter-region walkthrough for the airfoil pitch-plunge model.

The airfoil system depends on a free-stream parameter Minf and a
reduced velocity V. Six transcribed polynomials R1-R6 in (Minf, V)
partition the parameter plane into regions C1-C5, each predicting how
many of the fixed points are Jacobi stable (C1-C3 predict one, C4-C5
predict two). The script evaluates the region report at two reference
parameter pairs and confirms the prediction by direct fixed-point
classification, then shows the focusing behaviour that distinguishes
the stable pair from the unstable origin.

Run:  python3 demos/airfoil.py
"""

from fractions import Fraction

import kccstab as K

CASES = [
    ("flutter-prone reference", Fraction(2017, 256), Fraction(83, 4), (-1, 1)),
    ("low-speed reference", Fraction(71, 16384), Fraction(3, 16), (-1, 1)),
]


def main() -> None:
    model = K.builtin("airfoil")
    for title, minf, v, box in CASES:
        print(f"=== {title}: Minf = {minf}, V = {v} ===")
        rep = K.airfoil_region_conditions(minf, v)
        print(f"region label: {rep.label}   "
              f"predicted Jacobi-stable count: k = {rep.stable_count}")
        for name, value in rep.values.items():
            print(f"  {name} = {float(value):+.6g}")

        pairs = K.classify_all(model, {"Minf": minf, "V": v}, box=box)
        print(f"fixed points found: {len(pairs)}")
        for fp, srep in pairs:
            pt = ", ".join(f"{c:+.6f}" for c in fp.point)
            print(f"  x = ({pt})   {srep.verdict}")
        k = sum(srep.verdict == K.STABLE for _, srep in pairs)
        print(f"computed stable count: k = {k} "
              f"({'matches' if k == rep.stable_count else 'DIFFERS FROM'} "
              f"the region prediction)")

        print("focusing verdicts near t = 0+:")
        for fp, srep in pairs:
            prof = K.jacobi_focusing(model, {"Minf": minf, "V": v}, fp.point)
            print(f"  x = {tuple(round(c, 6) for c in fp.point)}: "
                  f"{prof.verdict}")
        print()

    print("On a region boundary the report declines to pick a label:")
    rep = K.airfoil_region_conditions(Fraction(2), Fraction(10))  # V^2 = 50 Minf
    print(f"  Minf = 2, V = 10 -> boundary = {rep.boundary}, "
          f"label = {rep.label}")


if __name__ == "__main__":
    main()
