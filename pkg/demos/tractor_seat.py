"""Jacobi-stability walkthrough for the tractor-and-seat suspension model.

Three masses (cab, suspension stage, seat) coupled by springs and
dampers give a linear system of three second-order ODEs. Written in the
form M x'' = f(x, x') it is converted to KCC standard form by exact
matrix inversion. Linear-stability intuition says a damped suspension
should be well behaved; the Jacobi analysis disagrees: for every
catalogued parameter set the deviation curvature has an eigenvalue with
positive real part, so nearby trajectories disperse and the origin is
Jacobi unstable.

Run:  python3 demos/tractor_seat.py
"""

import kccstab as K


def main() -> None:
    model = K.builtin("tractor_seat")
    print("=== tractor seat: deviation system (constant coefficients) ===")
    dev = K.kcc_deviation(model)
    for line in dev.equations():
        print(" ", line)

    print("\n--- classification across the parameter catalogue ---")
    header = (f"{'case':>4}  {'M2':>5} {'M3':>4} {'K1':>6} {'C1':>5} "
              f"{'verdict':>9}  {'max Re(eig P)':>14}")
    print(header)
    for idx, case in enumerate(K.TRACTOR_SEAT_CASES, start=1):
        pairs = K.classify_all(model, case, box=(-10, 10), seeds=5)
        assert len(pairs) == 1, "the linear chain has a single fixed point"
        fp, rep = pairs[0]
        worst = max(z.real for z in rep.eigenvalues)
        print(f"{idx:>4}  {str(case['M2']):>5} {str(case['M3']):>4} "
              f"{str(case['K1']):>6} {str(case['C1']):>5} "
              f"{rep.verdict:>9}  {worst:>14.4f}")

    print("\nEvery case is Jacobi unstable even though each is a perfectly "
          "sensible\ndamped mechanical system: bounded trajectories can "
          "still separate rapidly\nnear t = 0+.")

    print("\n--- focusing at the reference parameter set ---")
    prof = K.jacobi_focusing(
        model, K.TRACTOR_SEAT_REFERENCE_PARAMS, (0.0, 0.0, 0.0)
    )
    print(f"covariant deviation verdict: {prof.verdict}")
    print(f"(all {len(prof.times)} sampled ratios |xi|^2 / |W|^2 exceed t^2)")


if __name__ == "__main__":
    main()
