"""Projected gradient descent from a perturbed ball for several lambda values.

For lambda below the two-ball threshold the trajectories should round up to
the ball (beta^2 -> 0). One CSV row per (lambda, step).
"""

import argparse
import csv
import sys

from liquiddrop.energy_opt import DescentConfig, gradient_descent_shape, two_ball_threshold
from liquiddrop.shapes import perturbed_ball


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lambdas", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3])
    p.add_argument("--mode", type=int, default=2)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--out", help="CSV path (default stdout)")
    args = p.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda", "step", "total", "grad_norm", "beta2"])
    start = perturbed_ball(args.mode, args.amplitude)
    print(f"two-ball threshold {two_ball_threshold():.5f}", file=sys.stderr)
    for lam in args.lambdas:
        res = gradient_descent_shape(start, lam, DescentConfig(lam=lam, steps=args.steps))
        for s in res.trajectory:
            w.writerow([repr(lam), s.step, repr(s.energy.total), repr(s.grad_norm), repr(s.beta_squared)])
        last = res.trajectory[-1]
        print(f"lambda={lam}: {res.status} after {last.step} steps, beta2={last.beta_squared:.2e}", file=sys.stderr)
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
