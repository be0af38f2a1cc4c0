"""Second variation of the liquid-drop energy at the ball, mode by mode.

Prints where D^2(l, lambda) changes sign and compares with the two-ball
threshold. The lambda range extends past the threshold so that the mode-2
instability shows up.
"""

import argparse
import sys

import numpy as np

from liquiddrop.energy_opt import mode_stability_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-degree", type=int, default=4)
    p.add_argument("--lambda-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--out", help="CSV path (default stdout)")
    args = p.parse_args(argv)

    rep = mode_stability_sweep(args.max_degree, np.linspace(0.0, args.lambda_max, args.points), grid_res=args.grid)
    for l in rep.modes:
        crossing = -rep.perimeter_part[l] / rep.nonlocal_part[l]
        print(f"l={l}: D2_P={rep.perimeter_part[l]:.4f} D2_NL={rep.nonlocal_part[l]:.4f} "
              f"zero at lambda={crossing:.4f}", file=sys.stderr)
    for line in rep.summary_lines():
        print(line, file=sys.stderr)
    text = rep.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
