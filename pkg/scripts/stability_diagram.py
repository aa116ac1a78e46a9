"""Stability regions in the (pump strength, detuning) plane for each order.

Prints a character map per order: '.' ground only, 'o' coexistence,
'#' excited only, ' ' nothing stable.
"""

import argparse

import numpy as np

from periodmult.analysis import COEXISTENCE, EXCITED_ONLY, GROUND_ONLY, sweep_pump_detuning
from periodmult.rwa import RwaModel

GLYPHS = {GROUND_ONLY: ".", COEXISTENCE: "o", EXCITED_ONLY: "#"}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--alpha", type=float, default=0.25)
    parser.add_argument("--eps-max", type=float, default=5.0)
    parser.add_argument("--points", type=int, default=41)
    args = parser.parse_args()

    eps = np.linspace(0.0, args.eps_max, args.points)
    delta = np.linspace(-5.0, 5.0, args.points)
    for n in (2, 3, 4, 5):
        diagram = sweep_pump_detuning(RwaModel(n, 0.0, 1.0, args.alpha, 0.0), eps, delta)
        print(f"n={n} (rows: delta from +5 to -5, columns: eps from 0 to {args.eps_max})")
        for row in diagram.regions[::-1]:
            print("".join(GLYPHS.get(int(v), " ") for v in row))
        print()


if __name__ == "__main__":
    main()
