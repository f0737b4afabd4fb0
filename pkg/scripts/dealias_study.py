"""Lattice inversion error against the closed-form Cauchy density.

Prints the maximal error on |y| <= 20 for raw and dealiased inversion as the
window L and the point count N vary.

    python scripts/dealias_study.py
"""
import math
import warnings

import numpy as np

from levylab import ExplicitSymbol, GridSpec, GridUnderresolvedWarning, density


def error(dg):
    near = np.abs(dg.y) <= 20
    exact = 1 / (math.pi * (1 + dg.y[near] ** 2))
    return float(np.abs(dg.values[near] - exact).max())


def main():
    warnings.simplefilter("ignore", GridUnderresolvedWarning)
    m = ExplicitSymbol("power", alpha=1.0)
    print(f"{'L':>6} {'N':>8} {'raw':>10} {'dealiased':>10}")
    for L in (25.0, 50.0, 100.0, 200.0):
        for N in (2 ** 12, 2 ** 15, 2 ** 18):
            raw = error(density(m, 1.0, GridSpec(1, N, L), dealias=False))
            fixed = error(density(m, 1.0, GridSpec(1, N, L)))
            print(f"{L:6.0f} {N:8d} {raw:10.2e} {fixed:10.2e}")


if __name__ == "__main__":
    main()
