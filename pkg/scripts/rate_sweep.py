"""Decay-rate sweep over the catalog families.

Fits the log-log slope of the gradient L1 norm in both regimes, and of the TV
distance at large t, and compares each with the theory law.  Writes one CSV row per
(model, regime, quantity).

    python scripts/rate_sweep.py --out sweep.csv
"""
import argparse
import csv
import sys
import warnings

import numpy as np

from levylab import (GridUnderresolvedWarning, LevyLabError, Layered, Polar, SpectralMeasure, Stable, Tempered,
                     Truncated, rate_fit)
from levylab.rates import grad_series, theory_law, tv_series

WINDOWS = {"small": np.logspace(-4, -1, 12), "large": np.logspace(1, 4, 12)}


def models():
    sym = SpectralMeasure.symmetric(1, 1.0)
    return {
        "stable(0.5)": Polar(sym, Stable(0.5)),
        "stable(1.5)": Polar(sym, Stable(1.5)),
        "layered(0.5,3,1)": Polar(sym, Layered(0.5, 3.0, 1.0)),
        "tempered(0.5,1)": Polar(sym, Tempered(0.5, 1.0)),
        "truncated(1,1)": Polar(sym, Truncated(1.0, 1.0)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--shift", type=float, default=1.0)
    args = p.parse_args(argv)
    warnings.simplefilter("ignore", GridUnderresolvedWarning)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["model", "regime", "quantity", "slope", "theory_exponent", "drift_per_decade"])
    for name, m in models().items():
        for regime, ts in WINDOWS.items():
            law = theory_law(m, regime)
            runs = {"grad": lambda: grad_series(m, ts)}
            if regime == "large":
                runs["tv"] = lambda: tv_series(m, ts, args.shift)
            for q, series in runs.items():
                try:
                    fit = rate_fit(series(), law)
                except LevyLabError as exc:
                    w.writerow([name, regime, q, exc.code, law.exponent, ""])
                    continue
                w.writerow([name, regime, q, f"{fit.slope:.5f}", fit.theory_exponent,
                            f"{fit.ratio_stats['drift_per_decade']:.3g}"])
                fh.flush()
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
