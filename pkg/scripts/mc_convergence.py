"""Monte Carlo oracle against the lattice density as the cutoff shrinks.

For a layered model, prints the KS statistic, its 1% threshold and the
empirical TV lower bound at shift 1 for a range of small-jump cutoffs.

    python scripts/mc_convergence.py --paths 40000
"""
import argparse
import warnings

from levylab import (GridUnderresolvedWarning, Layered, Polar, SamplerConfig, SpectralMeasure, density,
                     empirical_tv_lower, ks_statistic, sample_increments, tv_distance)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--paths", type=int, default=40_000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    warnings.simplefilter("ignore", GridUnderresolvedWarning)
    m = Polar(SpectralMeasure.symmetric(1, 1.0), Layered(0.5, 3.0, 1.0))
    dg = density(m, args.t)
    print(f"lattice tv at shift 1: {tv_distance(dg, 1.0):.4f}")
    print(f"{'epsilon':>8} {'KS':>9} {'thresh':>9} {'tv_lower':>9}")
    for eps in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3):
        emp = sample_increments(m, SamplerConfig(epsilon=eps, n_paths=args.paths, t=args.t, seed=args.seed))
        ks = ks_statistic(emp, dg)
        tv = empirical_tv_lower(emp, emp.shifted(1.0), 32)
        print(f"{eps:8.0e} {ks.statistic:9.2e} {ks.threshold:9.2e} {tv:9.4f}")


if __name__ == "__main__":
    main()
