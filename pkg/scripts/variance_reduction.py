"""Variance of LSMC versus raw inner-MC prices for an Asian put, per inner-path count."""

import argparse

from lsmc_exposure.studies import STUDY_INNER_PATHS, VarianceStudyConfig, variance_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-outer", type=int, default=5000)
    ap.add_argument("--degree", type=int, default=5)
    ap.add_argument("--inner-paths", type=int, nargs="+", default=list(STUDY_INNER_PATHS))
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = VarianceStudyConfig(n_outer=args.n_outer, inner_paths=tuple(args.inner_paths), degree=args.degree)
    print(f"{'p':>6} {'tr MC':>12} {'tr LSMC':>12} {'ratio':>10} {'rank/n':>10} {'reduction':>10}")
    for row in variance_study(cfg, seed=args.seed, workers=args.workers):
        if row.report is None:
            print(f"{row.p:>6} {'n/a':>12}")
            continue
        r = row.report
        print(f"{row.p:>6} {r.total_mc_variance:>12.5g} {r.total_lsmc_variance:>12.5g} "
              f"{r.ratio:>10.6f} {r.theoretical_ratio:>10.6f} {100 * r.reduction:>9.3f}%")


if __name__ == "__main__":
    main()
