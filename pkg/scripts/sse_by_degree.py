"""SSE of polynomial fits against high-accuracy prices, degree 1 to 10."""

import argparse

from lsmc_exposure.studies import SseStudyConfig, sse_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-outer", type=int, default=500)
    ap.add_argument("--truth-paths", type=int, default=131072)
    ap.add_argument("--inner-paths", type=int, nargs="+", default=[1, 10, 100])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = SseStudyConfig(n_outer=args.n_outer, truth_paths=args.truth_paths, inner_paths=tuple(args.inner_paths))
    rows = sse_study(cfg, seed=args.seed, workers=args.workers)
    ps = cfg.inner_paths
    print(f"{'degree':>6} {'actual':>12} " + " ".join(f"{'p=' + str(p):>12}" for p in ps))
    for d in cfg.degrees:
        sub = {r.inner_paths: r for r in rows if r.degree == d}
        print(f"{d:>6} {sub[ps[0]].sse_actual:>12.5g} " + " ".join(f"{sub[p].sse_noisy:>12.5g}" for p in ps))


if __name__ == "__main__":
    main()
