"""Noisy 30-path call prices against cubic and cubic-with-dummy regression fits."""

import argparse

from lsmc_exposure.studies import GbmCallStudyConfig, gbm_call_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-outer", type=int, default=5000)
    ap.add_argument("--p-inner", type=int, default=30)
    ap.add_argument("--steps", type=int, nargs="+", default=[0, 22, 23])
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    cfg = GbmCallStudyConfig(n_outer=args.n_outer, p_inner=args.p_inner, steps=tuple(args.steps))
    print(f"{'step':>4} {'t':>7} {'RMSE mc':>10} {'cubic':>10} {'dummy':>10}")
    for s in gbm_call_study(cfg, seed=args.seed):
        r = s.rmse()
        print(f"{s.step:>4} {s.time:>7.4f} {r['mc']:>10.4g} {r['cubic']:>10.4g} {r['dummy']:>10.4g}")


if __name__ == "__main__":
    main()
