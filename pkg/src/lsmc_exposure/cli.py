"""Command-line entry point.

    lsmc-exposure run      [--config PATH] [--seed U64] [--workers N] [--out DIR]
    lsmc-exposure baseline ...
    lsmc-exposure compare  ...
    lsmc-exposure study {gbm-call,variance,sse} ...

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures (rank deficiency, degenerate explanatory variables).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import engine, output, studies
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError

log = logging.getLogger("lsmc_exposure")

REL_EPS = 1e-12


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides config)")
    common.add_argument("--workers", type=int, help="worker threads (overrides LSMC_WORKERS and config)")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lsmc-exposure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="LSMC exposure profiles")
    sub.add_parser("baseline", parents=[common], help="nested Monte-Carlo baseline profiles")
    sub.add_parser("compare", parents=[common], help="LSMC against the nested baseline")
    study = sub.add_parser("study", parents=[common], help="analysis studies")
    study.add_argument("name", choices=["gbm-call", "variance", "sse"])
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError(["seed must be an unsigned 64-bit integer"])
        changes["seed"] = args.seed
    workers = args.workers
    if workers is None and os.environ.get("LSMC_WORKERS"):
        try:
            workers = int(os.environ["LSMC_WORKERS"])
        except ValueError:
            raise ConfigError(["LSMC_WORKERS must be an integer"]) from None
    if workers is not None:
        if workers < 1:
            raise ConfigError(["workers must be ≥ 1"])
        changes["workers"] = workers
    if args.out is not None:
        changes["out"] = str(args.out)
    return cfg.replace(**changes) if changes else cfg


def _profile_rows(profile: engine.ExposureProfile):
    for t, ee, pfe in zip(profile.times, profile.ee, profile.pfe):
        yield (t, ee, pfe, profile.method)


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.abs(b), REL_EPS)


def _timing(result: engine.RunResult):
    return [
        {"method": t.method, "step": t.step, "wall_ms": t.wall_ms, "inner_paths": t.inner_paths}
        for t in result.timing
    ]


def cmd_exposure(cfg: RunConfig, out: Path, command: str) -> dict:
    with_lsmc = command in ("run", "compare")
    with_baseline = command in ("baseline", "compare")
    plan = cfg.run_plan(with_baseline=with_baseline)
    result = engine.run(plan, with_lsmc=with_lsmc, with_baseline=with_baseline)
    written = []
    methods = [m for m in ("lsmc", "raw_mc", "baseline") if m in result.profiles]
    rows = [row for m in methods for row in _profile_rows(result.profiles[m])]
    written.append(output.write_csv(out / "profile.csv", output.PROFILE_COLUMNS, rows))
    if with_lsmc:
        steps = plan.step_indices()
        report_rows = []
        for t, rep in zip(steps, result.lsmc.variance):
            if rep is None:
                report_rows.append((t, None, None, None, None))
            else:
                report_rows.append((t, rep.total_mc_variance, rep.total_lsmc_variance, rep.ratio,
                                    rep.theoretical_ratio))
        written.append(output.write_csv(out / "variance_report.csv", output.VARIANCE_REPORT_COLUMNS,
                                        report_rows))
    extra = {}
    if command == "compare":
        lsmc, base = result.profiles["lsmc"], result.profiles["baseline"]
        ee_err, pfe_err = _rel(lsmc.ee, base.ee), _rel(lsmc.pfe, base.pfe)
        rows = zip(lsmc.times, lsmc.ee, base.ee, ee_err, lsmc.pfe, base.pfe, pfe_err)
        written.append(output.write_csv(out / "compare.csv", output.COMPARE_COLUMNS, rows))
        extra["max_ee_rel_err"] = float(ee_err.max())
        extra["max_pfe_rel_err"] = float(pfe_err.max())
        extra["work_ratio"] = result.work_ratio()
    extra["timing"] = _timing(result)
    extra["inner_paths"] = {m: result.work(m) for m in ("lsmc", "baseline")}
    extra["outputs"] = [p.name for p in written]
    return extra


def cmd_study(cfg: RunConfig, out: Path, name: str) -> dict:
    kw = dict(market=cfg.model, seed=cfg.seed, workers=cfg.workers)
    written = []
    if name == "gbm-call":
        steps = studies.gbm_call_study(cfg.study.gbm_call, **kw)
        rows = [
            (s.step, i, s.spot[i], s.y_mc[i], s.dummy[i], s.bs[i])
            for s in steps for i in range(s.spot.size)
        ]
        written.append(output.write_csv(out / "gbm_call.csv", output.GBM_CALL_COLUMNS, rows))
        summary = []
        for s in steps:
            r = s.rmse()
            summary += [(s.step, "cubic", r["mc"], r["cubic"]), (s.step, "cubic_dummy", r["mc"], r["dummy"])]
        written.append(output.write_csv(out / "gbm_call_summary.csv", output.GBM_CALL_SUMMARY_COLUMNS,
                                        summary))
    elif name == "variance":
        result = studies.variance_study(cfg.study.variance, **kw)
        rows, summary = [], []
        for r in result:
            if r.report is None:
                summary.append((r.p, None, None, None, None, None, None))
                continue
            rows += [(r.p, i, r.mc_var[i], r.lsmc_var[i]) for i in range(r.mc_var.size)]
            rep = r.report
            summary.append((r.p, rep.total_mc_variance, rep.total_lsmc_variance, rep.ratio,
                            rep.theoretical_ratio, rep.reduction, r.pooled))
        written.append(output.write_csv(out / "variance.csv", output.VARIANCE_STUDY_COLUMNS, rows))
        written.append(output.write_csv(out / "variance_summary.csv", output.VARIANCE_SUMMARY_COLUMNS,
                                        summary))
    else:
        result = studies.sse_study(cfg.study.sse, **kw)
        rows = [(r.degree, r.inner_paths, r.sse_noisy, r.sse_actual) for r in result]
        written.append(output.write_csv(out / "sse.csv", output.SSE_COLUMNS, rows))
    return {"outputs": [p.name for p in written]}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(cfg.out)
    command = args.command if args.command != "study" else f"study {args.name}"
    start = time.perf_counter()
    try:
        if args.command == "study":
            extra = cmd_study(cfg, out, args.name)
        else:
            extra = cmd_exposure(cfg, out, args.command)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    (out / "config.json").write_text(cfg.to_json() + "\n")
    output.write_manifest(out / "manifest.json", {
        "command": command,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "config_sha256": cfg.digest(),
        "wall_seconds": time.perf_counter() - start,
        **extra,
    })
    log.info("wrote %s", ", ".join(extra.get("outputs", [])))
    return 0


if __name__ == "__main__":
    sys.exit(main())
