"""Desk-scale analysis runs: GBM call fit, variance reduction, SSE versus degree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import instruments as inst
from .engine import MarketModel, RunPlan, outer_scenarios, price_step
from .models import black_scholes
from .regression import BasisSpec, build_design, fit, monomial_basis, monomial_dummy_basis, scale_to_unit
from .rng import Purpose
from .variance import (
    McCovariance,
    VarianceReport,
    lsmc_covariance,
    lsmc_variance_diagonal,
    pooled_sigma2,
)

STUDY_INNER_PATHS = (1, 10, 30, 50, 100, 10000)


@dataclass(frozen=True)
class GbmCallStudyConfig:
    n_outer: int = 5000
    p_inner: int = 30
    strike: float = 100.0
    degree: int = 3
    steps: tuple[int, ...] = (0, 22, 23)  # days 15, 345 and 360 on the 15-day grid


@dataclass(frozen=True)
class VarianceStudyConfig:
    n_outer: int = 5000
    inner_paths: tuple[int, ...] = STUDY_INNER_PATHS
    strike: float = 100.0
    degree: int = 5
    step: int = 0


@dataclass(frozen=True)
class SseStudyConfig:
    n_outer: int = 500
    inner_paths: tuple[int, ...] = (1, 10, 100)
    truth_paths: int = 131072
    strike: float = 100.0
    degrees: tuple[int, ...] = tuple(range(1, 11))
    step: int = 0


@dataclass(frozen=True)
class StudyConfig:
    gbm_call: GbmCallStudyConfig = GbmCallStudyConfig()
    variance: VarianceStudyConfig = VarianceStudyConfig()
    sse: SseStudyConfig = SseStudyConfig()


def _rmse(a, b) -> float:
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


@dataclass
class GbmCallStep:
    step: int
    time: float
    spot: np.ndarray
    y_mc: np.ndarray
    cubic: np.ndarray  # cubic basis fit
    dummy: np.ndarray  # cubic basis with strike dummy interactions
    bs: np.ndarray

    def rmse(self) -> dict[str, float]:
        return {
            "mc": _rmse(self.y_mc, self.bs),
            "cubic": _rmse(self.cubic, self.bs),
            "dummy": _rmse(self.dummy, self.bs),
        }


def gbm_call_study(
    cfg: GbmCallStudyConfig = GbmCallStudyConfig(),
    market: MarketModel = MarketModel(),
    seed: int = 42,
    workers: int = 1,
) -> list[GbmCallStep]:
    """Noisy inner prices of a vanilla call against its two regression proxies."""
    spec = inst.InstrumentSpec("vanilla", "call", strike=cfg.strike)
    plan = RunPlan(spec, market, BasisSpec("monomial", cfg.degree), n_outer=cfg.n_outer,
                   p_inner=cfg.p_inner, seed=seed, workers=workers)
    scenarios = outer_scenarios(plan)
    times = scenarios.schedule.times
    out = []
    for t in cfg.steps:
        spot = scenarios.paths[:, t]
        prices = price_step(plan, scenarios, t)
        scaled, bounds = scale_to_unit(spot)
        cubic = fit(monomial_basis(scaled, cfg.degree), prices.y_mc)
        dummy = fit(monomial_dummy_basis(spot, cfg.strike, cfg.degree, bounds), prices.y_mc)
        bs = black_scholes(spot, cfg.strike, market.r_inner, market.sigma, times[-1] - times[t], "call")
        out.append(GbmCallStep(t, float(times[t]), spot, prices.y_mc, cubic.fitted, dummy.fitted, bs))
    return out


@dataclass
class VarianceStudyRow:
    p: int
    mc_var: np.ndarray | None  # per-scenario MC variance of the p-path mean
    lsmc_var: np.ndarray | None  # per-scenario variance of the fitted price
    report: VarianceReport | None
    pooled: float | None


def _asian_plan(strike, market, n_outer, degree, seed, workers, p=1):
    spec = inst.InstrumentSpec("asian", "put", strike=strike)
    return RunPlan(spec, market, BasisSpec("forsythe", degree), n_outer=n_outer,
                   p_inner=p, seed=seed, workers=workers)


def variance_study(
    cfg: VarianceStudyConfig = VarianceStudyConfig(),
    market: MarketModel = MarketModel(),
    seed: int = 42,
    workers: int = 1,
) -> list[VarianceStudyRow]:
    """MC and LSMC variance of Asian put prices at one date, per inner-path count.

    Rows with ``p = 1`` carry no variance (the estimator needs two paths).
    """
    plan = _asian_plan(cfg.strike, market, cfg.n_outer, cfg.degree, seed, workers)
    scenarios = outer_scenarios(plan)
    continuous, indicators = inst.state_matrix(plan.instrument, scenarios.paths, cfg.step)
    # The regression here uses the bare polynomial expansion of the state.
    design = build_design(continuous, np.empty((cfg.n_outer, 0)), plan.basis)
    rows = []
    for p in cfg.inner_paths:
        prices = price_step(plan, scenarios, cfg.step, p)
        if p < 2:
            rows.append(VarianceStudyRow(p, None, None, None, None))
            continue
        cov = McCovariance.from_diagonal(prices.mean_variance, p)
        rows.append(VarianceStudyRow(
            p, cov.diagonal_values, lsmc_variance_diagonal(design, cov),
            lsmc_covariance(design, cov), pooled_sigma2(cov),
        ))
    return rows


@dataclass(frozen=True)
class SseRow:
    degree: int
    inner_paths: int
    sse_noisy: float
    sse_actual: float


def sse_study(
    cfg: SseStudyConfig = SseStudyConfig(),
    market: MarketModel = MarketModel(),
    seed: int = 42,
    workers: int = 1,
) -> list[SseRow]:
    """SSE of polynomial fits against high-accuracy prices, by degree.

    ``sse_actual`` is the residual of fitting the high-accuracy prices
    themselves; ``sse_noisy`` is the distance between the fit of ``p``-path
    prices and the high-accuracy prices.
    """
    plan = _asian_plan(cfg.strike, market, cfg.n_outer, max(cfg.degrees), seed, workers,
                       p=max(min(cfg.inner_paths), 1))
    scenarios = outer_scenarios(plan)
    truth = price_step(plan, scenarios, cfg.step, cfg.truth_paths, Purpose.BASELINE).y_mc
    noisy = {p: price_step(plan, scenarios, cfg.step, p).y_mc for p in cfg.inner_paths}
    continuous, _ = inst.state_matrix(plan.instrument, scenarios.paths, cfg.step)
    rows = []
    for degree in cfg.degrees:
        design = build_design(continuous, np.empty((cfg.n_outer, 0)),
                              BasisSpec("forsythe", degree, max_degree=max(cfg.degrees)))
        actual = fit(design, truth).sse
        for p in cfg.inner_paths:
            fitted = fit(design, noisy[p]).fitted
            rows.append(SseRow(degree, p, float(np.sum((fitted - truth) ** 2)), actual))
    return rows
