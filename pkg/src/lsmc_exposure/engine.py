"""Nested Monte-Carlo exposure engine with a regression proxy for the inner loop.

At each valuation date every outer scenario is priced with ``p_inner``
risk-neutral continuations.  The noisy prices are regressed on the
instrument's state variables across scenarios, and the fitted values replace
them in the exposure statistics.  A nested baseline with many more inner
paths (antithetic) serves as the reference.

Each (scenario, date) reads its own random stream, so results do not depend
on the number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import instruments as inst
from .errors import DegenerateInputError, NumericalError, RankDeficiencyError
from .models import FixingSchedule, GbmParams, ScenarioSet, generate_outer, simulate_inner_tail
from .regression import BasisSpec, DesignMatrix, FitResult, build_design, fit
from .rng import Purpose, StreamKey
from .variance import McCovariance, VarianceReport, lsmc_covariance, mc_covariance

DEFAULT_P_INNER = {
    "vanilla": 30,
    "asian": 10,
    "accum_forward": 10,
    "tarn": 30,
    "barrier_uo": 64,
}


@dataclass(frozen=True)
class MarketModel:
    """GBM market shared by the outer (real-world) and inner (risk-neutral) loops."""

    s0: float = 100.0
    mu_outer: float = 0.1
    r_inner: float = 0.05
    sigma: float = 0.2
    maturity: float = 1.0
    fixing_interval_days: int = 15
    day_count: int = 360

    def outer_params(self) -> GbmParams:
        return GbmParams(self.s0, self.mu_outer, self.sigma, self.r_inner)

    def inner_params(self) -> GbmParams:
        return GbmParams(self.s0, self.r_inner, self.sigma, self.r_inner)

    def schedule(self) -> FixingSchedule:
        return FixingSchedule.regular(self.maturity, self.fixing_interval_days, self.day_count)


@dataclass(frozen=True)
class RunPlan:
    instrument: inst.InstrumentSpec
    market: MarketModel = MarketModel()
    basis: BasisSpec = BasisSpec()
    n_outer: int = 1000
    p_inner: int = 30
    p_baseline: int = 0  # 0 disables the baseline
    steps: tuple[int, ...] | None = None  # schedule indices; None means all
    crn: bool = False
    quantile: float = 0.95
    seed: int = 42
    workers: int = 1

    def __post_init__(self):
        if self.n_outer < 2:
            raise ValueError("n_outer must be >= 2")
        if self.p_inner < 1:
            raise ValueError("p_inner must be >= 1")
        if self.p_baseline:
            if self.p_baseline < 32 * self.p_inner:
                raise ValueError("p_baseline must be at least 32 * p_inner")
            if self.p_baseline % 2:
                raise ValueError("p_baseline must be even (antithetic pairs)")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must be in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        k = len(self.market.schedule())
        if self.steps is not None:
            steps = tuple(int(s) for s in self.steps)
            if not steps or any(not 0 <= s < k for s in steps) or list(steps) != sorted(set(steps)):
                raise ValueError(f"steps must be strictly increasing indices in [0, {k})")
            object.__setattr__(self, "steps", steps)
        self.instrument.validate(self.market.s0, k)

    def step_indices(self) -> tuple[int, ...]:
        return self.steps if self.steps is not None else tuple(range(len(self.market.schedule())))

    @property
    def covariance_mode(self) -> str:
        return "full" if self.crn else "diagonal"


@dataclass
class InnerPrices:
    """Inner-loop result at one date: prices, optionally the payoffs themselves."""

    y_mc: np.ndarray
    mean_variance: np.ndarray | None  # unbiased variance of each p-path mean
    payoffs: np.ndarray | None
    p: int
    inner_paths: int
    normals: int


@dataclass
class StepResult:
    t_index: int
    prices: InnerPrices
    design: DesignMatrix
    fit: FitResult
    variance: VarianceReport | None

    @property
    def lsmc_values(self) -> np.ndarray:
        return self.fit.predict(self.design)


@dataclass(frozen=True)
class ValueSurface:
    method: str  # raw_mc, lsmc or baseline
    times: np.ndarray
    values: np.ndarray  # (n_outer, steps)
    fits: tuple[FitResult, ...] = ()
    variance: tuple[VarianceReport | None, ...] = ()


@dataclass(frozen=True)
class ExposureProfile:
    method: str
    times: np.ndarray
    ee: np.ndarray
    pfe: np.ndarray


@dataclass
class TimingRecord:
    method: str
    step: int
    wall_ms: float
    inner_paths: int


@dataclass
class RunResult:
    plan: RunPlan
    scenarios: ScenarioSet
    lsmc: ValueSurface
    raw: ValueSurface
    baseline: ValueSurface | None
    profiles: dict[str, ExposureProfile]
    timing: list[TimingRecord] = field(default_factory=list)

    def work(self, method: str) -> int:
        return sum(t.inner_paths for t in self.timing if t.method == method)

    def work_ratio(self) -> float:
        """Baseline inner paths simulated per LSMC inner path."""
        lsmc = self.work("lsmc")
        return self.work("baseline") / lsmc if lsmc else float("nan")


def outer_scenarios(plan: RunPlan) -> ScenarioSet:
    return generate_outer(plan.market.outer_params(), plan.market.schedule(), plan.n_outer, plan.seed)


def _stream_key(plan: RunPlan, purpose: Purpose, scenario_index: int, t_index: int) -> StreamKey:
    shared = purpose == Purpose.INNER and plan.crn
    return StreamKey(plan.seed, purpose, t_index, 0 if shared else scenario_index)


def price_scenario(
    plan: RunPlan,
    scenarios: ScenarioSet,
    scenario_index: int,
    t_index: int,
    p: int | None = None,
    purpose: Purpose = Purpose.INNER,
) -> tuple[float, np.ndarray]:
    """Mean of ``p`` discounted payoffs on one scenario, and the payoffs."""
    p = plan.p_inner if p is None else p
    schedule = scenarios.schedule
    realized = scenarios.paths[scenario_index, : t_index + 1]
    tail = simulate_inner_tail(
        realized,
        plan.market.inner_params(),
        schedule,
        t_index,
        p,
        _stream_key(plan, purpose, scenario_index, t_index),
        antithetic=purpose == Purpose.BASELINE,
    )
    paths = np.hstack([np.broadcast_to(realized, (p, t_index + 1)), tail])
    disc = inst.Discounting(schedule.times, plan.market.r_inner, schedule.times[t_index])
    payoffs = inst.payoff(plan.instrument, paths, disc)
    return float(payoffs.mean()), payoffs


def _chunks(n: int, workers: int) -> list[range]:
    size = math.ceil(n / workers)
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def price_step(
    plan: RunPlan,
    scenarios: ScenarioSet,
    t_index: int,
    p: int | None = None,
    purpose: Purpose = Purpose.INNER,
    keep_payoffs: bool = False,
) -> InnerPrices:
    """Inner-loop prices for every scenario at one date."""
    p = plan.p_inner if p is None else p
    n = scenarios.n

    def work(rows: range):
        y = np.empty(len(rows))
        var = np.empty(len(rows)) if p >= 2 else None
        kept = np.empty((len(rows), p)) if keep_payoffs else None
        for j, i in enumerate(rows):
            y[j], f = price_scenario(plan, scenarios, i, t_index, p, purpose)
            if var is not None:
                var[j] = f.var(ddof=1) / p
            if kept is not None:
                kept[j] = f
        return y, var, kept

    blocks = _chunks(n, plan.workers)
    if plan.workers == 1:
        parts = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(plan.workers) as pool:
            parts = list(pool.map(work, blocks))
    y = np.concatenate([r[0] for r in parts])
    var = np.concatenate([r[1] for r in parts]) if p >= 2 else None
    payoffs = np.vstack([r[2] for r in parts]) if keep_payoffs else None
    remaining = len(scenarios.schedule) - 1 - t_index
    return InnerPrices(y, var, payoffs, p, n * p, n * p * remaining)


def regress_step(
    plan: RunPlan, scenarios: ScenarioSet, t_index: int, prices: InnerPrices
) -> StepResult:
    """Fit the inner-loop prices on the state variables at ``t_index``."""
    continuous, indicators = inst.state_matrix(plan.instrument, scenarios.paths, t_index)
    try:
        design = build_design(continuous, indicators, plan.basis)
        result = fit(design, prices.y_mc)
    except NumericalError as exc:
        raise _with_step(exc, t_index) from exc
    report = None
    if prices.p >= 2:
        if plan.covariance_mode == "full" and prices.payoffs is not None:
            cov = mc_covariance(prices.payoffs, "full")
        else:
            cov = McCovariance.from_diagonal(prices.mean_variance, prices.p)
        report = lsmc_covariance(design, cov)
    return StepResult(t_index, prices, design, result, report)


def _with_step(exc: NumericalError, t_index: int) -> NumericalError:
    if isinstance(exc, RankDeficiencyError):
        return RankDeficiencyError(exc.rank, exc.columns, step=t_index)
    if isinstance(exc, DegenerateInputError):
        return DegenerateInputError(str(exc), step=t_index)
    return NumericalError(f"time step {t_index}: {exc}")


def lsmc_step(plan: RunPlan, scenarios: ScenarioSet, t_index: int) -> StepResult:
    prices = price_step(plan, scenarios, t_index, keep_payoffs=plan.crn)
    return regress_step(plan, scenarios, t_index, prices)


def exposure(values, times, q: float = 0.95, method: str = "lsmc") -> ExposureProfile:
    """EE and PFE of the positive part of ``values`` (scenarios x steps).

    PFE is the order statistic of rank ``ceil(q n)`` (1-based) of the sorted
    positive exposures.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    if n == 0:
        raise ValueError("no scenarios")
    pos = np.maximum(values, 0.0)
    rank = min(max(math.ceil(q * n - 1e-9), 1), n)
    pfe = np.sort(pos, axis=0)[rank - 1]
    return ExposureProfile(method, np.asarray(times, dtype=float), pos.mean(axis=0), pfe)


def aggregate(surfaces: list[ValueSurface], method: str | None = None) -> ValueSurface:
    """Portfolio surface as the sum of per-instrument surfaces on the same scenarios."""
    first = surfaces[0]
    for s in surfaces[1:]:
        if s.values.shape != first.values.shape or not np.array_equal(s.times, first.times):
            raise ValueError("surfaces must share scenarios and dates")
    total = np.sum([s.values for s in surfaces], axis=0)
    return ValueSurface(method or first.method, first.times, total)


def run(plan: RunPlan, with_lsmc: bool = True, with_baseline: bool | None = None) -> RunResult:
    """Full pipeline over the plan's dates."""
    if with_baseline is None:
        with_baseline = plan.p_baseline > 0
    if with_baseline and not plan.p_baseline:
        raise ValueError("baseline requested but p_baseline is 0")
    scenarios = outer_scenarios(plan)
    steps = plan.step_indices()
    times = scenarios.schedule.times[list(steps)]
    n = scenarios.n
    timing: list[TimingRecord] = []

    lsmc_vals = np.zeros((n, len(steps)))
    raw_vals = np.zeros((n, len(steps)))
    fits: list[FitResult] = []
    reports: list[VarianceReport | None] = []
    if with_lsmc:
        for col, t in enumerate(steps):
            start = time.perf_counter()
            step = lsmc_step(plan, scenarios, t)
            timing.append(TimingRecord("lsmc", t, 1e3 * (time.perf_counter() - start), step.prices.inner_paths))
            raw_vals[:, col] = step.prices.y_mc
            lsmc_vals[:, col] = step.lsmc_values
            fits.append(step.fit)
            reports.append(step.variance)

    baseline = None
    if with_baseline:
        base_vals = np.zeros((n, len(steps)))
        for col, t in enumerate(steps):
            start = time.perf_counter()
            prices = price_step(plan, scenarios, t, plan.p_baseline, Purpose.BASELINE)
            timing.append(TimingRecord("baseline", t, 1e3 * (time.perf_counter() - start), prices.inner_paths))
            base_vals[:, col] = prices.y_mc
        baseline = ValueSurface("baseline", times, base_vals)

    lsmc = ValueSurface("lsmc", times, lsmc_vals, tuple(fits), tuple(reports))
    raw = ValueSurface("raw_mc", times, raw_vals)
    profiles = {}
    if with_lsmc:
        profiles["lsmc"] = exposure(lsmc.values, times, plan.quantile, "lsmc")
        profiles["raw_mc"] = exposure(raw.values, times, plan.quantile, "raw_mc")
    if baseline is not None:
        profiles["baseline"] = exposure(baseline.values, times, plan.quantile, "baseline")
    return RunResult(plan, scenarios, lsmc, raw, baseline, profiles, timing)
