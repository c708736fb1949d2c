"""GBM path generation and the Black-Scholes reference price."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .rng import NormalStream, Purpose, StreamKey, open_stream


@dataclass(frozen=True)
class GbmParams:
    """Constant-coefficient GBM.

    ``drift`` is the real-world drift for outer scenarios and the
    risk-neutral drift for inner pricing paths; ``rate`` is the constant
    discounting rate.
    """

    s0: float
    drift: float
    volatility: float
    rate: float = 0.05

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if not self.volatility > 0:
            raise ValueError(f"volatility must be positive, got {self.volatility}")

    def risk_neutral(self) -> GbmParams:
        return GbmParams(self.s0, self.rate, self.volatility, self.rate)


@dataclass(frozen=True)
class FixingSchedule:
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("schedule needs a non-empty 1-d vector of times")
        if times[0] <= 0 or np.any(np.diff(times) <= 0):
            raise ValueError("schedule times must be positive and strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @classmethod
    def regular(cls, maturity: float, interval_days: int = 15, day_count: int = 360) -> FixingSchedule:
        """Fixings every ``interval_days`` up to and including maturity."""
        step = interval_days / day_count
        count = int(round(maturity / step))
        if count < 1 or not np.isclose(count * step, maturity):
            raise ValueError(
                f"maturity {maturity} is not a whole number of {interval_days}-day intervals"
            )
        return cls(step * np.arange(1, count + 1))

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return self.times.size

    def increments(self) -> np.ndarray:
        return np.diff(self.times, prepend=0.0)


@dataclass(frozen=True)
class ScenarioSet:
    schedule: FixingSchedule
    paths: np.ndarray  # (n, k)
    params: GbmParams
    seed: int

    @property
    def n(self) -> int:
        return self.paths.shape[0]


def gbm_step(s: float, drift: float, sigma: float, dt: float, z: float) -> float:
    if not (s > 0 and sigma > 0 and dt > 0):
        raise ValueError("gbm_step needs s > 0, sigma > 0 and dt > 0")
    return s * np.exp((drift - 0.5 * sigma * sigma) * dt + sigma * np.sqrt(dt) * z)


def _evolve(start, drift, sigma, dts, z):
    # Exact log-Euler scheme; start has shape (rows,) or scalar, z shape (rows, len(dts)).
    log_inc = (drift - 0.5 * sigma * sigma) * dts + sigma * np.sqrt(dts) * z
    return np.asarray(start)[..., None] * np.exp(np.cumsum(log_inc, axis=-1))


def generate_outer(params: GbmParams, schedule: FixingSchedule, n: int, seed: int) -> ScenarioSet:
    """Real-world scenarios; row ``i`` is drawn from its own outer stream."""
    if n < 2:
        raise ValueError(f"need at least 2 outer scenarios, got {n}")
    k = len(schedule)
    z = np.empty((n, k))
    for i in range(n):
        z[i] = open_stream(StreamKey(seed, Purpose.OUTER, 0, i)).standard_normals(k)
    paths = _evolve(np.full(n, params.s0), params.drift, params.volatility, schedule.increments(), z)
    paths.setflags(write=False)
    return ScenarioSet(schedule, paths, params, seed)


def simulate_inner_tail(
    scenario_state: np.ndarray,
    params: GbmParams,
    schedule: FixingSchedule,
    t_index: int,
    p: int,
    stream: NormalStream | StreamKey,
    antithetic: bool = False,
) -> np.ndarray:
    """``p`` risk-neutral continuations of the fixings after ``t_index``.

    ``scenario_state`` holds the realized fixings ``0..t_index``; only its last
    entry (the current spot) drives the continuation.  With ``antithetic``
    the second half of the rows mirror the normals of the first half.
    """
    k = len(schedule)
    if not 0 <= t_index < k:
        raise ValueError(f"t_index {t_index} outside [0, {k})")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    state = np.asarray(scenario_state, dtype=float)
    if state.shape[-1] != t_index + 1:
        raise ValueError(f"scenario_state must hold {t_index + 1} realized fixings")
    remaining = k - 1 - t_index
    if remaining == 0:
        return np.empty((p, 0))
    if isinstance(stream, StreamKey):
        stream = open_stream(stream)
    if antithetic:
        half = stream.normal_matrix((p + 1) // 2, remaining)
        z = np.vstack([half, -half])[:p]
    else:
        z = stream.normal_matrix(p, remaining)
    dts = np.diff(schedule.times[t_index:])
    return _evolve(np.full(p, state[-1]), params.drift, params.volatility, dts, z)


def black_scholes(s, strike, rate, sigma, tau, kind: str = "call"):
    """European price; returns intrinsic value when ``tau == 0``.

    Works elementwise on arrays for ``s`` and ``tau``.
    """
    s = np.asarray(s, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    sign = 1.0 if kind == "call" else -1.0
    intrinsic = np.maximum(sign * (s - strike), 0.0)
    live = tau > 0
    safe_tau = np.where(live, tau, 1.0)
    vol_t = sigma * np.sqrt(safe_tau)
    d1 = (np.log(s / strike) + (rate + 0.5 * sigma * sigma) * safe_tau) / vol_t
    d2 = d1 - vol_t
    df = np.exp(-rate * safe_tau)
    price = sign * (s * ndtr(sign * d1) - strike * df * ndtr(sign * d2))
    out = np.where(live, price, intrinsic)
    return float(out) if out.ndim == 0 else out
