"""Discounted payoffs and regression state variables for the traded instruments.

All payoff functions are vectorized over leading axes: ``path`` has shape
``(..., k)`` holding the fixings on the full schedule and the result has the
leading shape.  Cash flows paid strictly before the valuation time are
already settled and are excluded from the value.

Barriers and targets are monitored discretely at the fixing dates, and an
event triggers when the monitored quantity is greater than or equal to its
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("vanilla", "asian", "barrier_uo", "accum_forward", "tarn")

DIRECTIONS = {
    "vanilla": ("call", "put"),
    "asian": ("call", "put"),
    "barrier_uo": ("call", "put"),
    "accum_forward": ("long", "short"),
    "tarn": ("receiver", "payer"),
}

# (continuous variables, indicator variables) emitted by state_variables.
STATE_LAYOUT = {
    "vanilla": (("spot",), ("above_strike",)),
    "asian": (("projected_average",), ("above_strike",)),
    "barrier_uo": (("spot",), ("knocked",)),
    "accum_forward": (("spot", "period_notional"), ("knocked",)),
    "tarn": (("spot", "accrued"), ("knocked",)),
}

_TIME_EPS = 1e-12


@dataclass(frozen=True)
class InstrumentSpec:
    kind: str
    direction: str
    strike: float = 100.0
    weights: tuple[float, ...] | None = None
    barrier: float = math.inf
    rebate: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    k1: float = 0.0
    k2: float = 0.0
    payment_every: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instrument kind {self.kind!r}")
        if self.direction not in DIRECTIONS[self.kind]:
            raise ValueError(
                f"direction for {self.kind} must be one of {DIRECTIONS[self.kind]}, got {self.direction!r}"
            )
        if self.kind != "tarn" and not self.strike > 0:
            raise ValueError("strike must be positive")
        if not self.barrier > 0:
            raise ValueError("barrier must be positive")
        if self.rebate < 0:
            raise ValueError("rebate must be non-negative")
        if self.payment_every < 1:
            raise ValueError("payment_every must be >= 1")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(x < 0 for x in w) or not sum(w) > 0:
                raise ValueError("asian weights must be non-negative with positive sum")
            object.__setattr__(self, "weights", w)

    def validate(self, s0: float, n_fixings: int) -> None:
        """Checks that depend on the market and the schedule."""
        if self.kind == "barrier_uo" and not self.barrier > s0:
            raise ValueError(f"up-and-out barrier {self.barrier} must exceed s0 = {s0}")
        if self.weights is not None and len(self.weights) != n_fixings:
            raise ValueError(f"{len(self.weights)} weights for {n_fixings} fixings")
        if self.kind in ("accum_forward", "tarn") and n_fixings % self.payment_every:
            raise ValueError(f"{n_fixings} fixings do not split into periods of {self.payment_every}")

    def weight_vector(self, n_fixings: int) -> np.ndarray:
        if self.weights is None:
            return np.full(n_fixings, 1.0 / n_fixings)
        if len(self.weights) != n_fixings:
            raise ValueError(f"{len(self.weights)} weights for {n_fixings} fixings")
        return np.asarray(self.weights)

    def payment_indices(self, n_fixings: int) -> np.ndarray:
        if n_fixings % self.payment_every:
            raise ValueError(f"{n_fixings} fixings do not split into periods of {self.payment_every}")
        return np.arange(self.payment_every - 1, n_fixings, self.payment_every)


@dataclass(frozen=True)
class Discounting:
    """Constant-rate discounting of cash flows on ``times`` to ``valuation_time``."""

    times: np.ndarray
    rate: float
    valuation_time: float = 0.0
    _factors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        live = times >= self.valuation_time - _TIME_EPS
        factors = np.where(live, np.exp(-self.rate * (times - self.valuation_time)), 0.0)
        object.__setattr__(self, "_factors", factors)

    @property
    def factors(self) -> np.ndarray:
        """Discount factor per fixing date; zero for dates already settled."""
        return self._factors


def first_hit(flags: np.ndarray) -> np.ndarray:
    """Index of the first True along the last axis, or its length if none."""
    k = flags.shape[-1]
    return np.where(flags.any(axis=-1), np.argmax(flags, axis=-1), k)


def _sign(spec: InstrumentSpec) -> float:
    return 1.0 if spec.direction in ("call", "long", "payer") else -1.0


def vanilla_payoff(spec: InstrumentSpec, path, discounting: Discounting):
    path = np.asarray(path, dtype=float)
    intrinsic = np.maximum(_sign(spec) * (path[..., -1] - spec.strike), 0.0)
    return intrinsic * discounting.factors[-1]


def asian_payoff(spec: InstrumentSpec, path, discounting: Discounting):
    path = np.asarray(path, dtype=float)
    w = spec.weight_vector(path.shape[-1])
    average = path @ w
    return np.maximum(_sign(spec) * (average - spec.strike), 0.0) * discounting.factors[-1]


def barrier_payoff(spec: InstrumentSpec, path, discounting: Discounting):
    path = np.asarray(path, dtype=float)
    k = path.shape[-1]
    tau = first_hit(path >= spec.barrier)
    knocked = tau < k
    vanilla = np.maximum(_sign(spec) * (path[..., -1] - spec.strike), 0.0) * discounting.factors[-1]
    rebate = spec.rebate * discounting.factors[np.minimum(tau, k - 1)]
    return np.where(knocked, rebate, vanilla)


def accum_forward_payoff(spec: InstrumentSpec, path, discounting: Discounting):
    """Sum over periods of ``(alpha |U_i| + beta |D_i|) * (S_{T_i ^ tau} - K)``.

    ``U_i``/``D_i`` count fixings strictly inside ``(T_{i-1}, T_i)`` and not
    after the knock-out ``tau``, above and at-or-below the strike.  The
    truncated period is settled on its scheduled payment date.
    """
    path = np.asarray(path, dtype=float)
    k = path.shape[-1]
    pay = spec.payment_indices(k)
    tau = first_hit(path >= spec.barrier)
    idx = np.arange(k)
    counted = idx <= tau[..., None]
    above = counted & (path > spec.strike)
    below = counted & (path <= spec.strike)
    total = np.zeros(path.shape[:-1])
    start = -1
    for b in pay:
        up = above[..., start + 1 : b].sum(axis=-1)
        down = below[..., start + 1 : b].sum(axis=-1)
        settle_index = np.minimum(b, tau)
        settle = np.take_along_axis(path, settle_index[..., None], axis=-1)[..., 0]
        notional = spec.alpha * up + spec.beta * down
        total = total + notional * _sign(spec) * (settle - spec.strike) * discounting.factors[b]
        start = b
    return total


def tarn_payoff(spec: InstrumentSpec, path, discounting: Discounting):
    """Receiver: ``sum_i K1 - S_{T_i} 1{tau > T_i} - K2 1{tau <= T_i}``, per-coupon discounted."""
    path = np.asarray(path, dtype=float)
    pay = spec.payment_indices(path.shape[-1])
    fixings = path[..., pay]
    tau = first_hit(np.cumsum(fixings, axis=-1) >= spec.barrier)
    capped = np.arange(pay.size) >= tau[..., None]
    receiver = spec.k1 - np.where(capped, spec.k2, fixings)
    return -_sign(spec) * (receiver * discounting.factors[pay]).sum(axis=-1)


PAYOFFS = {
    "vanilla": vanilla_payoff,
    "asian": asian_payoff,
    "barrier_uo": barrier_payoff,
    "accum_forward": accum_forward_payoff,
    "tarn": tarn_payoff,
}


def payoff(spec: InstrumentSpec, path, discounting: Discounting):
    return PAYOFFS[spec.kind](spec, path, discounting)


def state_matrix(spec: InstrumentSpec, paths, t_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Explanatory variables at ``t_index`` for every row of ``paths``.

    Returns ``(continuous, indicators)`` with shapes ``(n, c)`` and ``(n, d)``,
    columns ordered as in :data:`STATE_LAYOUT`.  Only fixings up to and
    including ``t_index`` are read.
    """
    paths = np.asarray(paths, dtype=float)
    k = paths.shape[-1]
    if not 0 <= t_index < k:
        raise ValueError(f"t_index {t_index} outside [0, {k})")
    seen = paths[..., : t_index + 1]
    spot = seen[..., -1]
    n = spot.shape

    if spec.kind == "vanilla":
        return spot[..., None], (spot >= spec.strike)[..., None].astype(float)
    if spec.kind == "asian":
        w = spec.weight_vector(k)
        projected = seen @ w[: t_index + 1] + spot * w[t_index + 1 :].sum()
        return projected[..., None], (projected >= spec.strike)[..., None].astype(float)
    if spec.kind == "barrier_uo":
        knocked = (seen >= spec.barrier).any(axis=-1)
        return spot[..., None], knocked[..., None].astype(float)
    if spec.kind == "accum_forward":
        pay = spec.payment_indices(k)
        period_start = int(pay[pay < t_index].max()) + 1 if np.any(pay < t_index) else 0
        tau = first_hit(seen >= spec.barrier)
        idx = np.arange(t_index + 1)
        # Payment dates themselves are never counted.
        interior = (idx >= period_start) & ~np.isin(idx, pay)
        counted = interior & (idx <= tau[..., None])
        up = (counted & (seen > spec.strike)).sum(axis=-1)
        down = (counted & (seen <= spec.strike)).sum(axis=-1)
        notional = spec.alpha * up + spec.beta * down
        knocked = tau <= t_index
        return np.stack([spot, notional], axis=-1), knocked[..., None].astype(float)
    # tarn
    pay = spec.payment_indices(k)
    fixed = pay[pay <= t_index]
    cum = np.cumsum(seen[..., fixed], axis=-1)
    if fixed.size:
        accrued = cum[..., -1]
        knocked = (cum >= spec.barrier).any(axis=-1)
    else:
        accrued = np.zeros(n)
        knocked = np.zeros(n, dtype=bool)
    return np.stack([spot, accrued], axis=-1), knocked[..., None].astype(float)


def running_weighted_sum(spec: InstrumentSpec, path, t_index: int):
    """``sum_{i <= t_index} w_i S_i`` for the Asian weights."""
    path = np.asarray(path, dtype=float)
    w = spec.weight_vector(path.shape[-1])
    return path[..., : t_index + 1] @ w[: t_index + 1]


def state_variables(spec: InstrumentSpec, path, t_index: int) -> np.ndarray:
    """Explanatory vector for a single path: continuous values then indicators."""
    continuous, indicators = state_matrix(spec, np.asarray(path, dtype=float)[None, :], t_index)
    return np.concatenate([continuous[0], indicators[0]])
