import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsmc_exposure import instruments as inst
from lsmc_exposure.instruments import Discounting, InstrumentSpec

K = 24
TIMES = (15 / 360) * np.arange(1, K + 1)
R = 0.05


def _paths(n, seed=0, vol=0.06):
    rng = np.random.default_rng(seed)
    return 100 * np.exp(np.cumsum(vol * rng.standard_normal((n, K)), axis=1))


def _df(t, v=0.0):
    return math.exp(-R * (TIMES[t] - v)) if TIMES[t] >= v - 1e-12 else 0.0


# Loop-based oracles written directly from the contract definitions.

def barrier_oracle(path, strike, barrier, rebate, sign):
    for j, s in enumerate(path):
        if s >= barrier:
            return rebate * _df(j)
    return max(sign * (path[-1] - strike), 0) * _df(K - 1)


def accum_oracle(path, strike, barrier, alpha, beta, every, sign):
    tau = next((j for j, s in enumerate(path) if s >= barrier), K)
    total, start = 0.0, 0
    for b in range(every - 1, K, every):
        up = sum(1 for j in range(start, b) if j <= tau and path[j] > strike)
        down = sum(1 for j in range(start, b) if j <= tau and path[j] <= strike)
        settle = path[min(b, tau)]
        total += (alpha * up + beta * down) * sign * (settle - strike) * _df(b)
        start = b + 1
    return total


def tarn_oracle(path, target, k1, k2, every, v=0.0):
    acc, capped, total = 0.0, False, 0.0
    for b in range(every - 1, K, every):
        acc += path[b]
        capped = capped or acc >= target
        total += (k1 - (k2 if capped else path[b])) * _df(b, v)
    return total


def test_vanilla_and_asian():
    p = _paths(50)
    disc = Discounting(TIMES, R)
    call = InstrumentSpec("vanilla", "call", strike=100)
    assert np.allclose(inst.payoff(call, p, disc), np.maximum(p[:, -1] - 100, 0) * math.exp(-R))
    put = InstrumentSpec("asian", "put", strike=100)
    assert np.allclose(inst.payoff(put, p, disc), np.maximum(100 - p.mean(axis=1), 0) * math.exp(-R))
    w = tuple(np.linspace(1, 2, K))
    weighted = InstrumentSpec("asian", "call", strike=100, weights=w)
    avg = p @ np.array(w)
    assert np.allclose(inst.payoff(weighted, p, disc), np.maximum(avg - 100, 0) * math.exp(-R))


@pytest.mark.parametrize("direction, sign", [("call", 1), ("put", -1)])
def test_barrier_matches_oracle(direction, sign):
    spec = InstrumentSpec("barrier_uo", direction, strike=100, barrier=112, rebate=2.5)
    p = _paths(300, 1)
    got = inst.payoff(spec, p, Discounting(TIMES, R))
    want = [barrier_oracle(row, 100, 112, 2.5, sign) for row in p]
    assert np.allclose(got, want, atol=1e-12)
    assert 0 < np.mean(p.max(axis=1) >= 112) < 1


@pytest.mark.parametrize("direction, sign", [("long", 1), ("short", -1)])
def test_accumulator_matches_oracle(direction, sign):
    spec = InstrumentSpec("accum_forward", direction, strike=99, barrier=110, alpha=1, beta=2, payment_every=6)
    p = _paths(300, 2)
    got = inst.payoff(spec, p, Discounting(TIMES, R))
    want = [accum_oracle(row, 99, 110, 1, 2, 6, sign) for row in p]
    assert np.allclose(got, want, atol=1e-10)


def test_tarn_matches_oracle():
    spec = InstrumentSpec("tarn", "receiver", strike=100, barrier=300, k1=102, k2=100, payment_every=6)
    p = _paths(300, 3)
    got = inst.payoff(spec, p, Discounting(TIMES, R))
    want = [tarn_oracle(row, 300, 102, 100, 6) for row in p]
    assert np.allclose(got, want, atol=1e-10)
    payer = InstrumentSpec("tarn", "payer", strike=100, barrier=300, k1=102, k2=100, payment_every=6)
    assert np.allclose(inst.payoff(payer, p, Discounting(TIMES, R)), -got)


def test_settled_coupons_excluded():
    spec = InstrumentSpec("tarn", "receiver", strike=100, barrier=1e9, k1=102, k2=100, payment_every=6)
    p = _paths(20, 4)
    v = TIMES[8]
    got = inst.payoff(spec, p, Discounting(TIMES, R, v))
    want = [tarn_oracle(row, 1e9, 102, 100, 6, v) for row in p]
    assert np.allclose(got, want)


def test_barrier_above_every_path_is_vanilla():
    p = _paths(100, 5)
    disc = Discounting(TIMES, R)
    barrier = InstrumentSpec("barrier_uo", "call", strike=100, barrier=1e6, rebate=3)
    vanilla = InstrumentSpec("vanilla", "call", strike=100)
    assert np.array_equal(inst.payoff(barrier, p, disc), inst.payoff(vanilla, p, disc))


@given(st.floats(101, 200))
def test_barrier_value_monotone_in_level(b):
    """Raising an up-and-out barrier can only keep more paths alive (zero rebate)."""
    p = _paths(200, 6)
    disc = Discounting(TIMES, R)
    low = inst.payoff(InstrumentSpec("barrier_uo", "call", barrier=b), p, disc)
    high = inst.payoff(InstrumentSpec("barrier_uo", "call", barrier=b + 5), p, disc)
    assert np.all(high >= low - 1e-12)


def test_knockout_ignores_fixings_after_tau():
    """Accumulator value depends on the path only up to the knock-out fixing."""
    spec = InstrumentSpec("accum_forward", "long", strike=99, barrier=110, payment_every=6)
    p = _paths(200, 7)
    tau = inst.first_hit(p >= 110)
    q = p.copy()
    for i, t in enumerate(tau):
        if t < K - 1:
            q[i, t + 1 :] = 50.0
    disc = Discounting(TIMES, R)
    assert np.allclose(inst.payoff(spec, p, disc), inst.payoff(spec, q, disc))


def test_first_hit():
    flags = np.array([[False, True, True], [False, False, False]])
    assert inst.first_hit(flags).tolist() == [1, 3]


def test_state_matrix_layouts():
    p = _paths(40, 8)
    for kind, (cont, ind) in inst.STATE_LAYOUT.items():
        spec = InstrumentSpec(kind, inst.DIRECTIONS[kind][0], barrier=130.0 if kind != "tarn" else 380.0,
                              payment_every=6 if kind in ("accum_forward", "tarn") else 1)
        c, d = inst.state_matrix(spec, p, 10)
        assert c.shape == (40, len(cont)) and d.shape == (40, len(ind))
        assert set(np.unique(d)) <= {0.0, 1.0}
        assert np.array_equal(inst.state_variables(spec, p[3], 10), np.concatenate([c[3], d[3]]))


def test_state_reads_only_past_fixings():
    p = _paths(40, 9)
    q = p.copy()
    q[:, 11:] *= 3
    for kind in inst.KINDS:
        spec = InstrumentSpec(kind, inst.DIRECTIONS[kind][0], barrier=130.0 if kind != "tarn" else 380.0,
                              payment_every=6 if kind in ("accum_forward", "tarn") else 1)
        for a, b in zip(inst.state_matrix(spec, p, 10), inst.state_matrix(spec, q, 10)):
            assert np.array_equal(a, b)


def test_asian_projected_average():
    spec = InstrumentSpec("asian", "put")
    p = _paths(10, 10)
    c, d = inst.state_matrix(spec, p, 5)
    b = inst.running_weighted_sum(spec, p, 5)
    assert np.allclose(b, p[:, :6].sum(axis=1) / K)
    assert np.allclose(c[:, 0], b + p[:, 5] * (K - 6) / K)
    assert np.array_equal(d[:, 0], (c[:, 0] >= 100).astype(float))
    # at maturity the projection is the realized average
    c_end, _ = inst.state_matrix(spec, p, K - 1)
    assert np.allclose(c_end[:, 0], p.mean(axis=1))


def test_tarn_accrued_state():
    spec = InstrumentSpec("tarn", "receiver", barrier=205, payment_every=6)
    p = np.full((1, K), 100.0)
    p[0, 5] = 104.0
    c, d = inst.state_matrix(spec, p, 12)
    assert c[0, 1] == pytest.approx(204.0) and d[0, 0] == 0
    c, d = inst.state_matrix(spec, p, 17)
    assert c[0, 1] == pytest.approx(304.0) and d[0, 0] == 1


@pytest.mark.parametrize("kwargs", [
    dict(kind="swap", direction="call"),
    dict(kind="vanilla", direction="long"),
    dict(kind="vanilla", direction="call", strike=0),
    dict(kind="barrier_uo", direction="call", rebate=-1),
    dict(kind="asian", direction="put", weights=(-1.0, 2.0)),
    dict(kind="tarn", direction="payer", payment_every=0),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        InstrumentSpec(**kwargs)


def test_market_validation():
    with pytest.raises(ValueError):
        InstrumentSpec("barrier_uo", "call", barrier=90).validate(100, K)
    with pytest.raises(ValueError):
        InstrumentSpec("tarn", "receiver", payment_every=5).validate(100, K)
    with pytest.raises(ValueError):
        InstrumentSpec("asian", "put", weights=(1.0, 1.0)).validate(100, K)
