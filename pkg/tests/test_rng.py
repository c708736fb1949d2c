import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from lsmc_exposure.rng import NormalStream, Purpose, StreamKey, open_stream, standard_normals


def test_same_key_same_draws():
    key = StreamKey(42, Purpose.INNER, 3, 17)
    a = open_stream(key).standard_normals(1000)
    b = open_stream(key).standard_normals(1000)
    assert np.array_equal(a, b)


def test_distinct_keys_are_uncorrelated():
    base = open_stream(StreamKey(42, Purpose.INNER, 0, 0)).standard_normals(100_000)
    for other in (StreamKey(42, Purpose.INNER, 0, 1), StreamKey(42, Purpose.INNER, 1, 0),
                  StreamKey(42, Purpose.OUTER, 0, 0), StreamKey(43, Purpose.INNER, 0, 0)):
        z = open_stream(other).standard_normals(100_000)
        assert not np.array_equal(base, z)
        # 5 standard errors of a correlation estimate on 1e5 pairs
        assert abs(np.corrcoef(base, z)[0, 1]) < 5 / np.sqrt(1e5)


def test_normality_ks():
    z = open_stream(StreamKey(42, Purpose.INNER, 0, 0)).standard_normals(1_000_000)
    assert stats.kstest(z, "norm").statistic < 0.002
    assert np.all(np.isfinite(z))


@given(st.lists(st.integers(1, 40), min_size=1, max_size=6), st.booleans())
def test_split_consistency(chunks, antithetic):
    key = StreamKey(7, Purpose.INNER, 2, 5)
    whole = NormalStream(key, antithetic).standard_normals(sum(chunks))
    s = NormalStream(key, antithetic)
    parts = np.concatenate([s.standard_normals(c) for c in chunks])
    assert np.array_equal(whole, parts)
    assert s.position == sum(chunks)


def test_antithetic_pairs():
    z = NormalStream(StreamKey(1, Purpose.BASELINE, 0, 0), antithetic=True).standard_normals(10)
    assert np.array_equal(z[1::2], -z[0::2])
    plain = NormalStream(StreamKey(1, Purpose.BASELINE, 0, 0)).standard_normals(5)
    assert np.array_equal(z[0::2], plain)


def test_normal_matrix_row_major():
    key = StreamKey(5, Purpose.INNER, 0, 0)
    m = open_stream(key).normal_matrix(3, 4)
    assert m.shape == (3, 4)
    assert np.array_equal(m.ravel(), open_stream(key).standard_normals(12))


def test_module_helper_matches_method():
    key = StreamKey(5, Purpose.OUTER, 0, 9)
    assert np.array_equal(standard_normals(open_stream(key), 8), open_stream(key).standard_normals(8))


@pytest.mark.parametrize("count", [0, -3])
def test_count_must_be_positive(count):
    with pytest.raises(ValueError):
        open_stream(StreamKey(1, Purpose.INNER)).standard_normals(count)


@pytest.mark.parametrize("kwargs", [dict(seed=-1), dict(seed=2**64), dict(time_index=-1), dict(scenario_index=-2)])
def test_key_validation(kwargs):
    base = dict(seed=1, purpose=Purpose.INNER, time_index=0, scenario_index=0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        StreamKey(**base)
