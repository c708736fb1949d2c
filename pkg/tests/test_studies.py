import numpy as np
import pytest

from lsmc_exposure import studies
from lsmc_exposure.studies import GbmCallStudyConfig, SseStudyConfig, VarianceStudyConfig


def test_gbm_call_maturity_hockey_stick():
    (step,) = studies.gbm_call_study(GbmCallStudyConfig(n_outer=400, steps=(23,)))
    payoff = np.maximum(step.spot - 100, 0)
    assert np.allclose(step.bs, payoff)
    assert np.allclose(step.y_mc, payoff, atol=1e-12)
    # the dummy basis contains the kink exactly; a cubic cannot
    assert np.allclose(step.dummy, payoff, atol=1e-8)
    assert step.rmse()["cubic"] > 0.1


def test_variance_rows():
    rows = studies.variance_study(VarianceStudyConfig(n_outer=400, inner_paths=(1, 5, 20)))
    assert [r.p for r in rows] == [1, 5, 20]
    assert rows[0].report is None
    for r in rows[1:]:
        assert r.mc_var.shape == (400,) and r.lsmc_var.shape == (400,)
        assert r.report.theoretical_ratio == pytest.approx(6 / 400)
        assert r.report.total_lsmc_variance <= r.report.total_mc_variance
        assert r.pooled == pytest.approx(r.mc_var.mean())
    # more inner paths, less MC noise
    assert rows[2].report.total_mc_variance < rows[1].report.total_mc_variance


def test_sse_actual_nested():
    rows = studies.sse_study(SseStudyConfig(n_outer=150, inner_paths=(1, 20), truth_paths=1024,
                                            degrees=(1, 2, 3, 5, 8)))
    actual = [r.sse_actual for r in rows if r.inner_paths == 1]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(actual, actual[1:]))
    noisy = {(r.degree, r.inner_paths): r.sse_noisy for r in rows}
    assert noisy[(3, 20)] < noisy[(3, 1)]
