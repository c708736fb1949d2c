import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from lsmc_exposure.errors import DegenerateInputError, RankDeficiencyError
from lsmc_exposure.regression import (
    BasisSpec,
    DesignMatrix,
    ForsytheRecurrence,
    build_design,
    fit,
    forsythe_basis,
    hat_trace,
    monomial_basis,
    monomial_dummy_basis,
    scale_to_unit,
)

RNG = np.random.default_rng(2024)
SPOTS = 100 * np.exp(0.2 * RNG.standard_normal(800))
Y = np.maximum(SPOTS - 100, 0) + RNG.standard_normal(800)


def test_scaling_endpoints_and_extrapolation():
    scaled, bounds = scale_to_unit([2.0, 4.0, 3.0, 6.0])
    assert bounds == (2.0, 6.0)
    assert np.allclose(scaled, [-1, 0, -0.5, 1])
    out, _ = scale_to_unit([8.0], bounds)
    assert out[0] == pytest.approx(2.0)
    with pytest.raises(DegenerateInputError):
        scale_to_unit([5.0, 5.0, 5.0])


def test_forsythe_columns_orthogonal():
    x, _ = scale_to_unit(SPOTS)
    X = forsythe_basis(x, 8).X
    gram = X.T @ X
    off = gram - np.diag(np.diag(gram))
    # normalized off-diagonal inner products
    scale = np.sqrt(np.outer(np.diag(gram), np.diag(gram)))
    assert np.max(np.abs(off / scale)) < 1e-10


def test_forsythe_three_term_recurrence_by_hand():
    # points {-1, 0, 1}: p1 = x, p2 = x^2 - 2/3
    rec = ForsytheRecurrence.from_points([-1.0, 0.0, 1.0], 2)
    assert np.allclose(rec.alphas, [0.0, 0.0])
    assert np.allclose(rec.betas, [2 / 3])
    assert np.allclose(rec.evaluate([-1.0, 0.0, 1.0]), [[1, -1, 1 / 3], [1, 0, -2 / 3], [1, 1, 1 / 3]])


@pytest.mark.parametrize("degree", [1, 3, 5, 8])
def test_forsythe_and_monomial_span_same_space(degree):
    x, _ = scale_to_unit(SPOTS)
    a = fit(forsythe_basis(x, degree), Y)
    b = fit(monomial_basis(x, degree), Y)
    assert np.allclose(a.fitted, b.fitted, atol=1e-8)


def test_fit_matches_normal_equations():
    x, _ = scale_to_unit(SPOTS)
    X = monomial_basis(x, 3)
    beta = np.linalg.solve(X.X.T @ X.X, X.X.T @ Y)
    res = fit(X, Y)
    assert np.allclose(res.beta, beta, rtol=1e-9)
    assert res.sse == pytest.approx(float(np.sum((Y - X.X @ beta) ** 2)), rel=1e-10)
    assert np.allclose(res.predict(X), res.fitted)
    assert np.allclose(X.X.T @ res.residuals, 0, atol=1e-8)


def test_fit_accepts_plain_arrays():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    res = fit(X, 2 + 3 * np.arange(5.0))
    assert np.allclose(res.beta, [2, 3])
    assert res.sse == pytest.approx(0, abs=1e-20)


def test_fit_shape_errors():
    x, _ = scale_to_unit(SPOTS)
    with pytest.raises(ValueError):
        fit(monomial_basis(x, 2), Y[:-1])
    with pytest.raises(RankDeficiencyError):
        fit(np.ones((3, 4)), np.ones(3))


def test_rank_deficiency_detected():
    x = np.linspace(0, 1, 50)
    X = np.column_stack([np.ones(50), x, 2 * x + 1])
    with pytest.raises(RankDeficiencyError) as info:
        fit(X, x)
    assert info.value.rank == 2 and info.value.columns == 3


@given(hnp.arrays(float, (30, 4), elements=st.floats(-10, 10)))
def test_hat_matrix_properties(A):
    X = DesignMatrix(np.column_stack([np.ones(30), A]), BasisSpec())
    if X.rank < 5:
        return
    H = X.q @ X.q.T
    assert np.allclose(H, H.T, atol=1e-10)
    assert np.allclose(H @ H, H, atol=1e-8)
    assert hat_trace(X) == pytest.approx(5, abs=1e-8)
    lev = X.leverages()
    assert np.all(lev >= -1e-12) and np.all(lev <= 1 + 1e-12)
    assert np.allclose(lev, np.diag(H))
    y = A[:, 0] ** 2
    assert np.allclose(X.project(y), H @ y, atol=1e-8)


def test_hat_trace_equals_column_count():
    x, _ = scale_to_unit(SPOTS)
    assert hat_trace(forsythe_basis(x, 5)) == pytest.approx(6, abs=1e-10)
    assert forsythe_basis(x, 5).rank == 6


def test_monomial_dummy_columns():
    X = monomial_dummy_basis(SPOTS, 100.0, 3)
    assert X.shape == (800, 8) and not X.dummy_dropped
    d = (SPOTS >= 100).astype(float)
    assert np.array_equal(X.X[:, 4], d)
    assert np.allclose(X.X[:, 5:], X.X[:, 1:4] * d[:, None])


def test_monomial_dummy_drops_constant_dummy():
    X = monomial_dummy_basis(SPOTS + 1000, 100.0, 3)
    assert X.dummy_dropped and X.shape == (800, 4)


def test_design_recipe_reproducible_off_sample():
    X = build_design(SPOTS, np.empty((800, 0)), BasisSpec("forsythe", 4))
    again = X.evaluate(SPOTS[:, None])
    assert np.allclose(again, X.X)
    assert X.evaluate(np.array([[90.0], [110.0]])).shape == (2, 5)


def test_indicator_interaction_modes():
    ind = (SPOTS >= 100).astype(float)[:, None]
    full = build_design(SPOTS, ind, BasisSpec("forsythe", 3))
    assert full.basis.interactions == ("full",) and full.shape[1] == 8
    rare = np.zeros((800, 1))
    rare[:3] = 1
    level = build_design(SPOTS, rare, BasisSpec("forsythe", 3))
    assert level.basis.interactions == ("level",) and level.shape[1] == 5
    none = build_design(SPOTS, np.zeros((800, 1)), BasisSpec("forsythe", 3))
    assert none.basis.interactions == ("none",) and none.shape[1] == 4


def test_affine_copy_of_primary_adds_nothing():
    X = build_design(np.column_stack([SPOTS, 3 * SPOTS - 1]), np.empty((800, 0)), BasisSpec("forsythe", 3))
    assert X.shape[1] == 4


def test_dependent_extra_columns_dropped():
    other = np.round(SPOTS / 50)  # three distinct values
    X = build_design(np.column_stack([SPOTS, other]), (SPOTS > 120).astype(float)[:, None],
                     BasisSpec("forsythe", 3))
    assert X.rank == X.shape[1]


def test_basis_spec_validation():
    with pytest.raises(ValueError):
        BasisSpec("chebyshev")
    with pytest.raises(ValueError):
        BasisSpec(degree=11)
    with pytest.raises(ValueError):
        BasisSpec("monomial_dummy")
