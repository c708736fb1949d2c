"""Basis construction and least-squares fitting on cross-sectional samples.

Explanatory variables are mapped affinely onto ``[-1, 1]`` with bounds that
are frozen when the basis is built, then expanded in either monomials or
Forsythe polynomials (polynomials orthogonal under the discrete inner product
of the sample points).  Fits go through a QR factorization of the design
matrix; the hat matrix ``H = X (X^T X)^{-1} X^T`` is never formed, its
diagonal (the leverages) and trace come from the row norms of ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import qr as scipy_qr
from scipy.linalg import solve_triangular

from .errors import DegenerateInputError, RankDeficiencyError

FAMILIES = ("monomial", "monomial_dummy", "forsythe")

# Singular-value ratio (on unit-norm columns) below which X is rank deficient.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class BasisSpec:
    family: str = "forsythe"
    degree: int = 3
    threshold: float | None = None
    bounds: tuple[float, float] | None = None
    max_degree: int = 10

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"basis family must be one of {FAMILIES}, got {self.family!r}")
        if not 0 <= self.degree <= self.max_degree:
            raise ValueError(f"degree must be in [0, {self.max_degree}], got {self.degree}")
        if self.family == "monomial_dummy" and self.threshold is None:
            raise ValueError("monomial_dummy basis needs a threshold")


def scale_to_unit(values, bounds: tuple[float, float] | None = None):
    """Affine map ``v -> (2v - max - min) / (max - min)``.

    Returns ``(scaled, (min, max))``.  When ``bounds`` is given it is used
    as-is, so points outside it are extrapolated beyond ``[-1, 1]``.
    """
    values = np.asarray(values, dtype=float)
    if bounds is None:
        if values.size < 2:
            raise DegenerateInputError("need at least two values to scale")
        lo, hi = float(values.min()), float(values.max())
    else:
        lo, hi = float(bounds[0]), float(bounds[1])
    if not hi > lo:
        raise DegenerateInputError(f"explanatory variable is constant ({lo})")
    return (2.0 * values - hi - lo) / (hi - lo), (lo, hi)


@dataclass(frozen=True)
class ForsytheRecurrence:
    """Recurrence coefficients of polynomials orthogonal on a point set.

    ``p_0 = 1``, ``p_1 = x - a_1``,
    ``p_{j+1} = (x - a_{j+1}) p_j - b_j p_{j-1}``.
    """

    alphas: np.ndarray  # a_1 .. a_m
    betas: np.ndarray  # b_1 .. b_{m-1}

    @property
    def degree(self) -> int:
        return self.alphas.size

    @classmethod
    def from_points(cls, x, degree: int) -> ForsytheRecurrence:
        x = np.asarray(x, dtype=float)
        if x.size <= degree:
            raise RankDeficiencyError(rank=x.size, columns=degree + 1)
        alphas = np.empty(degree)
        betas = np.empty(max(degree - 1, 0))
        prev = np.zeros_like(x)
        cur = np.ones_like(x)
        norm_prev = 1.0
        for j in range(degree):
            norm_cur = cur @ cur
            if not norm_cur > 0:
                raise RankDeficiencyError(rank=j, columns=degree + 1)
            alphas[j] = (x * cur) @ cur / norm_cur
            nxt = (x - alphas[j]) * cur
            if j > 0:
                betas[j - 1] = norm_cur / norm_prev
                nxt -= betas[j - 1] * prev
            prev, cur, norm_prev = cur, nxt, norm_cur
        return cls(alphas, betas)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = np.empty((x.size, self.degree + 1))
        cols[:, 0] = 1.0
        if self.degree >= 1:
            cols[:, 1] = x - self.alphas[0]
        for j in range(1, self.degree):
            cols[:, j + 1] = (x - self.alphas[j]) * cols[:, j] - self.betas[j - 1] * cols[:, j - 1]
        return cols


@dataclass(frozen=True)
class UnivariateBasis:
    """Frozen polynomial expansion of one explanatory variable."""

    family: str
    degree: int
    bounds: tuple[float, float]
    recurrence: ForsytheRecurrence | None = None

    @classmethod
    def build(cls, values, family: str, degree: int, bounds=None) -> UnivariateBasis:
        scaled, bounds = scale_to_unit(values, bounds)
        recurrence = None
        if family == "forsythe":
            recurrence = ForsytheRecurrence.from_points(scaled, degree)
        return cls("forsythe" if family == "forsythe" else "monomial", degree, bounds, recurrence)

    def evaluate(self, values) -> np.ndarray:
        scaled, _ = scale_to_unit(values, self.bounds)
        if self.recurrence is not None:
            return self.recurrence.evaluate(scaled)
        return np.vander(scaled, self.degree + 1, increasing=True)


@dataclass(frozen=True)
class StateBasis:
    """Column recipe for a state of continuous variables plus 0/1 indicators.

    Columns: the full expansion of the first continuous variable, the
    non-constant columns of every further continuous variable, then for each
    indicator either its product with all of those columns (when both groups
    are large enough to identify it), the bare indicator, or nothing (when it
    is constant on the sample).  Columns beyond the first block that are
    numerically dependent on earlier ones are dropped when the basis is built
    (``extra``), so the recipe yields a full-rank design on its sample.
    """

    blocks: tuple[UnivariateBasis | None, ...]
    interactions: tuple[str, ...]  # per indicator: "full", "level" or "none"
    extra: tuple[int, ...] | None = None  # retained columns after the first block

    @classmethod
    def build(cls, continuous, indicators, spec: BasisSpec) -> StateBasis:
        continuous = np.atleast_2d(np.asarray(continuous, dtype=float).T).T
        indicators = np.asarray(indicators, dtype=float).reshape(continuous.shape[0], -1)
        n = continuous.shape[0]
        family = "monomial" if spec.family == "monomial_dummy" else spec.family
        blocks = [UnivariateBasis.build(continuous[:, 0], family, spec.degree, spec.bounds)]
        primary, _ = scale_to_unit(continuous[:, 0], blocks[0].bounds)
        for j in range(1, continuous.shape[1]):
            distinct = np.unique(continuous[:, j]).size
            degree = min(spec.degree, distinct - 1)
            if degree > 0:
                scaled, _ = scale_to_unit(continuous[:, j])
                # An affine copy of the primary variable adds no columns.
                if min(np.abs(scaled - primary).max(), np.abs(scaled + primary).max()) < 1e-9:
                    degree = 0
            blocks.append(
                UnivariateBasis.build(continuous[:, j], family, degree) if degree > 0 else None
            )
        n_base = 1 + sum(b.degree for b in blocks if b is not None)
        interactions = []
        for j in range(indicators.shape[1]):
            minority = int(min(indicators[:, j].sum(), n - indicators[:, j].sum()))
            if minority == 0:
                interactions.append("none")
            elif minority < 2 * n_base:
                interactions.append("level")
            else:
                interactions.append("full")
        draft = cls(tuple(blocks), tuple(interactions))
        X = draft.design(continuous, indicators)
        width = blocks[0].degree + 1
        if X.shape[1] == width:
            return draft
        return cls(draft.blocks, draft.interactions, _independent_columns(X, width))

    def design(self, continuous, indicators) -> np.ndarray:
        continuous = np.atleast_2d(np.asarray(continuous, dtype=float).T).T
        indicators = np.asarray(indicators, dtype=float).reshape(continuous.shape[0], -1)
        first = self.blocks[0].evaluate(continuous[:, 0])
        cols = [first]
        for j, block in enumerate(self.blocks[1:], start=1):
            if block is not None:
                cols.append(block.evaluate(continuous[:, j])[:, 1:])
        base = np.hstack(cols)
        cols = [base]
        for j, mode in enumerate(self.interactions):
            d = indicators[:, j : j + 1]
            if mode == "full":
                cols.append(d * base)
            elif mode == "level":
                cols.append(d)
        X = np.hstack(cols)
        if self.extra is None:
            return X
        width = self.blocks[0].degree + 1
        return X[:, list(range(width)) + [width + j for j in self.extra]]


def _independent_columns(X, width: int, tol: float = 1e-8) -> tuple[int, ...]:
    # Columns after the first `width` that remain independent, by pivoted QR of
    # their unit-norm components orthogonal to the first block.
    head, rest = X[:, :width], X[:, width:]
    norms = np.linalg.norm(rest, axis=0)
    alive = norms > 0
    q, _ = np.linalg.qr(head)
    resid = rest - q @ (q.T @ rest)
    resid = np.where(alive, resid / np.where(alive, norms, 1.0), 0.0)
    _, r, piv = scipy_qr(resid, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    keep = piv[: int(np.sum(diag > tol))]
    return tuple(sorted(int(j) for j in keep))


class DesignMatrix:
    """Design matrix ``X`` with its basis recipe and a cached QR factorization."""

    def __init__(self, X, spec: BasisSpec, basis: StateBasis | None = None, dummy_dropped: bool = False):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("design matrix must be 2-d")
        X.setflags(write=False)
        self.X = X
        self.spec = spec
        self.basis = basis
        self.dummy_dropped = dummy_dropped
        self.column_norms = np.linalg.norm(X, axis=0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    @cached_property
    def _factor(self):
        n, m = self.X.shape
        if n < m or np.any(self.column_norms == 0):
            rank = int(np.linalg.matrix_rank(self.X)) if n else 0
            return None, None, min(rank, m - 1)
        q, r = np.linalg.qr(self.X / self.column_norms, mode="reduced")
        s = np.linalg.svd(r, compute_uv=False)
        rank = int(np.sum(s > RANK_TOL * s[0]))
        return q, r, rank

    @property
    def rank(self) -> int:
        return self._factor[2]

    def _require_full_rank(self):
        q, r, rank = self._factor
        if rank < self.X.shape[1]:
            raise RankDeficiencyError(rank=rank, columns=self.X.shape[1])
        return q, r

    @property
    def q(self) -> np.ndarray:
        return self._require_full_rank()[0]

    def leverages(self) -> np.ndarray:
        """Diagonal of the hat matrix."""
        q = self.q
        return np.einsum("ij,ij->i", q, q)

    def project(self, y) -> np.ndarray:
        """``H y`` for a vector or for each column of a matrix."""
        q = self.q
        return q @ (q.T @ np.asarray(y, dtype=float))

    def evaluate(self, continuous, indicators=None) -> np.ndarray:
        """Rebuild the design at new states with the frozen basis."""
        if self.basis is None:
            raise ValueError("design matrix was built without a reusable basis")
        continuous = np.asarray(continuous, dtype=float)
        if indicators is None:
            indicators = np.empty((continuous.shape[0], 0))
        return self.basis.design(continuous, indicators)


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    sse: float
    rank: int

    def predict(self, X) -> np.ndarray:
        X = X.X if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)
        return X @ self.beta


def forsythe_basis(scaled, degree: int) -> DesignMatrix:
    """Forsythe polynomials ``p_0..p_degree`` evaluated on already-scaled points."""
    scaled = np.asarray(scaled, dtype=float)
    if scaled.size <= degree:
        raise RankDeficiencyError(rank=scaled.size, columns=degree + 1)
    recurrence = ForsytheRecurrence.from_points(scaled, degree)
    spec = BasisSpec("forsythe", degree, bounds=(-1.0, 1.0), max_degree=max(degree, 10))
    basis = StateBasis((UnivariateBasis("forsythe", degree, (-1.0, 1.0), recurrence),), ())
    return DesignMatrix(recurrence.evaluate(scaled), spec, basis)


def monomial_basis(scaled, degree: int) -> DesignMatrix:
    scaled = np.asarray(scaled, dtype=float)
    spec = BasisSpec("monomial", degree, bounds=(-1.0, 1.0), max_degree=max(degree, 10))
    basis = StateBasis((UnivariateBasis("monomial", degree, (-1.0, 1.0)),), ())
    return DesignMatrix(np.vander(scaled, degree + 1, increasing=True), spec, basis)


def monomial_dummy_basis(spots, strike: float, degree: int, bounds=None) -> DesignMatrix:
    """Columns ``1, s, .., s^m, d, d s, .., d s^m`` with ``d = 1{spot >= strike}``.

    ``s`` is the scaled spot; the dummy is evaluated on raw spots.  When the
    dummy is constant on the sample its columns are dropped and
    ``dummy_dropped`` is set on the result.
    """
    spots = np.asarray(spots, dtype=float)
    spec = BasisSpec("monomial_dummy", degree, threshold=strike, bounds=bounds,
                     max_degree=max(degree, 10))
    d = (spots >= strike).astype(float)
    if d.min() == d.max():
        basis = StateBasis.build(spots[:, None], np.empty((spots.size, 0)), spec)
        return DesignMatrix(basis.design(spots[:, None], np.empty((spots.size, 0))), spec, basis,
                            dummy_dropped=True)
    uni = UnivariateBasis.build(spots, "monomial", degree, bounds)
    basis = StateBasis((uni,), ("full",))
    return DesignMatrix(basis.design(spots[:, None], d[:, None]), spec, basis)


def build_design(continuous, indicators, spec: BasisSpec) -> DesignMatrix:
    """Design matrix for instrument state variables under ``spec``."""
    continuous = np.asarray(continuous, dtype=float)
    if continuous.ndim == 1:
        continuous = continuous[:, None]
    n = continuous.shape[0]
    indicators = np.asarray(indicators, dtype=float).reshape(n, -1)
    if spec.family == "monomial_dummy":
        indicators = np.hstack([indicators, (continuous[:, :1] >= spec.threshold).astype(float)])
    basis = StateBasis.build(continuous, indicators, spec)
    return DesignMatrix(basis.design(continuous, indicators), spec, basis)


def fit(X: DesignMatrix | np.ndarray, y) -> FitResult:
    """Least-squares coefficients, fitted values ``H y`` and residuals."""
    if not isinstance(X, DesignMatrix):
        X = DesignMatrix(X, BasisSpec("monomial", 0))
    y = np.asarray(y, dtype=float)
    n, m = X.shape
    if y.shape != (n,):
        raise ValueError(f"response has shape {y.shape}, expected ({n},)")
    if n < m:
        raise RankDeficiencyError(rank=n, columns=m)
    q, r = X._require_full_rank()
    qty = q.T @ y
    beta = solve_triangular(r, qty) / X.column_norms
    fitted = X.X @ beta
    residuals = y - fitted
    return FitResult(beta, fitted, residuals, float(residuals @ residuals), X.rank)


def hat_trace(X: DesignMatrix | np.ndarray) -> float:
    """``tr(H)``; equals the column count for a full-rank design."""
    if not isinstance(X, DesignMatrix):
        X = DesignMatrix(X, BasisSpec("monomial", 0))
    return float(np.sum(X.q * X.q))
