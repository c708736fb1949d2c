"""Monte-Carlo covariance of inner-loop prices and its image under the hat matrix.

For ``n`` scenarios priced with ``p`` inner paths each, the unbiased estimator
of the covariance of the price vector is

    Sigma_ij = sum_k (f_ki - y_i) (f_kj - y_j) / (p (p - 1)).

In ``full`` mode the estimator is kept in factored form ``Sigma = C C^T`` with
``C`` the ``n x p`` matrix of scaled, centered payoffs, so traces of
``Sigma`` and ``H Sigma H`` never need an ``n x n`` array.  Cross terms are
only meaningful when path ``k`` is shared by all scenarios (common random
numbers); with independent inner draws their expectation is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import DesignMatrix

MODES = ("diagonal", "full")


@dataclass(frozen=True)
class McCovariance:
    mode: str
    p: int
    diagonal_values: np.ndarray
    factor: np.ndarray | None = None  # (n, p), full mode
    dense: np.ndarray | None = None  # (n, n), full mode built from a matrix

    @property
    def n(self) -> int:
        return self.diagonal_values.size

    @property
    def values(self) -> np.ndarray:
        """Diagonal entries (diagonal mode) or the dense matrix (full mode)."""
        return self.diagonal_values if self.mode == "diagonal" else self.matrix()

    def trace(self) -> float:
        return float(self.diagonal_values.sum())

    def matrix(self) -> np.ndarray:
        if self.mode == "diagonal":
            return np.diag(self.diagonal_values)
        if self.dense is not None:
            return self.dense
        return self.factor @ self.factor.T

    @classmethod
    def from_diagonal(cls, values, p: int) -> McCovariance:
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise ValueError("variances must be non-negative")
        return cls("diagonal", p, values)

    @classmethod
    def from_matrix(cls, sigma, p: int = 0) -> McCovariance:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(sigma, sigma.T, atol=1e-8 * max(1.0, np.abs(sigma).max())):
            raise ValueError("covariance must be symmetric")
        return cls("full", p, np.diag(sigma).copy(), dense=sigma)


@dataclass(frozen=True)
class VarianceReport:
    total_mc_variance: float
    total_lsmc_variance: float
    ratio: float
    theoretical_ratio: float

    @property
    def reduction(self) -> float:
        return 1.0 - self.ratio


def mc_covariance(payoffs, mode: str = "diagonal") -> McCovariance:
    """Unbiased covariance estimator of the p-path mean prices.

    ``payoffs`` has one row per scenario and one column per inner path.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    f = np.asarray(payoffs, dtype=float)
    if f.ndim != 2:
        raise ValueError("payoffs must be an (n, p) matrix")
    n, p = f.shape
    if p < 2:
        raise ValueError(f"covariance estimator needs p >= 2 inner paths, got {p}")
    centered = f - f.mean(axis=1, keepdims=True)
    diag = np.einsum("ij,ij->i", centered, centered) / (p * (p - 1))
    if mode == "diagonal":
        return McCovariance("diagonal", p, diag)
    return McCovariance("full", p, diag, factor=centered / np.sqrt(p * (p - 1)))


def pooled_sigma2(cov: McCovariance) -> float:
    return float(cov.diagonal_values.mean())


def _check(X: DesignMatrix, cov: McCovariance) -> None:
    if X.shape[0] != cov.n:
        raise ValueError(f"design has {X.shape[0]} rows but covariance has dimension {cov.n}")


def lsmc_covariance_trace(X: DesignMatrix, cov: McCovariance) -> float:
    """``tr(H Sigma H)``."""
    _check(X, cov)
    if cov.mode == "diagonal":
        # tr(H D H) = sum_i h_ii d_i for diagonal D since H is a projection.
        return float(X.leverages() @ cov.diagonal_values)
    q = X.q
    if cov.factor is not None:
        qc = q.T @ cov.factor
        return float(np.sum(qc * qc))
    return float(np.trace(q.T @ cov.dense @ q))


def residual_covariance_trace(X: DesignMatrix, cov: McCovariance) -> float:
    """``tr((I - H) Sigma (I - H))``."""
    _check(X, cov)
    q = X.q
    if cov.mode == "diagonal":
        # diag((I-H) D (I-H))_i = d_i - 2 h_ii d_i + sum_j h_ij^2 d_j
        m = q.T @ (cov.diagonal_values[:, None] * q)
        hdh = np.einsum("ij,jk,ik->i", q, m, q)
        return float(np.sum(cov.diagonal_values * (1.0 - 2.0 * X.leverages()) + hdh))
    if cov.factor is not None:
        r = cov.factor - q @ (q.T @ cov.factor)
        return float(np.sum(r * r))
    s = cov.dense
    hs = q @ (q.T @ s)
    r = s - hs - hs.T + q @ (q.T @ hs.T)
    return float(np.trace(r))


def lsmc_variance_diagonal(X: DesignMatrix, cov: McCovariance) -> np.ndarray:
    """Per-scenario variances of the fitted prices, ``diag(H Sigma H)``."""
    _check(X, cov)
    q = X.q
    if cov.mode == "diagonal":
        m = q.T @ (cov.diagonal_values[:, None] * q)
    elif cov.factor is not None:
        qc = q.T @ cov.factor
        m = qc @ qc.T
    else:
        m = q.T @ cov.dense @ q
    return np.einsum("ij,jk,ik->i", q, m, q)


def lsmc_covariance(X: DesignMatrix, cov: McCovariance) -> VarianceReport:
    total_mc = cov.trace()
    total_lsmc = lsmc_covariance_trace(X, cov)
    ratio = total_lsmc / total_mc if total_mc > 0 else float("nan")
    return VarianceReport(total_mc, total_lsmc, ratio, X.rank / X.shape[0])
