"""Estimators of the conditional independence graph used to restrict the
forward search."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .correlation import (CorrSource, DegenerateColumnError, SingularityError,
                          ZERO_CLAMP, _submatrix_inverse)
from .graph_core import Pdag

NEIGHBORHOOD_LASSO = "neighborhood-lasso"
PRECISION_THRESHOLD = "precision-threshold"
OR_RULE = "or"
AND_RULE = "and"

# soft-threshold residue below this is numerically zero
NONZERO_COEF = 1e-9


@dataclass(frozen=True)
class CigConfig:
    method: str = NEIGHBORHOOD_LASSO
    gamma: float = 0.1
    rule: str = OR_RULE
    alpha: float = 0.05
    tol: float = 1e-7
    max_iter: int = 10_000

    def __post_init__(self):
        if self.method not in (NEIGHBORHOOD_LASSO, PRECISION_THRESHOLD):
            raise ValueError(f"unknown CIG method {self.method!r}")
        if self.rule not in (OR_RULE, AND_RULE):
            raise ValueError(f"unknown symmetrization rule {self.rule!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def _standardize(X: np.ndarray):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    for j, s in enumerate(sd):
        if s == 0.0:
            raise DegenerateColumnError(j)
    return (X - mu) / sd, sd


def lasso_regression(X: np.ndarray, y: np.ndarray, gamma: float,
                     tol: float = 1e-7, max_iter: int = 10_000) -> np.ndarray:
    """L1-penalized least squares by cyclic coordinate descent.

    Minimizes (1/(2n)) * ||y - X b||^2 + gamma * ||b||_1 after removing
    means and scaling predictors to unit variance; the returned
    coefficients are mapped back to the original predictor scale.
    Covariance updates: the Gram matrix is formed once, each sweep is
    O(d^2).  Stops when no coefficient moved more than tol; hitting
    max_iter emits a warning and returns the last iterate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two rows")
    Z, sd = _standardize(X)
    yc = y - y.mean()
    G = Z.T @ Z / n
    c = Z.T @ yc / n
    beta = np.zeros(d)
    for _ in range(max_iter):
        max_move = 0.0
        for j in range(d):
            resid_corr = c[j] - G[j] @ beta + G[j, j] * beta[j]
            new = math.copysign(max(abs(resid_corr) - gamma, 0.0), resid_corr)
            new /= G[j, j]
            move = abs(new - beta[j])
            if move > max_move:
                max_move = move
            beta[j] = new
        if max_move < tol:
            break
    else:
        warnings.warn("coordinate descent hit its iteration cap", RuntimeWarning)
    return beta / sd


def neighborhood_selection(data: np.ndarray, cfg: CigConfig,
                           jobs: int | None = None) -> Pdag:
    """Undirected graph from per-node lasso regressions.

    Each column is regressed on all others with penalty cfg.gamma; the
    candidate neighbors are the predictors with coefficients above the
    numeric-zero threshold.  An edge is kept when either endpoint selects
    the other (or rule) or when both do (and rule).  The per-node
    regressions are independent; jobs > 1 runs them on a thread pool.
    """
    X = np.asarray(data, dtype=float)
    n, p = X.shape
    rest = {i: [j for j in range(p) if j != i] for i in range(p)}

    def neighbors_of(i):
        beta = lasso_regression(X[:, rest[i]], X[:, i], cfg.gamma,
                                cfg.tol, cfg.max_iter)
        return {rest[i][k] for k in range(p - 1) if abs(beta[k]) > NONZERO_COEF}

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            selected = list(pool.map(neighbors_of, range(p)))
    else:
        selected = [neighbors_of(i) for i in range(p)]

    edges = set()
    for i in range(p):
        for j in range(i + 1, p):
            picked = (i in selected[j], j in selected[i])
            if (cfg.rule == OR_RULE and any(picked)) or all(picked):
                edges.add((i, j))
    return Pdag(p, undirected=edges)


def precision_threshold_cig(src: CorrSource, n: int | None = None,
                            alpha: float = 0.05) -> Pdag:
    """Undirected graph of pairs dependent given all remaining variables.

    From the inverse correlation matrix, the partial correlation of i and
    j given the rest is -P_ij / sqrt(P_ii P_jj).  Oracle sources keep an
    edge when that magnitude clears the numeric zero clamp; sample sources
    apply the normal approximation of the z-transformed statistic
    sqrt(n - p - 1) * atanh(rho) at two-sided level alpha, which needs
    n > p + 2.
    """
    p = src.p
    inv, _ = _submatrix_inverse(src, list(range(p)))
    d = np.diag(inv)
    if np.any(d <= 0):
        raise SingularityError(range(p))
    rho = -inv / np.sqrt(np.outer(d, d))
    rho = np.clip(rho, -1.0, 1.0)

    if src.is_oracle:
        keep = np.abs(rho) >= ZERO_CLAMP
    else:
        if n is None:
            n = src.n
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if n <= p + 2:
            raise ValueError("need n > p + 2 for the z-test")
        crit = NormalDist().inv_cdf(1.0 - alpha / 2.0)
        with np.errstate(divide="ignore"):
            stat = math.sqrt(n - p - 1) * np.arctanh(rho)
        keep = np.abs(stat) > crit
    edges = {(i, j) for i in range(p) for j in range(i + 1, p) if keep[i, j]}
    return Pdag(p, undirected=edges)


def estimate_cig(data: np.ndarray, cfg: CigConfig,
                 jobs: int | None = None) -> Pdag:
    """Dispatch on cfg.method over a raw dataset."""
    if cfg.method == NEIGHBORHOOD_LASSO:
        return neighborhood_selection(data, cfg, jobs)
    from .correlation import sample_correlation
    src = sample_correlation(data)
    return precision_threshold_cig(src, alpha=cfg.alpha)
