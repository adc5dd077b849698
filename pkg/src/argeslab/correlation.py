"""Correlation sources and conditional-correlation queries.

A CorrSource bundles a correlation matrix with an effective sample size
(or the population marker) and feeds every score computation: sample
Pearson, rank-based Spearman/Kendall with their sine transforms, and the
exact population matrix of a linear structural equation model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORACLE = "oracle"
PEARSON = "pearson"
SPEARMAN = "spearman"
KENDALL = "kendall"

# population partial correlations below this magnitude are exact zeros
ZERO_CLAMP = 1e-9


class NumericError(Exception):
    pass


class DegenerateColumnError(NumericError):
    def __init__(self, column: int):
        super().__init__(f"column {column} has zero variance")
        self.column = column


class SingularityError(NumericError):
    def __init__(self, nodes):
        super().__init__(f"singular correlation submatrix over nodes {sorted(nodes)}")
        self.nodes = tuple(sorted(nodes))


@dataclass(frozen=True)
class CorrSource:
    """A p x p correlation matrix with provenance.

    n is the effective sample size, or None for the population (oracle)
    source.  ridge > 0 opts into Tikhonov-regularized submatrix inversion
    for sources whose estimated matrix may be indefinite; regularized
    results are flagged downstream.
    """

    R: np.ndarray
    n: int | None
    kind: str
    ridge: float = 0.0

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(R, R.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(R), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        if np.max(np.abs(R)) > 1.0 + 1e-12:
            raise ValueError("correlation entries must lie in [-1, 1]")
        if self.kind == ORACLE:
            if self.n is not None:
                raise ValueError("oracle sources carry no sample size")
        elif self.n is None or self.n < 2:
            raise ValueError("sample sources need n >= 2")
        R = (R + R.T) / 2.0
        np.fill_diagonal(R, 1.0)
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @property
    def p(self) -> int:
        return self.R.shape[0]

    @property
    def is_oracle(self) -> bool:
        return self.kind == ORACLE


def _column_check(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("dataset must be a 2-d array")
    if data.shape[0] < 2:
        raise ValueError("dataset needs at least two rows")
    stds = data.std(axis=0)
    for col, s in enumerate(stds):
        if s == 0.0:
            raise DegenerateColumnError(col)
    return data


def sample_correlation(data: np.ndarray) -> CorrSource:
    """Pearson correlation matrix of the rows-by-columns dataset."""
    data = _column_check(data)
    R = np.corrcoef(data, rowvar=False)
    R = np.clip(R, -1.0, 1.0)
    return CorrSource(R, n=data.shape[0], kind=PEARSON)


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    x = np.asarray(x)
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    boundaries = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1], True])
    ranks = np.empty(n, dtype=float)
    for s, e in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[s:e]] = (s + e - 1) / 2.0 + 1.0
    return ranks


def kendall_tau(x: np.ndarray, y: np.ndarray) -> float:
    """Tie-corrected Kendall rank correlation (tau-b) in O(n log n).

    Sorts by (x, y), counts discordant pairs as strict inversions of the
    y sequence with a merge sort, and corrects for ties in either margin.
    An O(n^2) pairwise reference, kendall_tau_pairwise, is kept for tests.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]

    def tie_count(v) -> int:
        _, counts = np.unique(v, return_counts=True)
        return int(np.sum(counts * (counts - 1) // 2))

    total = n * (n - 1) // 2
    xtie = tie_count(xs)
    ytie = tie_count(y)
    both = np.flatnonzero(np.r_[True, (xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1]), True])
    xytie = int(sum((e - s) * (e - s - 1) // 2 for s, e in zip(both[:-1], both[1:])))
    if total == xtie or total == ytie:
        raise ValueError("constant margin in rank correlation")
    discordant = _strict_inversions(list(ys))
    con_minus_dis = total - xtie - ytie + xytie - 2 * discordant
    return con_minus_dis / math.sqrt((total - xtie) * (total - ytie))


def _strict_inversions(seq) -> int:
    """Pairs (i, j), i < j, with seq[i] > seq[j], by merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    buf = list(seq)
    tmp = [0] * n
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[j] < buf[i]:
                    count += mid - i
                    tmp[k] = buf[j]
                    j += 1
                else:
                    tmp[k] = buf[i]
                    i += 1
                k += 1
            tmp[k:hi] = buf[i:mid] if i < mid else buf[j:hi]
            buf[lo:hi] = tmp[lo:hi]
        width *= 2
    return count


def kendall_tau_pairwise(x: np.ndarray, y: np.ndarray) -> float:
    """Quadratic tau-b reference: explicit concordant/discordant counting."""
    x = np.asarray(x)
    y = np.asarray(y)
    n = x.shape[0]
    con = dis = xtie = ytie = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                xtie += 1
            elif dy == 0:
                ytie += 1
            elif (dx > 0) == (dy > 0):
                con += 1
            else:
                dis += 1
    total = n * (n - 1) // 2
    tx = sum(1 for i in range(n) for j in range(i + 1, n) if x[i] == x[j])
    ty = sum(1 for i in range(n) for j in range(i + 1, n) if y[i] == y[j])
    return (con - dis) / math.sqrt((total - tx) * (total - ty))


def rank_correlation(data: np.ndarray, kind: str = SPEARMAN) -> CorrSource:
    """Rank-based correlation matrix with the sine transform applied.

    Spearman's rho (Pearson on average ranks) is mapped through
    2 sin(pi rho / 6) and Kendall's tau-b through sin(pi tau / 2); both
    consistently estimate the latent correlation under strictly increasing
    marginal transforms, and the output matrix is exactly invariant to
    such transforms of the data.
    """
    data = _column_check(data)
    n, p = data.shape
    if n < 3:
        raise ValueError("rank correlation needs n >= 3")
    if kind == SPEARMAN:
        ranks = np.column_stack([average_ranks(data[:, j]) for j in range(p)])
        rho = np.corrcoef(ranks, rowvar=False)
        R = 2.0 * np.sin(np.pi * rho / 6.0)
    elif kind == KENDALL:
        R = np.eye(p)
        for a in range(p):
            for b in range(a + 1, p):
                tau = kendall_tau(data[:, a], data[:, b])
                R[a, b] = R[b, a] = math.sin(math.pi * tau / 2.0)
    else:
        raise ValueError(f"unknown rank correlation kind {kind!r}")
    R = np.clip(R, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return CorrSource(R, n=n, kind=kind)


def oracle_correlation(sem) -> CorrSource:
    """Exact population correlation matrix of a linear SEM.

    Builds the covariance (I - B)^-1 D (I - B)^-T with D the diagonal of
    error variances, accumulating (I - B)^-1 row by row along a causal
    order so that pairs without a common ancestor keep exact zeros rather
    than solver noise.
    """
    B = np.asarray(sem.B, dtype=float)
    variances = np.asarray(sem.error_variances, dtype=float)
    if np.any(variances <= 0):
        raise ValueError("error variances must be positive")
    p = B.shape[0]
    indeg = np.count_nonzero(B, axis=1)
    ready = [v for v in range(p) if indeg[v] == 0]
    A = np.zeros((p, p))
    done = 0
    while ready:
        v = ready.pop()
        done += 1
        A[v, v] = 1.0
        pa = np.flatnonzero(B[v])
        if pa.size:
            A[v] += B[v, pa] @ A[pa]
        for w in np.flatnonzero(B[:, v]).tolist():
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if done != p:
        raise ValueError("weight pattern is cyclic")
    sigma = (A * variances) @ A.T
    d = np.sqrt(np.diag(sigma))
    R = sigma / np.outer(d, d)
    R = np.clip((R + R.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return CorrSource(R, n=None, kind=ORACLE)


def _submatrix_inverse(src: CorrSource, idx) -> tuple:
    """Inverse of the correlation submatrix over idx, with the ridge flag."""
    psi = src.R[np.ix_(idx, idx)]
    regularized = False
    if src.ridge > 0.0:
        psi = psi + src.ridge * np.eye(len(idx))
        regularized = True
    try:
        inv = np.linalg.inv(psi)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(idx) from exc
    if not np.all(np.isfinite(inv)):
        raise SingularityError(idx)
    return inv, regularized


def partial_correlation(src: CorrSource, i: int, j: int, s=()) -> float:
    """Partial correlation of i and j given the set s, by matrix inversion.

    Equals -P_12 / sqrt(P_11 P_22) for P the inverse of the correlation
    submatrix over (i, j, s); agrees with the regression-residual
    construction on Pearson sources.

    Examples
    --------
    >>> src = CorrSource(np.eye(3), n=None, kind="oracle")
    >>> partial_correlation(src, 0, 1, {2})
    0.0
    """
    rho, _ = partial_correlation_flagged(src, i, j, s)
    return rho


def partial_correlation_flagged(src: CorrSource, i: int, j: int, s=()) -> tuple:
    """(partial correlation, regularized flag); see partial_correlation."""
    s = sorted(set(s))
    if i == j or i in s or j in s:
        raise ValueError("query nodes must be distinct from the conditioning set")
    if not s:
        return float(src.R[i, j]), False
    idx = [i, j, *s]
    inv, regularized = _submatrix_inverse(src, idx)
    if inv[0, 0] <= 0 or inv[1, 1] <= 0:
        raise SingularityError(idx)
    rho = -inv[0, 1] / math.sqrt(inv[0, 0] * inv[1, 1])
    return float(np.clip(rho, -1.0, 1.0)), regularized


def conditional_variance_ratio(src: CorrSource, i: int, pa=()) -> float:
    """Standardized conditional variance of i given the parent set pa.

    1/(Psi^-1)_11 for Psi the correlation submatrix over (i, pa): the
    fraction of i's variance left after regressing on pa, in (0, 1], equal
    to 1 for an empty parent set, and satisfying the telescoping identity
    ratio(i, pa | {k}) = ratio(i, pa) * (1 - rho_{ik|pa}^2).
    """
    pa = sorted(set(pa))
    if i in pa:
        raise ValueError("node may not be its own parent")
    if not pa:
        return 1.0
    idx = [i, *pa]
    inv, _ = _submatrix_inverse(src, idx)
    if inv[0, 0] <= 0:
        raise SingularityError(idx)
    return float(1.0 / inv[0, 0])
