"""Decomposable penalized scores over DAGs, built from conditional-variance
ratios so that the empty graph scores zero and lower is better."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .correlation import (ZERO_CLAMP, CorrSource, NumericError,
                          conditional_variance_ratio,
                          partial_correlation_flagged)
from .graph_core import Dag


class DeterministicDependenceError(NumericError):
    def __init__(self, i, k, pa):
        super().__init__(
            f"|partial correlation| of ({i}, {k}) given {sorted(pa)} is 1; "
            f"the edge delta diverges")


def bic_lambda(n: int) -> float:
    """Per-edge penalty ln(n) / (2n) that turns the score into BIC.

    Twice n times an edge's score delta under this penalty is
    n ln(1 - rho^2) + ln(n), the classic BIC edge comparison.

    Examples
    --------
    >>> round(bic_lambda(10), 5)
    0.11513
    """
    if n < 2:
        raise ValueError("need n >= 2")
    return math.log(n) / (2.0 * n)


@dataclass(frozen=True)
class ScoreDelta:
    """A single-edge score difference and the partial correlation behind it."""
    value: float
    rho: float
    regularized: bool = False


class ScoreModel:
    """Penalized local scores over a fixed correlation source.

    local_score(i, pa) = 0.5 ln(ratio) + lam |pa| with ratio the
    standardized conditional variance of i given pa; sums of local scores
    give DAG scores.  Local values and partial correlations are memoized;
    the cache is a pure memo table and can be disabled for testing.

    For oracle sources, partial correlations within ZERO_CLAMP of zero are
    treated as exact zeros, and the smallest observed nonzero correlation
    maintains the bound that lam must stay below for greedy search at the
    population to be exact (see soundness_bound / soundness_ok).
    """

    def __init__(self, source: CorrSource, lam: float, enable_cache: bool = True):
        if lam < 0:
            raise ValueError("penalty must be non-negative")
        self.source = source
        self.lam = float(lam)
        self.enable_cache = enable_cache
        self._local_cache = {}
        self._rho_cache = {}
        self._min_bound = math.inf

    @property
    def kind(self) -> str:
        return self.source.kind

    @property
    def soundness_bound(self) -> float:
        """min over observed nonzero population rho of -0.5 ln(1 - rho^2)."""
        return self._min_bound

    def soundness_ok(self) -> bool:
        return self.lam < self._min_bound

    def local_score(self, i: int, pa=()) -> float:
        pa_key = tuple(sorted(set(pa)))
        if self.enable_cache:
            hit = self._local_cache.get((i, pa_key))
            if hit is not None:
                return hit
        ratio = conditional_variance_ratio(self.source, i, pa_key)
        value = 0.5 * math.log(ratio) + self.lam * len(pa_key)
        if self.enable_cache:
            self._local_cache[(i, pa_key)] = value
        return value

    def dag_score(self, h: Dag) -> float:
        """Sum of the local scores of every node given its parents in h."""
        return sum(self.local_score(i, h.parents(i)) for i in range(h.p))

    def _rho(self, i: int, k: int, s) -> tuple:
        s_key = tuple(sorted(set(s)))
        # canonical endpoint order: keeps the symmetric cache key and the
        # cache-off path bit-identical
        a, b = (i, k) if i < k else (k, i)
        cache_key = (a, b, s_key)
        if self.enable_cache:
            hit = self._rho_cache.get(cache_key)
            if hit is not None:
                rho, reg = hit
                return rho, reg
        rho, reg = partial_correlation_flagged(self.source, a, b, s_key)
        if self.source.is_oracle:
            if abs(rho) < ZERO_CLAMP:
                rho = 0.0
            else:
                bound = -0.5 * math.log1p(-rho * rho)
                if bound < self._min_bound:
                    self._min_bound = bound
        if self.enable_cache:
            self._rho_cache[cache_key] = (rho, reg)
        return rho, reg

    def add_edge_delta(self, k: int, pa, i: int) -> ScoreDelta:
        """Score change from giving k the extra parent i on top of pa.

        Equals 0.5 ln(1 - rho^2) + lam for rho the partial correlation of
        i and k given pa, which matches the difference of the two local
        scores; negative values are improvements.
        """
        pa = frozenset(pa)
        if i == k or i in pa or k in pa:
            raise ValueError("added parent must be outside {k} and pa")
        rho, reg = self._rho(i, k, pa)
        if 1.0 - rho * rho <= 0.0:
            raise DeterministicDependenceError(i, k, pa)
        return ScoreDelta(0.5 * math.log1p(-rho * rho) + self.lam, rho, reg)

    def delete_edge_delta(self, k: int, pa, i: int) -> ScoreDelta:
        """Score change from removing the parent i of k; pa must contain i."""
        pa = frozenset(pa)
        if i not in pa:
            raise ValueError("deleted parent must be in pa")
        rest = pa - {i}
        rho, reg = self._rho(i, k, rest)
        if 1.0 - rho * rho <= 0.0:
            raise DeterministicDependenceError(i, k, rest)
        return ScoreDelta(-0.5 * math.log1p(-rho * rho) - self.lam, rho, reg)
