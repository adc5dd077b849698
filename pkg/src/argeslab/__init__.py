"""Score-based causal structure learning over CPDAGs.

Greedy equivalence search and its restricted and adaptively restricted
variants, with Gaussian, rank-based, and population correlation sources,
a linear-SEM simulator, conditional-independence-graph estimators, and
graph-comparison metrics.
"""

__version__ = "0.1.0"
