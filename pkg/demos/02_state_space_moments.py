"""Companion state space and closed-form moments.

An edge process with L autoregressive lags is the first block of a linear
state-space system whose drift matrix stacks identity blocks over the
negated lag coefficient matrices.  Stationarity is a spectrum condition,
and first and second moments follow from one linear solve and one Lyapunov
equation - no simulation involved.
"""

import numpy as np

from grou import (
    GrouParams,
    LevySpec,
    build_companion,
    conditional_moments,
    is_hurwitz,
    path_graph,
    stationary_moments,
    weight_matrices,
)

# Two edges, two lags: per-edge coefficients plus one neighborhood effect
# per lag.  This is the configuration used throughout the consistency
# experiments.
graph = path_graph(3)
weights = weight_matrices(graph, 1)
params = GrouParams(
    alpha=np.array([[4.0, 3.0], [2.0, 1.0]]),
    beta=(np.array([1.0]), np.array([1.0])),
)
system = build_companion(params, weights)
print("lag-1 coefficient matrix:\n", system.lag_matrices[0])
print("transition block structure (4x4):\n", np.round(system.transition, 2))
print("Hurwitz (stationary):", is_hurwitz(system))
print("eigenvalues:", np.round(np.linalg.eigvals(system.transition), 3))

noise = LevySpec(drift=np.array([0.5, -0.2]), brownian_cov=np.eye(2))
m = stationary_moments(system, noise)
print("\nstationary mean:", np.round(m.mean, 4))
print("stationary variance:\n", np.round(m.variance, 4))
print("autocovariance at lag 1:\n", np.round(m.autocov(1.0), 4))

# Conditional moments drive forecasting: from a known state, the mean
# relaxes toward the stationary mean and the variance grows toward the
# stationary variance.
state = np.array([2.0, -1.0, 0.0, 0.0])
for h in (0.1, 0.5, 2.0, 10.0):
    mean, var = conditional_moments(system, noise, state, h)
    print(f"h={h:5.1f}  mean={np.round(mean, 3)}  var diag={np.round(np.diag(var), 3)}")
print("stationary reference   ", np.round(m.mean, 3), np.round(np.diag(m.variance), 3))
