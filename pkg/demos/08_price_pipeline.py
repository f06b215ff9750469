"""From raw prices to edge series: the pre-averaged covariance pipeline.

High-frequency covariance estimates drown in microstructure noise unless
the returns are pre-averaged first.  This demo builds a synthetic
two-asset tape with a known integrated correlation plus observation
noise, then shows (1) that pre-averaging recovers the truth where the
naive realized covariance is badly biased, and (2) the rolling pipeline
that turns a multi-asset tape into the pair series the edge models fit.
"""

import numpy as np

from grou import MrcConfig, PriceMatrix, mrc, rolling_mrc

rng = np.random.default_rng(12)
n, rho = 23_400, 0.7  # one second-by-second trading day
chol = np.linalg.cholesky(np.array([[1.0, rho], [rho, 1.0]]))
efficient = (rng.standard_normal((n, 2)) @ chol.T) * 2e-4
log_price = efficient.cumsum(axis=0)
observed = log_price + 1e-4 * rng.standard_normal((n, 2))  # microstructure noise

naive_rv = np.corrcoef(np.diff(observed, axis=0).T)[0, 1]
pre_averaged = mrc(observed, MrcConfig(is_corr=True)).matrix[0, 1]
print(f"true correlation          {rho}")
print(f"naive realized corr       {naive_rv:.3f}   (noise kills it)")
print(f"pre-averaged estimate     {pre_averaged:.3f}")

# Rolling windows over a longer multi-asset tape -> one covariance series
# per asset pair, ready for edge-model fitting.
assets = ("AAA", "BBB", "CCC")
m = 6 * 3600
walk = (rng.standard_normal((m, 3)) * 2e-4).cumsum(axis=0)
tape = PriceMatrix(times=np.arange(float(m)), log_prices=walk + np.log(100), asset_ids=assets)
rolling = rolling_mrc(tape, MrcConfig(), window=3600.0, step=3600.0)
print(f"\nrolling pipeline: {rolling.values.shape[0]} hourly windows, "
      f"pairs {rolling.pair_labels}")
print("first window pair covariances:", np.array2string(rolling.values[0], precision=2))

path = rolling.to_path(mesh_fine=0.01, ratio=1)
print(f"as a fit-ready edge series: {path.n_points} observations x {path.n_edges} pairs")
