"""Sample-path generation on two-scale observation grids.

Paths are recorded on a fine grid (used later for finite differences) that
carries a coarser sub-grid (used for stochastic-integral sums).  Between
fine-grid points the diffusion and compound-Poisson regimes use the exact
conditional-Gaussian recursion

    X_{t+dt} = expm(dt*T) X_t + drift + N(0, V(dt)) + jump responses,

with each jump propagated from its exact arrival time, so the scheme is
distribution-exact between jumps.  The infinite-activity Gamma regime is
composed by Euler-Maruyama steps over exactly-sampled increments.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .errors import StationarityError
from .model import (
    CompanionSystem,
    GrouParams,
    cov_integral,
    drift_integral,
    is_hurwitz,
    spectral_abscissa,
    stationary_moments,
)
from .noise import (
    IncrementBatch,
    LevySpec,
    SymmetricGammaJumps,
    psd_factor,
    sample_increments,
    stream_rng,
)

__all__ = [
    "TwoScaleGrid",
    "SampledPath",
    "PathTruth",
    "make_uniform_grids",
    "power_law_grids",
    "grid_from_times",
    "simulate_path",
    "write_path_csv",
    "read_path_csv",
]

BURN_IN_RELAXATION = 5.0


@dataclass(frozen=True)
class TwoScaleGrid:
    """A fine observation grid with a coarse sub-grid.

    ``coarse_idx`` indexes into ``fine``; both grids start at time zero and
    end at the horizon.  Uniformity of either grid is *not* required, only
    reported through the ``uniformity_*`` properties.
    """

    fine: np.ndarray
    coarse_idx: np.ndarray

    def __post_init__(self):
        fine = np.asarray(self.fine, dtype=float)
        idx = np.asarray(self.coarse_idx, dtype=int)
        if fine.ndim != 1 or fine.size < 2 or np.any(np.diff(fine) <= 0):
            raise ValueError("fine grid must be strictly increasing with >= 2 points")
        if abs(fine[0]) > 1e-12:
            raise ValueError("grids must start at time 0")
        if idx[0] != 0 or idx[-1] != fine.size - 1 or np.any(np.diff(idx) <= 0):
            raise ValueError("coarse grid must span the fine grid")
        object.__setattr__(self, "fine", fine)
        object.__setattr__(self, "coarse_idx", idx)

    @property
    def t_end(self) -> float:
        return float(self.fine[-1])

    @property
    def coarse(self) -> np.ndarray:
        return self.fine[self.coarse_idx]

    @property
    def mesh_fine(self) -> float:
        return float(np.max(np.diff(self.fine)))

    @property
    def mesh_coarse(self) -> float:
        return float(np.max(np.diff(self.coarse)))

    @property
    def uniformity_fine(self) -> float:
        """min spacing / max spacing of the fine grid (1 for uniform)."""
        d = np.diff(self.fine)
        return float(d.min() / d.max())

    @property
    def uniformity_coarse(self) -> float:
        d = np.diff(self.coarse)
        return float(d.min() / d.max())

    @property
    def ratio(self) -> int:
        """Nominal coarse/fine mesh ratio (rounded)."""
        return max(1, int(round(self.mesh_coarse / self.mesh_fine)))


def make_uniform_grids(t_end: float, mesh_fine: float, ratio: int) -> TwoScaleGrid:
    """Uniform fine grid of step ``mesh_fine``; coarse keeps every ratio-th point.

    The horizon is snapped *up* to the nearest whole coarse step so both
    grids share their final point.
    """
    if mesh_fine <= 0:
        raise ValueError("mesh_fine must be positive")
    ratio = int(ratio)
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    coarse_step = mesh_fine * ratio
    n_coarse = max(1, int(np.ceil(t_end / coarse_step - 1e-9)))
    n_fine = n_coarse * ratio
    fine = np.arange(n_fine + 1) * mesh_fine
    return TwoScaleGrid(fine=fine, coarse_idx=np.arange(0, n_fine + 1, ratio))


def power_law_grids(
    t_end: float, fine_power: float = 6.0, coarse_power: float = 2.0, mesh_cap: float = 2.0**-14
) -> TwoScaleGrid:
    """Grids with meshes ``t^-fine_power`` and ``t^-coarse_power``.

    ``mesh_cap`` bounds how fine the observation grid may get for large
    horizons.  The grid ratio is rounded to an integer.
    """
    mesh_fine = max(t_end**-fine_power, mesh_cap)
    mesh_coarse = t_end**-coarse_power
    ratio = max(1, int(round(mesh_coarse / mesh_fine)))
    return make_uniform_grids(t_end, mesh_fine, ratio)


def grid_from_times(times, ratio: int = 1) -> TwoScaleGrid:
    """Two-scale grid over observed timestamps (shifted to start at zero).

    The coarse grid keeps every ratio-th point; if the final point is not
    ratio-aligned it is appended so both grids end together (the trailing
    coarse interval is then shorter than the rest).
    """
    times = np.asarray(times, dtype=float)
    shifted = times - times[0]
    idx = list(range(0, times.size, int(ratio)))
    if idx[-1] != times.size - 1:
        idx.append(times.size - 1)
    return TwoScaleGrid(fine=shifted, coarse_idx=np.asarray(idx))


@dataclass(frozen=True)
class PathTruth:
    """Ground truth attached to simulated paths (never present for data)."""

    params: GrouParams | None
    noise: LevySpec
    seed: object
    init_state: np.ndarray
    arrival_times: np.ndarray | None = None
    arrival_sizes: np.ndarray | None = None
    increments: IncrementBatch | None = None


@dataclass(frozen=True)
class SampledPath:
    """Edge time series on a two-scale grid.

    ``values`` has one row per fine-grid point and one column per edge.
    """

    grid: TwoScaleGrid
    values: np.ndarray
    labels: tuple[str, ...] | None = None
    truth: PathTruth | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.grid.fine.size:
            raise ValueError(
                f"values shape {values.shape} does not match grid of {self.grid.fine.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_edges(self) -> int:
        return self.values.shape[1]

    def section(self, start: int, stop: int) -> "SampledPath":
        """Sub-path over fine indices ``[start, stop)``, re-anchored at time 0."""
        if not (0 <= start < stop <= self.n_points) or stop - start < 2:
            raise ValueError(f"invalid section [{start}, {stop})")
        times = self.grid.fine[start:stop]
        grid = grid_from_times(times, ratio=self.grid.ratio)
        truth = self.truth
        if truth is not None:
            arr_t, arr_s = truth.arrival_times, truth.arrival_sizes
            if arr_t is not None:
                keep = (arr_t >= times[0]) & (arr_t <= times[-1])
                arr_t, arr_s = arr_t[keep] - times[0], arr_s[keep]
            truth = replace(truth, arrival_times=arr_t, arrival_sizes=arr_s, increments=None)
        return SampledPath(
            grid=grid, values=self.values[start:stop], labels=self.labels, truth=truth
        )

    def drop_columns(self, cols) -> "SampledPath":
        """Remove edge columns (used for misspecified-network experiments)."""
        keep = [k for k in range(self.n_edges) if k not in set(cols)]
        return self.select_columns(keep)

    def select_columns(self, cols) -> "SampledPath":
        """Sub-path over the given edge columns, in the given order."""
        cols = list(cols)
        labels = None if self.labels is None else tuple(self.labels[k] for k in cols)
        return SampledPath(grid=self.grid, values=self.values[:, cols].copy(), labels=labels)


def _default_labels(K):
    return tuple(f"e_{k + 1}" for k in range(K))


def simulate_path(
    system: CompanionSystem,
    noise: LevySpec,
    grid: TwoScaleGrid,
    init="stationary",
    rng_seed=0,
    burn_in: bool = True,
) -> SampledPath:
    """Simulate the edge process on ``grid.fine``.

    Parameters
    ----------
    init : "stationary" or array of length dim
        Stationary initialization draws the state from a Gaussian with the
        exact stationary mean and covariance and (by default) applies a
        burn-in of ``5 / |max real eigenvalue|`` time units to wash out the
        non-Gaussian correction; an explicit state vector skips burn-in.
    rng_seed : int or Generator
        Sub-streams for the initial state, the Gaussian state noise, and
        the jump process are derived separately, so superposition tests can
        split the noise spec while sharing randomness.
    """
    if noise.n_components != system.n_edges:
        raise ValueError("noise dimension does not match the system")
    rng_init = stream_rng(rng_seed, 0)
    rng_main = stream_rng(rng_seed, 1)
    rng_burn = stream_rng(rng_seed, 2)
    dim, K = system.dim, system.n_edges

    stationary_init = isinstance(init, str)
    if stationary_init:
        if init != "stationary":
            raise ValueError(f"unknown init mode {init!r}")
        if not is_hurwitz(system):
            raise StationarityError("stationary initialization needs a Hurwitz system")
        moments = stationary_moments(system, noise)
        x0 = moments.state_mean + psd_factor(moments.state_cov) @ rng_init.standard_normal(dim)
        if burn_in:
            relax = BURN_IN_RELAXATION / abs(spectral_abscissa(system))
            x0 = _burn_in(system, noise, x0, relax, rng_burn)
    else:
        x0 = np.asarray(init, dtype=float).reshape(-1)
        if x0.size != dim:
            raise ValueError(f"init state has length {x0.size}, expected {dim}")

    gamma_regime = isinstance(noise.jumps, SymmetricGammaJumps)
    if gamma_regime:
        values, truth_inc, _ = _euler_maruyama(system, noise, grid.fine, x0, rng_main)
        truth = PathTruth(
            params=None, noise=noise, seed=rng_seed, init_state=x0, increments=truth_inc
        )
    else:
        values, arr_t, arr_s, _ = _exact_path(system, noise, grid.fine, x0, rng_main)
        truth = PathTruth(
            params=None,
            noise=noise,
            seed=rng_seed,
            init_state=x0,
            arrival_times=arr_t,
            arrival_sizes=arr_s,
        )
    return SampledPath(grid=grid, values=values, labels=_default_labels(K), truth=truth)


def _step_operators(system, noise, dt_values):
    """Per-unique-spacing propagator, drift vector, and noise factor."""
    T, E = system.transition, system.noise_selector
    b = noise.mean_rate
    rhs = E @ noise.brownian_cov @ E.T
    ops = {}
    for dt in np.unique(dt_values):
        prop = expm(dt * T)
        drift = drift_integral(T, E @ b, dt)
        _, cov = cov_integral(T, rhs, dt)
        ops[dt] = (prop, drift, psd_factor(cov))
    return ops


def _exact_path(system, noise, times, x0, rng):
    """Conditional-Gaussian recursion with exact jump placement."""
    dim, K = system.dim, system.n_edges
    dt = np.diff(times)
    n = dt.size
    ops = _step_operators(system, noise, dt)

    # Gaussian draws always come first so that zeroing one noise source
    # leaves the draws of the others untouched (superposition property)
    z = rng.standard_normal((n, dim))
    shocks = np.empty((n, dim))
    props = [None] * n
    for dt_val, (prop, drift, factor) in ops.items():
        mask = dt == dt_val
        shocks[mask] = z[mask] @ factor.T + drift
        for i in np.nonzero(mask)[0]:
            props[i] = prop

    arr_t = np.empty(0)
    arr_s = np.empty((0, K))
    jumps = noise.jumps
    if jumps is not None and jumps.rate > 0:
        counts = rng.poisson(jumps.rate * dt)
        total = int(counts.sum())
        jfactor = psd_factor(jumps.jump_cov)
        arr_t = np.empty(total)
        arr_s = rng.standard_normal((total, K)) @ jfactor.T
        pos = 0
        T, E = system.transition, system.noise_selector
        for i in np.nonzero(counts)[0]:
            c = counts[i]
            u = np.sort(rng.uniform(times[i], times[i + 1], size=c))
            arr_t[pos : pos + c] = u
            for j in range(c):
                response = expm((times[i + 1] - u[j]) * T) @ (E @ arr_s[pos + j])
                shocks[i] += response
            pos += c

    values = np.empty((n + 1, K))
    x = x0.copy()
    values[0] = x[:K]
    for i in range(n):
        x = props[i] @ x + shocks[i]
        values[i + 1] = x[:K]
    return values, arr_t, arr_s, x


def _euler_maruyama(system, noise, times, x0, rng):
    """Explicit Euler composition of exactly-sampled noise increments."""
    K = system.n_edges
    dt = np.diff(times)
    batch = sample_increments(noise, times, rng)
    increments = batch.total
    T = system.transition
    values = np.empty((times.size, K))
    x = x0.copy()
    values[0] = x[:K]
    for i in range(dt.size):
        x = x + dt[i] * (T @ x)
        x[-K:] += increments[i]
        values[i + 1] = x[:K]
    return values, batch, x


# Burn-in steps: exact regimes tolerate arbitrarily long steps, the Euler
# scheme needs short ones for accuracy.
_BURN_STEPS_EXACT = 64
_BURN_MESH_EULER = 2.0**-10


def _burn_in(system, noise, x0, duration, rng):
    if duration <= 0:
        return x0
    if isinstance(noise.jumps, SymmetricGammaJumps):
        n = max(16, int(np.ceil(duration / _BURN_MESH_EULER)))
        times = np.linspace(0.0, duration, n + 1)
        _, _, x = _euler_maruyama(system, noise, times, x0, rng)
        return x
    times = np.linspace(0.0, duration, _BURN_STEPS_EXACT + 1)
    _, _, _, x = _exact_path(system, noise, times, x0, rng)
    return x


def write_path_csv(path: SampledPath, file, header_lines=()) -> None:
    """Write ``time,e_1,...,e_K`` rows at 17 significant digits."""
    labels = path.labels or _default_labels(path.n_edges)
    with open(file, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("time," + ",".join(labels) + "\n")
        for t, row in zip(path.grid.fine, path.values):
            fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def read_path_csv(file, ratio: int = 1) -> SampledPath:
    """Read a path CSV (comment lines starting with '#' are skipped)."""
    with open(file) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{file}: empty path file")
    header = lines[0].split(",")
    if header[0] != "time" or len(header) < 2:
        raise ValueError(f"{file}: expected header 'time,<edge>,...', got {lines[0]!r}")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{file}: ragged or empty data rows")
    grid = grid_from_times(data[:, 0], ratio=ratio)
    return SampledPath(grid=grid, values=data[:, 1:], labels=tuple(header[1:]))
