"""Discretized maximum-likelihood estimation of the drift parameters.

The estimator works on two grids: forward finite differences recover the
unobserved derivative states on the fine grid, while the score and
information statistics accumulate over the coarser sub-grid,

    score  = - sum_m H_m S^{-1} c_m,
    info   =   sum_m H_m S^{-1} H_m^T (u_{m+1} - u_m),

where ``c_m`` is the drift-corrected, jump-truncated increment of the
highest derivative over the m-th coarse interval, ``H_m`` stacks the
per-edge and neighborhood regressors at the left endpoint, and S is the
Brownian covariance of the driving noise.  The drift estimate solves
``(info + ridge*I) theta = score``.

Jump truncation keeps a component only when the corrected increment stays
within ``spacing**beta_exp``; admissible exponents depend on whether the
jump activity is finite or infinite.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError, EstimationError, SingularityError
from .graphs import WeightMatrices
from .model import GrouParams
from .noise import CompoundPoissonJumps, LevySpec
from .simulate import SampledPath

__all__ = [
    "ThresholdPolicy",
    "ThresholdedIncrements",
    "EstimationResult",
    "finite_differences",
    "build_h_matrix",
    "mcar_h_matrix",
    "threshold_increments",
    "estimate_drift",
    "estimate_mcar",
    "estimate_triplet",
    "grid_diagnostics",
]

# Admissible exponent intervals are (0, 1/2) for finite jump activity and
# (0, 1/4) for infinite activity.  The defaults sit low in those intervals:
# with coarse meshes of practical size, larger exponents put the cutoff so
# close to the diffusive scale that censoring visibly attenuates the drift
# signal, while these values keep the censored mass negligible and still
# remove order-one jumps.
FINITE_BETA_DEFAULT = 0.2
INFINITE_BETA_DEFAULT = 0.1

_RIDGE_SCALE_DEFAULT = 1e-8
_RIDGE_ESCALATIONS = 30


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-component jump-truncation rule ``cutoff = spacing**beta_exp``."""

    beta_exp: np.ndarray
    activity: str = "finite"

    def __init__(self, beta_exp=None, activity="finite"):
        if activity not in ("finite", "infinite"):
            raise ValueError(f"activity must be 'finite' or 'infinite', got {activity!r}")
        upper = 0.5 if activity == "finite" else 0.25
        if beta_exp is None:
            beta_exp = FINITE_BETA_DEFAULT if activity == "finite" else INFINITE_BETA_DEFAULT
        beta_exp = np.atleast_1d(np.asarray(beta_exp, dtype=float))
        if np.any(beta_exp <= 0) or np.any(beta_exp >= upper):
            raise ValueError(
                f"beta_exp must lie in (0, {upper}) for {activity} activity, got {beta_exp}"
            )
        object.__setattr__(self, "beta_exp", beta_exp)
        object.__setattr__(self, "activity", activity)

    @classmethod
    def for_noise(cls, spec: LevySpec, beta_exp=None) -> "ThresholdPolicy":
        return cls(beta_exp=beta_exp, activity=spec.activity)

    def thresholds(self, spacings, n_components: int) -> np.ndarray:
        """Cutoff matrix, one row per interval and one column per component."""
        spacings = np.asarray(spacings, dtype=float)
        beta = self.beta_exp
        if beta.size == 1:
            beta = np.full(n_components, beta[0])
        elif beta.size != n_components:
            raise ValueError(f"need {n_components} exponents, got {beta.size}")
        return spacings[:, None] ** beta[None, :]


def finite_differences(path: SampledPath, order_l: int) -> np.ndarray:
    """Forward finite differences of the given order on the fine grid.

    Order zero returns the values themselves; order ``l`` divides successive
    differences by the local fine spacing and shortens the output by one row
    per order.
    """
    if order_l < 0:
        raise ValueError("order must be >= 0")
    values = path.values
    if values.shape[0] <= order_l:
        raise ValueError(
            f"need more than {order_l} points for order-{order_l} differences, "
            f"have {values.shape[0]}"
        )
    dts = np.diff(path.grid.fine)
    out = values
    for _ in range(order_l):
        m = out.shape[0] - 1
        out = (out[1:] - out[:-1]) / dts[:m, None]
    return out


def _estimation_window(path: SampledPath, lags: int):
    """Coarse positions usable for a model with ``lags`` lags.

    Returns the fine indices of the usable coarse points; the left endpoint
    of the last usable coarse interval is capped so every regressor stays
    inside the domain of the order-(lags-1) finite differences.
    """
    n_intervals = path.grid.fine.size - 1
    idx = path.grid.coarse_idx
    usable = idx[idx <= n_intervals - lags]
    if usable.size < 2:
        raise EstimationError(
            f"grid leaves {usable.size} usable coarse points for lags={lags}; need >= 2"
        )
    return usable


@dataclass(frozen=True)
class ThresholdedIncrements:
    """Drift-corrected, jump-truncated coarse increments."""

    values: np.ndarray
    kept: np.ndarray
    thresholds: np.ndarray
    spacings: np.ndarray

    @property
    def kept_fraction(self) -> float:
        return float(self.kept.mean())


def _coarse_increments(path, lags):
    idx = _estimation_window(path, lags)
    top = finite_differences(path, lags - 1)
    dvals = top[idx]
    times = path.grid.fine[idx]
    spacings = np.diff(times)
    return idx, dvals, np.diff(dvals, axis=0), spacings


def threshold_increments(
    path: SampledPath, policy: ThresholdPolicy, triplet: LevySpec, lags: int = 1
) -> ThresholdedIncrements:
    """Apply the drift correction and jump-truncation rule per coarse interval.

    Component i of interval m survives when
    ``|increment_i - b_i * spacing| <= spacing**beta_i``; censored components
    are zeroed, not dropped.
    """
    _, _, raw, spacings = _coarse_increments(path, lags)
    corrected = raw - triplet.mean_rate[None, :] * spacings[:, None]
    cuts = policy.thresholds(spacings, path.n_edges)
    kept = np.abs(corrected) <= cuts
    return ThresholdedIncrements(
        values=np.where(kept, corrected, 0.0), kept=kept, thresholds=cuts, spacings=spacings
    )


def build_h_matrix(path: SampledPath, weights: WeightMatrices | None, shape) -> np.ndarray:
    """Regressor stacks H_m over the usable coarse points.

    For each coarse point this stacks, lag block by lag block, the K-by-K
    diagonal of the matching derivative (lag 1 pairs with the highest
    derivative, lag L with the raw values) followed by one row per
    neighborhood stage holding the weighted neighborhood aggregate.  Row
    order matches the flattened parameter vector.

    Returns an array of shape ``(M, p, K)`` with M the number of usable
    coarse increments.
    """
    lags, stages = shape
    stages = tuple(int(r) for r in stages)
    if len(stages) != lags:
        raise ConfigurationError(f"shape mismatch: {lags} lags but {len(stages)} stage counts")
    K = path.n_edges
    max_stage = max(stages, default=0)
    if max_stage > 0:
        if weights is None or weights.max_stage < max_stage:
            raise ConfigurationError(f"need weight matrices up to stage {max_stage}")
        if weights.n_edges != K:
            raise ConfigurationError(
                f"weights are for {weights.n_edges} edges, path has {K}"
            )
    idx = _estimation_window(path, lags)
    points = idx[:-1]
    n_params = lags * K + sum(stages)
    H = np.zeros((points.size, n_params, K))
    cols = np.arange(K)
    row = 0
    for l in range(1, lags + 1):
        deriv = finite_differences(path, lags - l)[points]
        H[:, row + cols, cols] = deriv
        row += K
        for r in range(1, stages[l - 1] + 1):
            H[:, row, :] = deriv @ weights.stage(r).T
            row += 1
    return H


def mcar_h_matrix(path: SampledPath, lags: int = 1) -> np.ndarray:
    """Regressor stacks for an unrestricted (full-matrix) drift, one lag.

    The parameter vector is the row-major flattening of the K-by-K drift
    coefficient matrix.
    """
    if lags != 1:
        raise ConfigurationError("full-matrix estimation is implemented for one lag")
    K = path.n_edges
    idx = _estimation_window(path, lags)
    vals = path.values[idx[:-1]]
    H = np.zeros((vals.shape[0], K * K, K))
    for a in range(K):
        H[:, a * K : (a + 1) * K, a] = vals
    return H


@dataclass(frozen=True)
class EstimationResult:
    """Output of a drift fit.

    ``structure`` is "grou" (structured alpha/beta drift) or "mcar"
    (unrestricted drift matrix); ``theta_hat`` is laid out accordingly.
    """

    theta_hat: np.ndarray
    score: np.ndarray
    info: np.ndarray
    loglik: float
    bic: float
    n_coarse: int
    ridge_used: float
    triplet_used: LevySpec
    structure: str
    shape: tuple | None
    n_edges: int
    diagnostics: dict

    @property
    def params(self) -> GrouParams:
        if self.structure != "grou":
            raise ValueError(f"no structured parameters for {self.structure!r} fits")
        lags, stages = self.shape
        return GrouParams.unflatten(self.theta_hat, lags, stages, self.n_edges)

    @property
    def drift_matrix(self) -> np.ndarray:
        """Fitted lag-1 coefficient matrix of an unrestricted fit."""
        if self.structure != "mcar":
            raise ValueError(f"no drift matrix for {self.structure!r} fits")
        return self.theta_hat.reshape(self.n_edges, self.n_edges)

    def to_json_dict(self) -> dict:
        doc = {
            "structure": self.structure,
            "theta": self.theta_hat.tolist(),
            "loglik": self.loglik,
            "bic": self.bic,
            "n_coarse": self.n_coarse,
            "ridge": self.ridge_used,
            "n_edges": self.n_edges,
            "diagnostics": self.diagnostics,
            "triplet": json.loads(self.triplet_used.to_json()),
        }
        if self.structure == "grou":
            lags, stages = self.shape
            params = self.params
            doc["shape"] = {"L": lags, "R": list(stages)}
            doc["alpha"] = params.alpha.tolist()
            doc["beta"] = [b.tolist() for b in params.beta]
        return doc


def _working_covariance(triplet: LevySpec) -> np.ndarray:
    sigma = np.asarray(triplet.brownian_cov, dtype=float)
    w = np.linalg.eigvalsh(sigma)
    scale = max(w.max(), 1.0)
    if w.min() <= 1e-8 * scale:
        sigma = sigma + 1e-8 * scale * np.eye(sigma.shape[0])
    return sigma


def _solve_with_ridge(info, score, ridge):
    """Solve (info + ridge*I) theta = score, escalating an automatic ridge.

    ``ridge=None`` starts from a trace-scaled value and multiplies by ten
    until the regularized matrix admits a Cholesky factorization; an
    explicit ridge is used as given and failure raises.
    """
    p = info.shape[0]
    eye = np.eye(p)
    if ridge is not None:
        try:
            factor = cho_factor(info + float(ridge) * eye)
        except np.linalg.LinAlgError as exc:
            raise SingularityError(
                f"information matrix not positive definite at ridge={ridge}"
            ) from exc
        return cho_solve(factor, score), float(ridge)
    base = _RIDGE_SCALE_DEFAULT * max(np.trace(info) / p, np.finfo(float).tiny)
    value = base
    for _ in range(_RIDGE_ESCALATIONS):
        try:
            factor = cho_factor(info + value * eye)
            return cho_solve(factor, score), float(value)
        except np.linalg.LinAlgError:
            value *= 10.0
    raise SingularityError("information matrix stayed singular under ridge escalation")


def grid_diagnostics(grid) -> dict:
    """Realized values of the grid-asymptotics ratios plus uniformity.

    The estimator is consistent along grid sequences with
    ``t * coarse_mesh -> 0`` and ``fine_mesh = o(coarse_mesh^2 / t)``; for a
    single dataset these can only be reported, not asserted.
    """
    t = grid.t_end
    fine, coarse = grid.mesh_fine, grid.mesh_coarse
    return {
        "t_end": t,
        "mesh_fine": fine,
        "mesh_coarse": coarse,
        "t_times_coarse_mesh": t * coarse,
        "fine_mesh_times_t_over_coarse_sq": fine * t / coarse**2,
        "uniformity_fine": grid.uniformity_fine,
        "uniformity_coarse": grid.uniformity_coarse,
    }


def _accumulate(H, increments, spacings, sigma_w):
    sigma_inv_H = np.linalg.solve(sigma_w, H.transpose(0, 2, 1)).transpose(0, 2, 1)
    # sigma_inv_H[m] = H[m] @ inv(sigma); contraction over intervals and edges
    info = np.tensordot(sigma_inv_H * spacings[:, None, None], H, axes=([0, 2], [0, 2]))
    score = -np.tensordot(sigma_inv_H, increments, axes=([0, 2], [0, 1]))
    return 0.5 * (info + info.T), score


def _finish(H, path, triplet, policy, ridge, structure, shape, lags, ridge_scale=None):
    thresholded = threshold_increments(path, policy, triplet, lags=lags)
    sigma_w = _working_covariance(triplet)
    info, score = _accumulate(H, thresholded.values, thresholded.spacings, sigma_w)
    if ridge is None and ridge_scale is not None:
        ridge = ridge_scale * np.trace(info) / info.shape[0]
    theta, ridge_used = _solve_with_ridge(info, score, ridge)
    loglik = float(theta @ score - 0.5 * theta @ info @ theta)
    n_coarse = thresholded.spacings.size
    p = theta.size
    bic = float(-theta @ info @ theta + p * np.log(n_coarse)) if n_coarse > 1 else float("nan")
    diag = grid_diagnostics(path.grid)
    diag["kept_fraction"] = thresholded.kept_fraction
    # data-driven grids routinely end on a shorter coarse interval (the
    # series length is rarely a whole number of coarse steps); that stub is
    # harmless, so judge coarse uniformity on the interior spacings
    coarse_steps = np.diff(path.grid.coarse)
    interior = coarse_steps[:-1] if coarse_steps.size > 1 else coarse_steps
    coarse_uniform = (
        interior.min() / interior.max() >= 0.99
        and coarse_steps[-1] <= interior.max() * 1.01
    )
    if diag["uniformity_fine"] < 0.99 or not coarse_uniform:
        warnings.warn(
            "observation grids are irregular; estimator uses actual spacings",
            stacklevel=3,
        )
    return EstimationResult(
        theta_hat=theta,
        score=score,
        info=info,
        loglik=loglik,
        bic=bic,
        n_coarse=n_coarse,
        ridge_used=ridge_used,
        triplet_used=triplet,
        structure=structure,
        shape=shape,
        n_edges=path.n_edges,
        diagnostics=diag,
    )


def estimate_drift(
    path: SampledPath,
    weights: WeightMatrices | None,
    shape,
    triplet: LevySpec,
    policy: ThresholdPolicy | None = None,
    ridge: float | None = None,
) -> EstimationResult:
    """Fit structured drift parameters by the discretized likelihood.

    Parameters
    ----------
    shape : (lags, stage-counts)
        Model order, e.g. ``(1, [1])`` or ``(2, [1, 1])``.
    triplet : LevySpec
        Driving-noise description (known or previously estimated); its
        Brownian covariance weights the statistics and its drift centers
        the increments.
    ridge : float or None
        None selects a trace-scaled ridge and escalates it tenfold until
        the regularized information matrix is positive definite.
    """
    if policy is None:
        policy = ThresholdPolicy.for_noise(triplet)
    lags, stages = shape
    shape = (int(lags), tuple(int(r) for r in stages))
    H = build_h_matrix(path, weights, shape)
    return _finish(H, path, triplet, policy, ridge, "grou", shape, shape[0])


def estimate_mcar(
    path: SampledPath,
    triplet: LevySpec,
    policy: ThresholdPolicy | None = None,
    ridge: float | None = None,
    ridge_scale: float | None = None,
) -> EstimationResult:
    """Fit an unrestricted one-lag drift matrix (K*K free parameters).

    ``ridge_scale`` (used when ``ridge`` is None) sets the ridge as a
    fraction of the mean information-diagonal; the unrestricted fit has
    K*K free parameters and usually wants more shrinkage than the
    structured one.
    """
    if policy is None:
        policy = ThresholdPolicy.for_noise(triplet)
    H = mcar_h_matrix(path, lags=1)
    return _finish(H, path, triplet, policy, ridge, "mcar", None, 1, ridge_scale=ridge_scale)


def estimate_triplet(
    path: SampledPath,
    policy: ThresholdPolicy | None = None,
    lags: int = 1,
    min_increments: int = 100,
) -> LevySpec:
    """Estimate the driving-noise triplet from thresholded coarse increments.

    The Brownian covariance is the realized covariance of the small
    (drift-corrected, sub-threshold in every component) increments scaled
    by total time; the drift is the per-unit-time mean of per-component
    small increments; exceedance increments contribute a compound-Poisson
    second moment split into an arrival rate and a jump covariance.

    This stage intentionally reuses only quantities the thresholding rule
    already defines, so its fidelity is limited to second moments.
    """
    if policy is None:
        policy = ThresholdPolicy()
    _, _, raw, spacings = _coarse_increments(path, lags)
    if raw.shape[0] < min_increments:
        raise EstimationError(
            f"triplet estimation needs >= {min_increments} coarse increments, "
            f"have {raw.shape[0]}"
        )
    K = path.n_edges
    cuts = policy.thresholds(spacings, K)
    total_time = float(spacings.sum())

    small0 = np.abs(raw) <= cuts
    b_hat = (raw * small0).sum(axis=0) / total_time

    corrected = raw - b_hat[None, :] * spacings[:, None]
    small = np.abs(corrected) <= cuts
    joint_small = small.all(axis=1)
    if not joint_small.any():
        raise EstimationError("every coarse increment exceeds the threshold")
    kept = corrected[joint_small]
    sigma_hat = kept.T @ kept / total_time

    jumps = None
    exceed = ~joint_small
    if exceed.any():
        exceeding = corrected[exceed]
        second_moment = exceeding.T @ exceeding / total_time
        rate_hat = float(exceed.sum()) / total_time
        jumps = CompoundPoissonJumps(rate=rate_hat, jump_cov=second_moment / rate_hat)
    return LevySpec(b_hat, 0.5 * (sigma_hat + sigma_hat.T), jumps)
