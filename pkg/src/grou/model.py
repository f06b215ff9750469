"""Drift parametrization, companion state space, and second-order moments.

The edge process with L autoregressive lags is represented through a linear
state-space system: the state stacks the process and its first L-1 (right)
derivatives, the transition matrix has identity super-diagonal blocks over a
negated bottom row of lag coefficient matrices, noise enters only the last
block, and the observation matrix reads off the first block.

Each lag coefficient matrix combines a per-edge diagonal with scaled
neighborhood matrices::

    Q_l = diag(alpha[l]) + sum_r beta[l][r] * W_r

Stationary moments come from a Lyapunov solve; conditional moments use
augmented matrix exponentials, so no quadrature is involved anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .errors import ConfigurationError, SingularityError, StationarityError
from .graphs import WeightMatrices

__all__ = [
    "GrouParams",
    "CompanionSystem",
    "MomentSet",
    "build_companion",
    "is_hurwitz",
    "companion_inverse",
    "stationary_moments",
    "conditional_moments",
    "lyapunov_solve",
    "cov_integral",
    "drift_integral",
]

# Dense Kronecker solves are exact and simple for the system sizes used in
# practice; fall back to the Schur-based solver beyond this state dimension.
_KRONECKER_LIMIT = 200

HURWITZ_MARGIN = 1e-10


@dataclass(frozen=True)
class GrouParams:
    """Structured drift parameters of a grOU(L, [R_1..R_L]) model.

    Parameters
    ----------
    alpha : ndarray, shape (L, K)
        Per-edge autoregressive coefficients, one row per lag.
    beta : tuple of ndarray
        Neighborhood-stage coefficients; entry ``l`` has length ``R_{l+1}``
        (length zero is allowed and means no network term at that lag).
    """

    alpha: np.ndarray
    beta: tuple[np.ndarray, ...]

    def __init__(self, alpha, beta):
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        beta = tuple(np.asarray(b, dtype=float).reshape(-1) for b in beta)
        if len(beta) != alpha.shape[0]:
            raise ValueError(
                f"got {alpha.shape[0]} alpha rows but {len(beta)} beta vectors"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def lags(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_edges(self) -> int:
        return self.alpha.shape[1]

    @property
    def stages(self) -> tuple[int, ...]:
        """R_1..R_L, the number of neighborhood stages per lag."""
        return tuple(len(b) for b in self.beta)

    @property
    def n_params(self) -> int:
        return self.lags * self.n_edges + sum(self.stages)

    def flatten(self) -> np.ndarray:
        """Parameter vector [alpha_1, beta_1, ..., alpha_L, beta_L]."""
        parts = []
        for l in range(self.lags):
            parts.append(self.alpha[l])
            parts.append(self.beta[l])
        return np.concatenate(parts) if parts else np.empty(0)

    @classmethod
    def unflatten(cls, theta, lags: int, stages, n_edges: int) -> "GrouParams":
        """Inverse of :meth:`flatten` for the given (L, R, K) shape."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        stages = tuple(int(r) for r in stages)
        if len(stages) != lags:
            raise ValueError(f"need {lags} stage counts, got {len(stages)}")
        expected = lags * n_edges + sum(stages)
        if theta.size != expected:
            raise ValueError(f"theta has length {theta.size}, expected {expected}")
        alpha = np.empty((lags, n_edges))
        beta = []
        pos = 0
        for l in range(lags):
            alpha[l] = theta[pos : pos + n_edges]
            pos += n_edges
            beta.append(theta[pos : pos + stages[l]].copy())
            pos += stages[l]
        return cls(alpha, tuple(beta))

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": self.lags,
                "R": list(self.stages),
                "alpha": self.alpha.tolist(),
                "beta": [b.tolist() for b in self.beta],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GrouParams":
        doc = json.loads(text)
        params = cls(np.asarray(doc["alpha"]), tuple(np.asarray(b) for b in doc["beta"]))
        if params.lags != doc["L"] or list(params.stages) != list(doc["R"]):
            raise ValueError("alpha/beta arrays inconsistent with declared L, R")
        return params


@dataclass(frozen=True)
class CompanionSystem:
    """State-space matrices of the companion form.

    Attributes
    ----------
    lag_matrices : tuple of ndarray
        Q_1..Q_L, each K-by-K.
    transition : ndarray, shape (LK, LK)
        Drift matrix with identity super-diagonal blocks and bottom block
        row (-Q_L, ..., -Q_1).
    noise_selector : ndarray, shape (LK, K)
        Routes the driving noise into the last state block.
    observation : ndarray, shape (K, LK)
        Reads the first state block (the observed edge process).
    """

    lag_matrices: tuple[np.ndarray, ...]
    transition: np.ndarray
    noise_selector: np.ndarray
    observation: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.lag_matrices[0].shape[0]

    @property
    def lags(self) -> int:
        return len(self.lag_matrices)

    @property
    def dim(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True)
class MomentSet:
    """Stationary first and second moments of the edge process."""

    mean: np.ndarray
    variance: np.ndarray
    state_mean: np.ndarray
    state_cov: np.ndarray
    _transition: np.ndarray
    _observation: np.ndarray

    def autocov(self, h: float) -> np.ndarray:
        """Autocovariance Cov(Y_{t+h}, Y_t) for lag h >= 0."""
        if h < 0:
            raise ValueError(f"lag must be >= 0, got {h}")
        prop = expm(h * self._transition)
        return self._observation @ prop @ self.state_cov @ self._observation.T


def build_companion(params: GrouParams, weights: WeightMatrices | None) -> CompanionSystem:
    """Assemble the companion state-space system from structured parameters.

    ``weights`` may be None only when every lag has zero neighborhood stages.

    Raises
    ------
    ConfigurationError
        If fewer weight stages are available than the parameters require.
    """
    K, L = params.n_edges, params.lags
    max_stage = max(params.stages, default=0)
    if max_stage > 0:
        if weights is None:
            raise ConfigurationError("parameters use neighborhood stages but no weights given")
        if weights.max_stage < max_stage:
            raise ConfigurationError(
                f"need weight matrices up to stage {max_stage}, have {weights.max_stage}"
            )
        if weights.n_edges != K:
            raise ConfigurationError(
                f"weights are for {weights.n_edges} edges, parameters for {K}"
            )
    lag_matrices = []
    for l in range(L):
        Q = np.diag(params.alpha[l]).astype(float)
        for r in range(1, params.stages[l] + 1):
            Q = Q + params.beta[l][r - 1] * weights.stage(r)
        lag_matrices.append(Q)

    dim = L * K
    transition = np.zeros((dim, dim))
    for l in range(L - 1):
        transition[l * K : (l + 1) * K, (l + 1) * K : (l + 2) * K] = np.eye(K)
    for l in range(L):
        # bottom block row holds -Q_L, -Q_{L-1}, ..., -Q_1
        transition[(L - 1) * K :, l * K : (l + 1) * K] = -lag_matrices[L - 1 - l]
    noise_selector = np.zeros((dim, K))
    noise_selector[(L - 1) * K :, :] = np.eye(K)
    observation = np.zeros((K, dim))
    observation[:, :K] = np.eye(K)
    return CompanionSystem(
        lag_matrices=tuple(lag_matrices),
        transition=transition,
        noise_selector=noise_selector,
        observation=observation,
    )


def is_hurwitz(system: CompanionSystem, margin: float = HURWITZ_MARGIN) -> bool:
    """True iff every transition eigenvalue has real part below ``-margin``."""
    eig = np.linalg.eigvals(system.transition)
    return bool(np.max(eig.real) < -margin)


def spectral_abscissa(system: CompanionSystem) -> float:
    """Largest real part among transition eigenvalues."""
    return float(np.max(np.linalg.eigvals(system.transition).real))


def companion_inverse(system: CompanionSystem) -> np.ndarray:
    """Explicit block inverse of the transition matrix.

    First block row is (-Q_L^{-1} Q_{L-1}, ..., -Q_L^{-1} Q_1, -Q_L^{-1}),
    identities sit on the sub-diagonal, and everything else is zero.  Only
    one K-by-K solve against Q_L is required.

    Raises
    ------
    SingularityError
        If Q_L is singular.
    """
    K, L = system.n_edges, system.lags
    Q_L = system.lag_matrices[L - 1]
    eye = np.eye(K)
    try:
        Q_L_inv = np.linalg.solve(Q_L, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("lag-L coefficient matrix is singular") from exc
    inv = np.zeros((L * K, L * K))
    for l in range(L - 1):
        # columns 0..L-2 of the first block row: -Q_L^{-1} Q_{L-1-l}
        inv[:K, l * K : (l + 1) * K] = -Q_L_inv @ system.lag_matrices[L - 2 - l]
    inv[:K, (L - 1) * K :] = -Q_L_inv
    for l in range(1, L):
        inv[l * K : (l + 1) * K, (l - 1) * K : l * K] = eye
    return inv


def lyapunov_solve(transition: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``transition @ X + X @ transition.T = -rhs`` for symmetric X.

    Uses a dense Kronecker-vectorized linear solve up to moderate dimension
    and the Schur-based solver above that.
    """
    n = transition.shape[0]
    if n <= _KRONECKER_LIMIT:
        eye = np.eye(n)
        coeff = np.kron(transition, eye) + np.kron(eye, transition)
        try:
            x = np.linalg.solve(coeff, -rhs.reshape(-1))
        except np.linalg.LinAlgError as exc:
            raise SingularityError("Lyapunov operator is singular") from exc
        X = x.reshape(n, n)
    else:
        X = solve_continuous_lyapunov(transition, -rhs)
    return 0.5 * (X + X.T)


def cov_integral(transition: np.ndarray, rhs: np.ndarray, h: float):
    """``(expm(h*transition), int_0^h expm(u*T) rhs expm(u*T)^T du)``.

    Computed exactly (up to expm accuracy) from one exponential of the
    augmented block matrix ``[[T, rhs], [0, -T^T]]``.  The augmented matrix
    contains ``-T^T``, whose exponential grows for stable systems, so once
    ``h`` is large enough to overflow that block the identity
    ``int_0^h = gamma - expm(h T) gamma expm(h T)^T`` (with gamma the
    stationary solution) is used instead.
    """
    n = transition.shape[0]
    if h == 0.0:
        return np.eye(n), np.zeros((n, n))
    real_parts = np.linalg.eigvals(transition).real
    if real_parts.max() < 0 and h * max(-real_parts.min(), 1.0) > 15.0:
        gamma = lyapunov_solve(transition, rhs)
        prop = expm(h * transition)
        integral = gamma - prop @ gamma @ prop.T
        return prop, 0.5 * (integral + integral.T)
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = transition
    block[:n, n:] = rhs
    block[n:, n:] = -transition.T
    phi = expm(h * block)
    prop = phi[:n, :n]
    integral = phi[:n, n:] @ prop.T
    return prop, 0.5 * (integral + integral.T)


def drift_integral(transition: np.ndarray, vec: np.ndarray, h: float) -> np.ndarray:
    """``int_0^h expm(u*transition) du @ vec`` without inverting the transition."""
    n = transition.shape[0]
    if h == 0.0:
        return np.zeros(n)
    block = np.zeros((n + 1, n + 1))
    block[:n, :n] = transition
    block[:n, n] = vec
    return expm(h * block)[:n, n]


def stationary_moments(system: CompanionSystem, noise) -> MomentSet:
    """Stationary mean, variance, and autocovariance structure.

    ``noise`` is any object exposing ``mean_rate`` (K-vector, the expected
    driving increment per unit time) and ``covariance_rate`` (K-by-K, its
    variance per unit time).

    Raises
    ------
    StationarityError
        If the system is not Hurwitz.
    """
    if not is_hurwitz(system):
        raise StationarityError("transition matrix is not Hurwitz; no stationary law")
    mu = np.asarray(noise.mean_rate, dtype=float)
    Sigma_L = np.asarray(noise.covariance_rate, dtype=float)
    E, A = system.noise_selector, system.observation
    # mean through the lag-L solve, state mean through the block inverse;
    # the two routes must agree and are cross-checked in tests
    try:
        mean = np.linalg.solve(system.lag_matrices[-1], mu)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("lag-L coefficient matrix is singular") from exc
    state_mean = -companion_inverse(system) @ (E @ mu)
    gamma = lyapunov_solve(system.transition, E @ Sigma_L @ E.T)
    variance = A @ gamma @ A.T
    return MomentSet(
        mean=mean,
        variance=0.5 * (variance + variance.T),
        state_mean=state_mean,
        state_cov=gamma,
        _transition=system.transition,
        _observation=A,
    )


def conditional_moments(system: CompanionSystem, noise, state_x, horizon_h: float):
    """Mean and variance of the edge process ``horizon_h`` ahead of ``state_x``.

    Returns
    -------
    (mean, variance) : (ndarray (K,), ndarray (K, K))
    """
    if horizon_h < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon_h}")
    state_x = np.asarray(state_x, dtype=float).reshape(-1)
    if state_x.size != system.dim:
        raise ValueError(f"state has length {state_x.size}, expected {system.dim}")
    moments = stationary_moments(system, noise)
    A, E = system.observation, system.noise_selector
    Sigma_L = np.asarray(noise.covariance_rate, dtype=float)
    prop, integral = cov_integral(system.transition, E @ Sigma_L @ E.T, horizon_h)
    mean = moments.mean + A @ prop @ (state_x - moments.state_mean)
    variance = A @ integral @ A.T
    return mean, 0.5 * (variance + variance.T)
