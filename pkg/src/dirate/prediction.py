"""Ground truth from known models.

Finite-horizon prediction residuals ``S_i = R[0] - B_i A_i^{-1} B_i^T`` come
from Schur complements of block-Toeplitz covariances. They decrease
geometrically to the infinite-past residual covariance (Sigma for the full
process, Gamma for the (y, z) subprocess), from which the exact rate is

    I = 0.5 * (log det Gamma_yy - log det Sigma_yy)    [nats].

The steady-state Kalman predictor supplies the pole radius ``rho`` and gain
bound ``b`` that control how fast that convergence happens.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import InnovationSingular, NoConvergence, NumericalError
from .matan import cholesky, cholesky_logdet, schur_complement, spectral_norm, symmetrize
from .model import autocovariance, select_autocov, solve_lyapunov_doubling

DEFAULT_TOL = 1e-10
DEFAULT_I_MAX = 4096
FIRST_HORIZON = 8

RICCATI_TOL = 1e-11
RICCATI_MAX_ITER = 1_000_000
RHO_MARGIN = 1.02
RHO_FLOOR = 1e-3
RHO_CEIL = 0.999
B_SAFETY = 1.1
B_GRID = 1024


@dataclass(frozen=True, eq=False)
class FiniteHorizonResidual:
    horizon: int
    S: np.ndarray


@dataclass(frozen=True, eq=False)
class ResidualCovariance:
    """One-step prediction-error covariance with labelled coordinate blocks.

    ``labels`` maps a channel name to its positions inside ``full``.
    """

    full: np.ndarray
    labels: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    horizon: Optional[int] = None
    gap: Optional[float] = None

    def block(self, a, b=None):
        b = a if b is None else b
        return self.full[np.ix_(self.labels[a], self.labels[b])]


@dataclass(frozen=True)
class DIRate:
    value: float
    sigma_yy_logdet: float
    gamma_yy_logdet: float
    tol: float
    horizon_sigma: int
    horizon_gamma: int
    gap_sigma: float
    gap_gamma: float

    def to_dict(self):
        return {
            "value_nats": self.value,
            "sigma_yy_logdet": self.sigma_yy_logdet,
            "gamma_yy_logdet": self.gamma_yy_logdet,
            "tol": self.tol,
            "horizon_sigma": self.horizon_sigma,
            "horizon_gamma": self.horizon_gamma,
            "gap_sigma": self.gap_sigma,
            "gap_gamma": self.gap_gamma,
        }


@dataclass(frozen=True)
class PredictorParams:
    rho: float
    b: float
    pole_magnitudes: Tuple[float, ...]
    iterations: int = 0


def finite_horizon_residual(acov, i):
    """Residual covariance of predicting ``w[i]`` from ``w[0:i]``."""
    if i < 1:
        raise ValueError("horizon must be at least 1")
    T = acov.toeplitz(i + 1)
    return FiniteHorizonResidual(i, schur_complement(T, acov.n_w * i))


def exact_residual_cov(acov, tol=DEFAULT_TOL, i_max=DEFAULT_I_MAX, labels=None):
    """Infinite-past residual covariance by horizon doubling.

    Compares ``S_i`` with ``S_{i/2}`` for ``i = 8, 16, 32, ...`` and stops at the
    first horizon where their spectral-norm distance is at most ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    limit = min(i_max, acov.max_lag)
    i = FIRST_HORIZON
    if i > limit:
        raise NoConvergence(f"autocovariance supplies only {acov.max_lag} lags; need {i}")
    prev = finite_horizon_residual(acov, i // 2).S
    gap = np.inf
    while i <= limit:
        S = finite_horizon_residual(acov, i).S
        # S_i is nonincreasing in i (semidefinite order).
        if np.linalg.eigvalsh(symmetrize(prev - S))[0] < -tol:
            raise NumericalError(f"finite-horizon residuals not monotone at horizon {i}")
        gap = spectral_norm(S - prev)
        if gap <= tol:
            return ResidualCovariance(S, dict(labels or {}), i, gap)
        prev = S
        i *= 2
    raise NoConvergence(
        f"residual covariance did not converge by horizon {i // 2} (last gap {gap:.3g})", gap=gap
    )


def exact_di_rate(model, tol=DEFAULT_TOL, i_max=DEFAULT_I_MAX):
    """Exact causally conditioned directed information rate, in nats."""
    part = model.partition
    acov = autocovariance(model, i_max)
    sigma = exact_residual_cov(acov, tol, i_max, labels={"x": part.x, "y": part.y, "z": part.z})
    n_y = part.n_y
    v_labels = {"y": tuple(range(n_y)), "z": tuple(range(n_y, n_y + part.n_z))}
    gamma = exact_residual_cov(select_autocov(acov, part.v), tol, i_max, labels=v_labels)
    ld_sigma = cholesky_logdet(sigma.block("y"))
    ld_gamma = cholesky_logdet(gamma.block("y"))
    return DIRate(
        0.5 * (ld_gamma - ld_sigma),
        ld_sigma,
        ld_gamma,
        tol,
        sigma.horizon,
        gamma.horizon,
        sigma.gap,
        gamma.gap,
    )


def steady_state_predictor(model, idx, tol=RICCATI_TOL, max_iter=RICCATI_MAX_ITER):
    """Steady-state one-step predictor of the coordinates ``idx``.

    Runs the noise-free-measurement Riccati recursion on the companion form
    with observation ``C s[k] = w[k][idx]``.

    Returns
    -------
    Acl : closed-loop matrix ``A - K C``
    K : predictor gain
    C : observation matrix
    iterations : int
    """
    A, Qc = model.companion()
    idx = list(idx)
    C = np.zeros((len(idx), A.shape[0]))
    C[np.arange(len(idx)), idx] = 1.0
    P = solve_lyapunov_doubling(A, Qc)
    for it in range(1, max_iter + 1):
        try:
            L = cholesky(C @ P @ C.T, error=InnovationSingular, what="innovation covariance")
        except InnovationSingular:
            raise InnovationSingular(f"innovation covariance lost rank at iteration {it}") from None
        W = np.linalg.solve(L, C @ P)  # L^{-1} C P
        P_new = symmetrize(A @ (P - W.T @ W) @ A.T + Qc)
        gap = spectral_norm(P_new - P)
        P = P_new
        if gap <= tol * max(1.0, spectral_norm(P)):
            break
    else:
        raise NoConvergence(f"Riccati iteration did not converge in {max_iter} steps", gap=gap)
    S = C @ P @ C.T
    K = A @ P @ C.T @ np.linalg.inv(symmetrize(S))
    return A - K @ C, K, C, it


def kalman_predictor_poles(model, idx, rho=None):
    """Pole radius ``rho`` and gain bound ``b`` of the optimal predictor of ``idx``.

    ``rho`` sits strictly above every closed-loop pole; ``b`` upper-bounds
    ``||H(z)||_2`` on ``|z| >= rho`` by sampling the circle ``|z| = rho`` (the
    maximum over the exterior is attained there) with a safety factor.
    Passing ``rho`` evaluates ``b`` at that radius instead, which must still
    exceed every pole.
    """
    Acl, K, C, it = steady_state_predictor(model, idx)
    mags = np.sort(np.abs(np.linalg.eigvals(Acl)))[::-1]
    top = float(mags[0]) if mags.size else 0.0
    if rho is None:
        rho = min(RHO_CEIL, max(RHO_FLOOR, top * RHO_MARGIN))
        if rho <= top:
            rho = 0.5 * (1.0 + top)
    elif not top < rho < 1.0:
        raise ValueError(f"rho = {rho} must lie in ({top:.6g}, 1)")
    best = 0.0
    if np.any(K != 0.0):
        zs = rho * np.exp(2j * np.pi * np.arange(B_GRID) / B_GRID)
        lhs = zs[:, None, None] * np.eye(Acl.shape[0]) - Acl
        H = C @ np.linalg.solve(lhs, np.broadcast_to(K, (B_GRID,) + K.shape))
        best = float(np.linalg.svd(H, compute_uv=False)[:, 0].max())
    return PredictorParams(rho, B_SAFETY * best, tuple(float(m) for m in mags), it)


def joint_predictor_params(model):
    """Common ``(rho, b)`` covering both the full-process and (y, z) predictors.

    ``rho`` is the larger of the two radii; ``b`` is the larger of the two gain
    bounds, both evaluated on that common circle.
    """
    full = list(range(model.n_w))
    sub = list(model.partition.v)
    rho = max(kalman_predictor_poles(model, full).rho, kalman_predictor_poles(model, sub).rho)
    h = kalman_predictor_poles(model, full, rho=rho)
    j = kalman_predictor_poles(model, sub, rho=rho)
    return PredictorParams(rho, max(h.b, j.b), tuple(sorted(h.pole_magnitudes + j.pole_magnitudes, reverse=True)))
