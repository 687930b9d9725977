"""Rate estimation from a finite record ``w[0:N]``.

With lag order ``p`` and ``M = N - p`` overlapping windows, the empirical
block covariance over coordinates ``idx`` is

    R~ = (1/M) sum_{k=0}^{M-1} w[k:k+p+1] w[k:k+p+1]^T,

partitioned as ``[[A~, B~^T], [B~, R~[0]]]`` with the newest sample last.
Its Schur complement estimates the residual covariance; doing this for all
coordinates (Sigma~) and for the (y, z) subprocess (Gamma~) gives

    I~ = 0.5 * (log det Gamma~_yy - log det Sigma~_yy).
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    BadIndex,
    DegenerateData,
    EmptyY,
    GramSingular,
    LeadingBlockSingular,
    WindowTooLong,
)
from .matan import cholesky, cholesky_logdet, schur_complement, symmetrize
from .model import Partition, TimeSeries
from .prediction import ResidualCovariance


@dataclass(frozen=True, eq=False)
class EmpiricalBlockCov:
    matrix: np.ndarray  # n(p+1) square
    p: int
    M: int
    N: int
    n: int
    mean_subtracted: bool

    @property
    def split(self):
        return self.n * self.p

    @property
    def leading(self):
        return self.matrix[:self.split, :self.split]

    @property
    def coupling(self):
        return self.matrix[self.split:, :self.split]

    @property
    def lag0(self):
        return self.matrix[self.split:, self.split:]


@dataclass(frozen=True)
class DIEstimate:
    value: float
    p: int
    M: int
    N: int
    logdet_gamma_yy: float
    logdet_sigma_yy: float
    mean_subtracted: bool
    ridge: float = 0.0

    @property
    def bits(self):
        return self.value / np.log(2.0)

    @property
    def within_guarantee(self):
        """A nonzero ridge puts the estimate outside the error-bound guarantee."""
        return self.ridge == 0.0

    def to_dict(self):
        d = {
            "I_hat_nats": self.value,
            "p": self.p,
            "M": self.M,
            "N": self.N,
            "logdet_gamma_yy": self.logdet_gamma_yy,
            "logdet_sigma_yy": self.logdet_sigma_yy,
            "mean_subtracted": self.mean_subtracted,
        }
        if self.ridge:
            d["ridge"] = self.ridge
            d["within_guarantee"] = False
        return d


def _prepare(data, idx, p, subtract_mean):
    w = data.data if isinstance(data, TimeSeries) else np.asarray(data, dtype=np.float64)
    if w.ndim == 1:
        w = w[:, None]
    N, n_w = w.shape
    idx = [int(i) for i in idx]
    if not idx or min(idx) < 0 or max(idx) >= n_w or len(set(idx)) != len(idx):
        raise BadIndex(f"bad index list {idx} for data with {n_w} columns")
    p = int(p)
    if p < 1:
        raise ValueError("p must be at least 1")
    if p >= N:
        raise WindowTooLong(f"lag order p = {p} needs more than {N} samples")
    x = w[:, idx]
    if subtract_mean:
        x = x - x.mean(axis=0)
    M = N - p
    if M < 2 and np.any(np.ptp(x, axis=0) == 0.0):
        raise DegenerateData("constant coordinate with a single window")
    return np.ascontiguousarray(x), p, M, N


def empirical_block_cov(data, idx, p, subtract_mean=True):
    """Overlapping-window average of stacked outer products over ``idx``."""
    x, p, M, N = _prepare(data, idx, p, subtract_mean)
    R = symmetrize(_kernels.lagged_block_cov(x, p))
    return EmpiricalBlockCov(R, p, M, N, x.shape[1], bool(subtract_mean))


def residual_cov_estimate(cov, ridge=0.0, labels=None):
    """Schur complement of the lagged block ``A~`` in an empirical block covariance."""
    R = cov.matrix
    if ridge:
        R = R.copy()
        R[:cov.split, :cov.split] += ridge * np.eye(cov.split)
    try:
        S = schur_complement(R, cov.split, error=LeadingBlockSingular)
    except LeadingBlockSingular:
        raise LeadingBlockSingular(
            f"leading block is singular at p = {cov.p}, M = {cov.M}; "
            "need more data or a smaller p"
        ) from None
    return ResidualCovariance(S, dict(labels or {}), cov.p, None)


def var_ls_residual_cov(data, idx, p, subtract_mean=True, labels=None):
    """Residual covariance of a least-squares VAR(p) fit over the same windows.

    Regresses ``w[k+p]`` on ``w[k:k+p]`` for ``k = 0..M-1`` through the normal
    equations and averages residual outer products over ``M``.
    """
    x, p, M, N = _prepare(data, idx, p, subtract_mean)
    X = np.hstack([x[i:i + M] for i in range(p)])
    Y = x[p:p + M]
    G = X.T @ X / M
    L = cholesky(G, error=GramSingular, what="regressor Gram matrix")
    coef = np.linalg.solve(L.T, np.linalg.solve(L, X.T @ Y / M))
    E = Y - X @ coef
    return ResidualCovariance(symmetrize(E.T @ E / M), dict(labels or {}), p, None)


def di_rate_estimate(data, partition, p, subtract_mean=True, ridge=0.0):
    """Estimate the causally conditioned directed information rate (nats)."""
    if not isinstance(partition, Partition):
        partition = Partition.from_dict(partition)
    if partition.n_y == 0:
        raise EmptyY("partition has no y coordinates")
    n_w = data.n_w if isinstance(data, TimeSeries) else np.asarray(data).shape[1]
    partition.validate(n_w)

    full = list(range(n_w))
    R = empirical_block_cov(data, full, p, subtract_mean)
    Q = empirical_block_cov(data, partition.v, p, subtract_mean)
    sigma = residual_cov_estimate(R, ridge, labels={"y": partition.y})
    gamma = residual_cov_estimate(Q, ridge, labels={"y": tuple(range(partition.n_y))})
    ld_sigma = cholesky_logdet(sigma.block("y"))
    ld_gamma = cholesky_logdet(gamma.block("y"))
    return DIEstimate(
        0.5 * (ld_gamma - ld_sigma),
        R.p,
        R.M,
        R.N,
        ld_gamma,
        ld_sigma,
        bool(subtract_mean),
        float(ridge),
    )
