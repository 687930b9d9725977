"""Stationary Gaussian VAR processes with an (x, y, z) coordinate partition.

A model is ``w[k] = F_1 w[k-1] + ... + F_q w[k-q] + e[k]`` with
``e[k] ~ N(0, Q_in)`` i.i.d. Everything downstream (autocovariances, spectral
bounds, simulated data) is derived from the companion form

    s[k] = [w[k]; w[k-1]; ...; w[k-q+1]],   s[k+1] = A_c s[k] + G e[k+1].
"""
import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .errors import (
    BadIndex,
    BadPartition,
    NoConvergence,
    NoiseNotPD,
    SingularAtFrequency,
    Unstable,
    ValidationError,
)
from .matan import cholesky, spectral_norm, symmetrize

STABILITY_MARGIN = 1e-9
LYAP_TOL = 1e-12
LYAP_MAX_DOUBLINGS = 200
DEFAULT_PSD_GRID = 4096


@dataclass(frozen=True)
class Partition:
    """Index lists of the x, y and z channels inside the process vector w."""

    x: Tuple[int, ...]
    y: Tuple[int, ...]
    z: Tuple[int, ...] = ()

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                tuple(int(i) for i in d["x"]),
                tuple(int(i) for i in d["y"]),
                tuple(int(i) for i in d.get("z", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadPartition(f"malformed partition {d!r}: {exc}") from None

    def to_dict(self):
        return {"x": list(self.x), "y": list(self.y), "z": list(self.z)}

    @property
    def n_x(self):
        return len(self.x)

    @property
    def n_y(self):
        return len(self.y)

    @property
    def n_z(self):
        return len(self.z)

    @property
    def n_w(self):
        return self.n_x + self.n_y + self.n_z

    @property
    def v(self):
        """Coordinates of the (y, z) subprocess, y first."""
        return self.y + self.z

    def validate(self, n_w=None):
        if self.n_x < 1:
            raise BadPartition("partition needs at least one x coordinate")
        if self.n_y < 1:
            raise BadPartition("partition needs at least one y coordinate")
        every = self.x + self.y + self.z
        if len(set(every)) != len(every):
            raise BadPartition(f"partition indices overlap: {self.to_dict()}")
        n = len(every) if n_w is None else n_w
        if sorted(every) != list(range(n)):
            raise BadPartition(
                f"partition must cover 0..{n - 1} exactly once, got {self.to_dict()}"
            )
        return self


@dataclass(frozen=True, eq=False)
class VarModel:
    """Validated VAR(q) model. Build through :func:`validate_model`."""

    coeffs: np.ndarray  # (q, n, n); coeffs[i - 1] is F_i
    noise_cov: np.ndarray
    partition: Partition

    @property
    def order(self):
        return self.coeffs.shape[0]

    @property
    def n_w(self):
        return self.noise_cov.shape[0]

    def companion(self):
        """Companion matrix ``A_c`` and driving covariance ``Q_c``."""
        q, n = self.order, self.n_w
        A = np.zeros((q * n, q * n))
        A[:n, :] = np.hstack(list(self.coeffs))
        if q > 1:
            A[n:, :-n] = np.eye((q - 1) * n)
        Qc = np.zeros((q * n, q * n))
        Qc[:n, :n] = self.noise_cov
        return A, Qc

    def spectral_radius(self):
        A, _ = self.companion()
        return float(np.max(np.abs(np.linalg.eigvals(A))))

    def to_dict(self):
        return {
            "order": self.order,
            "coeffs": self.coeffs.tolist(),
            "noise_cov": self.noise_cov.tolist(),
            "partition": self.partition.to_dict(),
        }

    def scaled(self, s):
        """Same dynamics with ``w`` multiplied by ``s``."""
        return VarModel(self.coeffs.copy(), self.noise_cov * s * s, self.partition)


def validate_model(spec):
    """Check a raw model description and return a :class:`VarModel`.

    ``spec`` is a mapping following the model JSON schema::

        {"order": q, "coeffs": [F_1, ..., F_q], "noise_cov": Q,
         "partition": {"x": [...], "y": [...], "z": [...]}}

    Raises
    ------
    Unstable
        Companion spectral radius is not below ``1 - 1e-9``.
    NoiseNotPD
        Innovation covariance fails Cholesky.
    BadPartition
        Partition does not split ``0..n_W-1`` into disjoint x, y, z lists.
    """
    if isinstance(spec, VarModel):
        spec = spec.to_dict()
    try:
        coeffs = np.asarray(spec["coeffs"], dtype=np.float64)
        noise_cov = np.asarray(spec["noise_cov"], dtype=np.float64)
        partition = spec["partition"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model description: {exc}") from None
    if coeffs.ndim == 2:
        coeffs = coeffs[None]
    if coeffs.ndim != 3 or coeffs.shape[0] < 1 or coeffs.shape[1] != coeffs.shape[2]:
        raise ValidationError(f"coeffs must be a list of square matrices, got shape {coeffs.shape}")
    q, n = coeffs.shape[0], coeffs.shape[1]
    if "order" in spec and int(spec["order"]) != q:
        raise ValidationError(f"order {spec['order']} does not match {q} coefficient matrices")
    if noise_cov.shape != (n, n):
        raise ValidationError(f"noise_cov must be {n}x{n}, got {noise_cov.shape}")
    if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(noise_cov))):
        raise ValidationError("model has non-finite entries")
    if not isinstance(partition, Partition):
        partition = Partition.from_dict(partition)

    noise_cov = symmetrize(noise_cov)
    try:
        cholesky(noise_cov)
    except Exception:
        raise NoiseNotPD(
            "noise covariance is not positive definite, so the spectral density "
            "has no positive lower bound c_min"
        ) from None

    model = VarModel(coeffs.copy(), noise_cov, partition)
    rho = model.spectral_radius()
    if rho >= 1.0 - STABILITY_MARGIN:
        raise Unstable(f"model is unstable: companion spectral radius {rho:.12g} >= 1")
    partition.validate(n)
    return model


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return validate_model(json.load(fh))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def reference_model(name):
    """Small models with hand-derivable ground truth.

    ``W1``
        x white; ``y[k] = x[k-1] + e_y[k]``; z white. Unit noises. Rate ln(2)/2.
    ``W2``
        x AR(1) with pole 0.9; ``y[k+1] = 0.5 y[k] + 0.5 x[k] + e_y``; z white.
    ``decoupled``
        x AR(1) (0.9) independent of a coupled (y, z) pair. Rate 0.
    ``white``
        Three independent unit white channels.
    """
    part = {"x": [0], "y": [1], "z": [2]}
    if name == "W1":
        F = [[0, 0, 0], [1, 0, 0], [0, 0, 0]]
    elif name == "W2":
        F = [[0.9, 0, 0], [0.5, 0.5, 0], [0, 0, 0]]
    elif name == "decoupled":
        F = [[0.9, 0, 0], [0, 0.5, 0.3], [0, 0, 0.5]]
    elif name == "white":
        F = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    else:
        raise KeyError(f"unknown reference model {name!r}")
    return validate_model({"order": 1, "coeffs": [F], "noise_cov": np.eye(3).tolist(), "partition": part})


def random_stable_var(rng, n_w=3, order=1, radius=0.8, partition=None, noise_scale=1.0):
    """Random VAR with companion spectral radius exactly ``radius``."""
    coeffs = rng.standard_normal((order, n_w, n_w))
    m = VarModel(coeffs, np.eye(n_w), Partition((0,), (1,), ()))
    r = m.spectral_radius()
    if r > 0:
        # Scaling F_i by c^i scales every companion eigenvalue by c.
        c = radius / r
        coeffs = coeffs * (c ** np.arange(1, order + 1))[:, None, None]
    G = rng.standard_normal((n_w, n_w))
    Q = noise_scale * (G @ G.T / n_w + 0.2 * np.eye(n_w))
    if partition is None:
        partition = {"x": [0], "y": [1], "z": list(range(2, n_w))}
    return validate_model({"coeffs": coeffs, "noise_cov": Q, "partition": partition})


def solve_lyapunov_doubling(A, Q, tol=LYAP_TOL, max_doublings=LYAP_MAX_DOUBLINGS):
    """Solve ``P = A P A^T + Q`` by doubling.

    Iterates ``P <- P + A_k P A_k^T``, ``A_k <- A_k^2``; after ``k`` steps ``P``
    holds the first ``2^k`` terms of ``sum_j A^j Q A^jT``. Stops once the
    residual is below ``tol * max(1, ||P||_2)``.
    """
    A = np.asarray(A, dtype=np.float64)
    Q = symmetrize(Q)
    P = Q.copy()
    Ak = A.copy()
    res = np.inf
    for _ in range(max_doublings):
        P = symmetrize(P + Ak @ P @ Ak.T)
        Ak = Ak @ Ak
        res = spectral_norm(P - A @ P @ A.T - Q)
        if res <= tol * max(1.0, spectral_norm(P)):
            return P
    raise NoConvergence(f"Lyapunov doubling did not converge (residual {res:.3g})", gap=res)


@dataclass(frozen=True, eq=False)
class AutocovSequence:
    """``lags[k] = E[w[i+k] w[i]^T]`` for ``k = 0..L``."""

    lags: np.ndarray  # (L + 1, n, n)

    @property
    def n_w(self):
        return self.lags.shape[1]

    @property
    def max_lag(self):
        return self.lags.shape[0] - 1

    def block(self, a, b):
        """``E[w[a] w[b]^T]``."""
        return self.lags[a - b] if a >= b else self.lags[b - a].T

    def toeplitz(self, length):
        """Covariance of the stacked window ``w[0:length]`` (oldest first)."""
        if length - 1 > self.max_lag:
            raise ValueError(f"window of {length} needs lags up to {length - 1}, have {self.max_lag}")
        n = self.n_w
        T = np.empty((length * n, length * n))
        for a in range(length):
            for b in range(length):
                T[a * n:(a + 1) * n, b * n:(b + 1) * n] = self.block(a, b)
        return T

    def select(self, idx):
        return select_autocov(self, idx)


def autocovariance(model, L):
    """Autocovariances ``R[0..L]`` of a validated model."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    A, Qc = model.companion()
    P = solve_lyapunov_doubling(A, Qc)
    n = model.n_w
    lags = np.empty((L + 1, n, n))
    X = P
    for k in range(L + 1):
        lags[k] = X[:n, :n]
        X = A @ X
    lags[0] = symmetrize(lags[0])
    return AutocovSequence(lags)


def select_autocov(acov, idx):
    idx = [int(i) for i in idx]
    if not idx or min(idx) < 0 or max(idx) >= acov.n_w or len(set(idx)) != len(idx):
        raise BadIndex(f"bad index list {idx} for a {acov.n_w}-dimensional process")
    return AutocovSequence(acov.lags[:, idx][:, :, idx].copy())


@dataclass(frozen=True)
class PsdBounds:
    c_min: float
    c_max: float
    grid_size: int
    approximate: bool = True  # grid extremes, not certified bounds


def spectral_density(model, omegas):
    """``Phi(e^{jw}) = F(e^{jw})^{-1} Q_in F(e^{jw})^{-*}`` for each frequency."""
    omegas = np.asarray(omegas, dtype=np.float64)
    n = model.n_w
    z = np.exp(-1j * omegas)[:, None, None]
    Fz = np.broadcast_to(np.eye(n, dtype=complex), (len(omegas), n, n)).copy()
    zi = np.ones_like(z)
    for Fi in model.coeffs:
        zi = zi * z
        Fz -= Fi[None] * zi
    try:
        Finv = np.linalg.inv(Fz)
    except np.linalg.LinAlgError:
        raise SingularAtFrequency("F(e^jw) is singular on the frequency grid") from None
    # Frobenius condition number; an upper bound on the 2-norm one.
    cond = np.linalg.norm(Fz, axis=(1, 2)) * np.linalg.norm(Finv, axis=(1, 2))
    if not np.all(cond <= 1e12):
        k = int(np.argmax(np.nan_to_num(cond, nan=np.inf)))
        raise SingularAtFrequency(f"F(e^jw) is numerically singular at w = {omegas[k]:.6g}")
    Phi = Finv @ model.noise_cov @ np.conj(np.swapaxes(Finv, 1, 2))
    return 0.5 * (Phi + np.conj(np.swapaxes(Phi, 1, 2)))


def psd_bounds(model, grid=DEFAULT_PSD_GRID):
    """Extreme eigenvalues of the spectral density over a uniform grid on [0, 2pi)."""
    if grid < 64:
        raise ValueError("grid must have at least 64 points")
    omegas = 2 * np.pi * np.arange(grid) / grid
    ev = np.linalg.eigvalsh(spectral_density(model, omegas))
    return PsdBounds(float(ev.min()), float(ev.max()), int(grid))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    data: np.ndarray  # (N, n_w)
    seed: Optional[int] = None

    @property
    def N(self):
        return self.data.shape[0]

    @property
    def n_w(self):
        return self.data.shape[1]

    def write_csv(self, path):
        header = ",".join(f"w{i}" for i in range(self.n_w))
        np.savetxt(path, self.data, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def read_csv(cls, path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        if header != [f"w{i}" for i in range(len(header))]:
            raise ValidationError(f"{path}: expected header w0,...,w{{n-1}}, got {','.join(header)}")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != len(header) or data.shape[0] < 1:
            raise ValidationError(f"{path}: expected {len(header)} columns and at least one row")
        if not np.all(np.isfinite(data)):
            raise ValidationError(f"{path}: non-finite entries")
        return cls(data)


def simulate(model, N, seed):
    """Draw ``w[0:N]`` from the stationary law of the model.

    The first ``q`` samples come from the exact stationary distribution of the
    companion state, so no burn-in is needed. Deterministic given ``seed``.
    """
    N = int(N)
    if N < 1:
        raise ValidationError("N must be at least 1")
    q, n = model.order, model.n_w
    A, Qc = model.companion()
    P = solve_lyapunov_doubling(A, Qc)
    rng = np.random.default_rng(seed)
    s0 = cholesky(P) @ rng.standard_normal(q * n)
    init = s0.reshape(q, n)[::-1]
    noise = rng.standard_normal((N, n)) @ cholesky(model.noise_cov).T
    data = _kernels.var_recursion(model.coeffs, init, noise)
    return TimeSeries(data, seed)
