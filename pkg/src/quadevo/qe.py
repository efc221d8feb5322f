"""Quadrature evolution: the optimal least-squares estimator and its diagnostics.

Analytic covariance builders take the GQI spectral density of the input and
return dense ``d x d`` matrices.  Matrix entries use 0-based indices
externally; :func:`build_cov_xk` converts to the 1-based lag expression
``q - 1 - omega*(t - 1)`` internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import LogicalChannel, aggregate_coefficient, g_function
from .core import ParameterError
from .spectral import (AutocorrSequence, SpectralDensity, autocorr_to_spectrum,
                       spectrum_to_autocorr)

__all__ = [
    "ConditioningError",
    "DeconvKernel",
    "EstimatorBundle",
    "auto_ridge",
    "build_cov_xx",
    "build_cov_kk",
    "build_cov_xk",
    "derive_tau",
    "empirical_covariances",
    "solve_estimator",
    "estimate",
    "error_stats",
    "error_covariance",
    "build_bundle",
]

SPECTRAL_FLOOR = 1e-9
TAU_CUTOFF = 1e-10


class ConditioningError(np.linalg.LinAlgError):
    """``cov_kk`` is not positive definite even after the ridge."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class DeconvKernel:
    """Real kernel ``tau(g)`` on lags ``-G..G``."""

    taps: np.ndarray

    def __post_init__(self):
        t = np.array(self.taps, dtype=float)
        if t.ndim != 1 or t.size % 2 == 0 or not np.all(np.isfinite(t)):
            raise ParameterError("kernel taps must be finite with odd length")
        t.setflags(write=False)
        object.__setattr__(self, "taps", t)

    @classmethod
    def impulse(cls, gain: float = 1.0) -> "DeconvKernel":
        return cls(np.array([gain]))

    @property
    def max_lag(self) -> int:
        return self.taps.size // 2

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)


@dataclass(frozen=True)
class EstimatorBundle:
    xi: np.ndarray
    cov_xx: np.ndarray
    cov_kk: np.ndarray
    cov_xk: np.ndarray
    cov_ee: np.ndarray
    trace_ee: float


def auto_ridge(cov_kk: np.ndarray, factor: float = 1e-9) -> float:
    return factor * float(np.trace(cov_kk)) / cov_kk.shape[0]


def _toeplitz(A: AutocorrSequence, d: int) -> np.ndarray:
    return scipy.linalg.toeplitz(A.values[A.max_lag:A.max_lag + d])


def build_cov_xx(gqi: SpectralDensity, d: int) -> np.ndarray:
    """Toeplitz ``[cov_xx]_{qr} = A_hat(q - r)`` from the GQI spectrum."""
    if d < 1:
        raise ParameterError("d must be >= 1")
    return _toeplitz(spectrum_to_autocorr(gqi, d - 1), d)


def build_cov_kk(gqi: SpectralDensity, chan: LogicalChannel, omega: float, d: int,
                 noise_floor: float | None = None, reg_eps: float = 0.0) -> np.ndarray:
    """Gated-spectrum Toeplitz matrix plus noise floor and ridge on the diagonal.

    The gate uses the aggregate single-carrier coefficient of ``chan``.
    ``noise_floor`` defaults to the mean sub-channel noise variance.
    """
    if d < 1:
        raise ParameterError("d must be >= 1")
    if noise_floor is None:
        noise_floor = float(chan.noise_variances.mean())
    G = g_function(gqi.grid, aggregate_coefficient(chan), omega)
    gated = SpectralDensity(gqi.values * G)
    cov = _toeplitz(spectrum_to_autocorr(gated, d - 1), d)
    cov[np.diag_indices(d)] += noise_floor + reg_eps
    return cov


def _cross_lags(d: int, omega: float) -> np.ndarray:
    q = np.arange(1, d + 1)[:, None]
    t = np.arange(1, d + 1)[None, :]
    return q - 1 - omega * (t - 1)


def build_cov_xk(gqi: SpectralDensity, tau: DeconvKernel, omega: float, d: int) -> np.ndarray:
    """``[cov_xk]_{qt} = sum_g tau(g) A_hat(q - 1 - omega*(t - 1) - g)``.

    ``A_hat`` is evaluated at non-integer lags by linear interpolation, the
    same rule :func:`~quadevo.spectral.decimate_autocorr` uses.
    """
    if d < 1:
        raise ParameterError("d must be >= 1")
    if not omega >= 1:
        raise ParameterError("omega must be >= 1")
    L = _cross_lags(d, omega)
    reach = int(math.ceil(np.abs(L).max())) + tau.max_lag + 1
    A_hat = spectrum_to_autocorr(gqi, reach)
    cov = np.zeros((d, d))
    for g, w in zip(tau.lags, tau.taps):
        if w != 0.0:
            cov += w * A_hat.at(L - g)
    return cov


def derive_tau(A: AutocorrSequence, A_hat: AutocorrSequence,
               theta_points: int = 4096) -> DeconvKernel:
    """Zero-phase kernel with ``|tau_hat|^2 = P_A / P_A_hat``.

    Both spectra are floored at ``1e-9``; taps below ``1e-10`` in magnitude
    beyond the last significant lag are dropped.
    """
    P_A = np.maximum(autocorr_to_spectrum(A, theta_points).values, SPECTRAL_FLOOR)
    P_hat = np.maximum(autocorr_to_spectrum(A_hat, theta_points).values, SPECTRAL_FLOOR)
    ratio = P_A / P_hat
    if not np.all(np.isfinite(ratio)) or np.any(ratio <= 0):
        raise ParameterError("nonpositive spectral ratio after flooring")
    taps = spectrum_to_autocorr(SpectralDensity(np.sqrt(ratio)), theta_points // 2 - 1)
    half = taps.values[taps.max_lag:]
    big = np.flatnonzero(np.abs(half) >= TAU_CUTOFF)
    G = int(big[-1]) if big.size else 0
    half = np.where(np.abs(half[:G + 1]) >= TAU_CUTOFF, half[:G + 1], 0.0)
    return DeconvKernel(np.concatenate([half[:0:-1], half]))


def empirical_covariances(x_samples, k_samples, reg_eps: float | None = None):
    """Unbiased sample ``(cov_xx, cov_kk, cov_xk)`` from ``trials x d`` arrays.

    A ridge is added to ``cov_kk``: ``reg_eps`` if given, otherwise
    ``1e-9 * trace(cov_kk) / d``.
    """
    X = np.asarray(x_samples, dtype=float)
    K = np.asarray(k_samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if K.ndim == 1:
        K = K[:, None]
    if X.shape != K.shape:
        raise ParameterError(f"shape mismatch {X.shape} vs {K.shape}")
    n = X.shape[0]
    if n < 2:
        raise ParameterError("need at least 2 trials")
    Xc = X - X.mean(axis=0)
    Kc = K - K.mean(axis=0)
    cov_xx = Xc.T @ Xc / (n - 1)
    cov_kk = Kc.T @ Kc / (n - 1)
    cov_xk = Xc.T @ Kc / (n - 1)
    ridge = auto_ridge(cov_kk) if reg_eps is None else reg_eps
    cov_kk[np.diag_indices_from(cov_kk)] += ridge
    return cov_xx, cov_kk, cov_xk


def _factor(cov_kk):
    try:
        return scipy.linalg.cho_factor(cov_kk, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        lam = float(np.linalg.eigvalsh(cov_kk).min()) if np.all(np.isfinite(cov_kk)) else None
        raise ConditioningError(
            f"cov_kk is not positive definite (min eigenvalue {lam})", lam) from exc


def solve_estimator(cov_xk, cov_kk) -> np.ndarray:
    """Solve ``xi @ cov_kk = cov_xk`` with a Cholesky factorisation."""
    cov_xk = np.atleast_2d(np.asarray(cov_xk, dtype=float))
    cov_kk = np.atleast_2d(np.asarray(cov_kk, dtype=float))
    if cov_kk.shape[0] != cov_kk.shape[1] or cov_xk.shape[1] != cov_kk.shape[0]:
        raise ParameterError(f"incompatible shapes {cov_xk.shape}, {cov_kk.shape}")
    xi = scipy.linalg.cho_solve(_factor(cov_kk), cov_xk.T).T
    scale = np.linalg.norm(cov_xk)
    resid = np.linalg.norm(xi @ cov_kk - cov_xk)
    if resid > 1e-8 * max(scale, np.finfo(float).tiny):
        lam = float(np.linalg.eigvalsh(cov_kk).min())
        raise ConditioningError(
            f"normal-equation residual {resid:.3g} too large (min eigenvalue {lam:.3g})", lam)
    return xi


def estimate(xi, kappa) -> np.ndarray:
    """``E(x) = xi @ kappa``; ``kappa`` may be a ``trials x d`` batch."""
    xi = np.atleast_2d(xi)
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape[-1] != xi.shape[1]:
        raise ParameterError(f"xi is {xi.shape} but kappa has length {kappa.shape[-1]}")
    return kappa @ xi.T


def error_stats(x_true, x_est):
    """Return ``(e, mean(e**2), mean(e))`` with statistics taken over trials (axis 0)."""
    x_true = np.asarray(x_true, dtype=float)
    x_est = np.asarray(x_est, dtype=float)
    if x_true.shape != x_est.shape:
        raise ParameterError(f"shape mismatch {x_true.shape} vs {x_est.shape}")
    e = x_true - x_est
    return e, np.mean(e ** 2, axis=0), np.mean(e, axis=0)


def error_covariance(cov_xx, cov_kk, cov_xk):
    """``cov_ee = cov_xx - cov_xk cov_kk^{-1} cov_xk^T`` and its trace."""
    cov_xx = np.atleast_2d(np.asarray(cov_xx, dtype=float))
    cov_xk = np.atleast_2d(np.asarray(cov_xk, dtype=float))
    xi = solve_estimator(cov_xk, cov_kk)
    cov_ee = cov_xx - xi @ cov_xk.T
    cov_ee = 0.5 * (cov_ee + cov_ee.T)
    return cov_ee, float(np.trace(cov_ee))


def build_bundle(cov_xx, cov_kk, cov_xk) -> EstimatorBundle:
    cov_xx = np.atleast_2d(np.asarray(cov_xx, dtype=float))
    cov_kk = np.atleast_2d(np.asarray(cov_kk, dtype=float))
    cov_xk = np.atleast_2d(np.asarray(cov_xk, dtype=float))
    xi = solve_estimator(cov_xk, cov_kk)
    cov_ee = cov_xx - xi @ cov_xk.T
    cov_ee = 0.5 * (cov_ee + cov_ee.T)
    return EstimatorBundle(xi, cov_xx, cov_kk, cov_xk, cov_ee, float(np.trace(cov_ee)))
