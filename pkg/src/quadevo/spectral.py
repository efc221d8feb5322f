"""Unitary DFT pair and the spectral density / autocorrelation duality.

Spectra live on the periodic grid ``theta_k = -pi + 2*pi*k/N``; on such a grid
the composite trapezoid rule reduces to a plain mean, which is what
:func:`spectrum_to_autocorr` evaluates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ParameterError

__all__ = [
    "SpectralDensity",
    "AutocorrSequence",
    "theta_grid",
    "unitary_dft",
    "unitary_idft",
    "spectrum_to_autocorr",
    "autocorr_to_spectrum",
    "decimate_autocorr",
]


def theta_grid(theta_points: int) -> np.ndarray:
    if theta_points < 2 or theta_points % 2:
        raise ParameterError("theta_points must be even")
    return -np.pi + 2.0 * np.pi * np.arange(theta_points) / theta_points


@dataclass(frozen=True)
class SpectralDensity:
    """Nonnegative, even spectrum tabulated on :func:`theta_grid`.

    ``clamped_mass`` is the integral (normalised by ``2*pi``) of the negative
    part removed when the spectrum was synthesised from an autocorrelation.
    """

    values: np.ndarray
    clamped_mass: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2 or v.size % 2:
            raise ParameterError("spectrum needs an even number of grid values")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ParameterError("spectral density must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        return theta_grid(self.values.size)

    @property
    def theta_points(self) -> int:
        return self.values.size

    @classmethod
    def constant(cls, level: float, theta_points: int = 4096) -> "SpectralDensity":
        return cls(np.full(theta_points, float(level)))

    @classmethod
    def from_function(cls, fn, theta_points: int = 4096) -> "SpectralDensity":
        return cls(np.asarray(fn(theta_grid(theta_points)), dtype=float))

    def integral_mean(self) -> float:
        """``(1/2pi) * integral of P``."""
        return float(self.values.mean())


@dataclass(frozen=True)
class AutocorrSequence:
    """Real autocorrelation on lags ``-G..G``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size % 2 == 0:
            raise ParameterError("autocorrelation needs 2G+1 values for lags -G..G")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_nonnegative(cls, half) -> "AutocorrSequence":
        """Build the symmetric sequence from lags ``0..G``."""
        half = np.asarray(half, dtype=float)
        return cls(np.concatenate([half[:0:-1], half]))

    @property
    def max_lag(self) -> int:
        return self.values.size // 2

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)

    def __getitem__(self, g: int) -> float:
        if abs(g) > self.max_lag:
            return 0.0
        return float(self.values[g + self.max_lag])

    def at(self, lag) -> np.ndarray:
        """Evaluate at (possibly non-integer) lags by linear interpolation; 0 outside support."""
        lag = np.asarray(lag, dtype=float)
        return np.interp(lag, self.lags, self.values, left=0.0, right=0.0)


def unitary_dft(v, axis: int = -1) -> np.ndarray:
    return np.fft.fft(np.asarray(v, dtype=complex), axis=axis, norm="ortho")


def unitary_idft(v, axis: int = -1) -> np.ndarray:
    return np.fft.ifft(np.asarray(v, dtype=complex), axis=axis, norm="ortho")


def spectrum_to_autocorr(P: SpectralDensity, G: int) -> AutocorrSequence:
    """``A(g) = (1/2pi) int P(theta) e^{i g theta} dtheta`` for ``|g| <= G``."""
    if G < 0:
        raise ParameterError("max lag G must be >= 0")
    theta = P.grid
    g = np.arange(G + 1)
    half = (np.cos(np.outer(g, theta)) @ P.values) / P.theta_points
    return AutocorrSequence.from_nonnegative(half)


def autocorr_to_spectrum(A: AutocorrSequence, theta_points: int = 4096) -> SpectralDensity:
    """Truncated Fourier sum of ``A``; negative values are clamped to zero."""
    theta = theta_grid(theta_points)
    lags = A.lags
    raw = np.cos(np.outer(theta, lags)) @ A.values
    neg = np.minimum(raw, 0.0)
    return SpectralDensity(raw - neg, clamped_mass=float(-neg.mean()))


def decimate_autocorr(A: AutocorrSequence, omega: float) -> AutocorrSequence:
    """``A'(g) = A(omega * g)`` with linear interpolation at non-integer lags."""
    if not omega >= 1:
        raise ParameterError(f"omega must be >= 1, got {omega}")
    G = int(math.floor(A.max_lag / omega + 1e-12))
    return AutocorrSequence.from_nonnegative(A.at(omega * np.arange(G + 1)))
