"""Entropy rates and the spectral secret key rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ParameterError
from .spectral import SpectralDensity

__all__ = [
    "KeyRateReport",
    "entropy_rate",
    "spectral_divergence",
    "secret_key_rate",
    "monotonicity_violations",
]

ENTROPY_FLOOR = 1e-12
GAUSS_CONST = 0.5 * math.log(2.0 * math.pi) + 0.5


@dataclass(frozen=True)
class KeyRateReport:
    """Key-rate breakdown; ``rate`` is clamped at 0, ``rate_raw`` is not.

    ``rate_se`` and ``entropy_se`` are batch-means standard errors (0 when not
    estimated) and ``violation`` flags a significant drop from the previous
    sweep point.
    """

    m: int | None
    d_ab: float
    d_be: float
    rate_raw: float
    rate: float
    entropy_bob: float
    rate_se: float = 0.0
    violation: bool = False
    entropy_se: float = 0.0


def _floored(P: SpectralDensity, floor: float) -> np.ndarray:
    v = np.maximum(P.values, floor)
    if np.any(v <= 0):
        raise ParameterError("spectrum is nonpositive after flooring")
    return v


def entropy_rate(P: SpectralDensity) -> float:
    """``1/2 ln 2pi + 1/2 + (1/4pi) int ln P``."""
    return GAUSS_CONST + 0.5 * float(np.mean(np.log(_floored(P, ENTROPY_FLOOR))))


def spectral_divergence(P1: SpectralDensity, P2: SpectralDensity) -> float:
    """Itakura-Saito form ``(1/4pi) int (r - ln r - 1)``, ``r = P1/P2``."""
    if P1.theta_points != P2.theta_points:
        raise ParameterError("spectra are tabulated on different grids")
    r = _floored(P1, ENTROPY_FLOOR) / _floored(P2, ENTROPY_FLOOR)
    return 0.5 * float(np.mean(r - np.log(r) - 1.0))


def secret_key_rate(P_bob: SpectralDensity, P_alice: SpectralDensity,
                    P_eve: SpectralDensity, m: int | None = None) -> KeyRateReport:
    d_ab = spectral_divergence(P_bob, P_alice)
    d_be = spectral_divergence(P_eve, P_bob)
    raw = d_ab - d_be
    return KeyRateReport(m, d_ab, d_be, raw, max(0.0, raw), entropy_rate(P_bob))


def monotonicity_violations(rates, ses, n_se: float = 3.0) -> list[bool]:
    """Flag each point whose rate drops below its predecessor by more than
    ``n_se`` combined standard errors; the first point is never flagged."""
    rates = np.asarray(rates, dtype=float)
    ses = np.asarray(ses, dtype=float)
    flags = [False]
    for k in range(1, rates.size):
        tol = n_se * math.hypot(ses[k - 1], ses[k])
        flags.append(bool(rates[k - 1] - rates[k] > tol))
    return flags
