"""Carrier-domain data types, run configuration and seeded Gaussian sampling.

Random streams
--------------
Every stream is a :class:`numpy.random.Generator` backed by ``PCG64`` and
seeded through :class:`numpy.random.SeedSequence`.  Normal deviates come from
numpy's ziggurat ``standard_normal``.  A trial's stream is derived from
``SeedSequence(seed, spawn_key=(trial,))`` so trials can be generated in any
order (or in parallel) without changing a single bit of the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "ParameterError",
    "CovMode",
    "Domain",
    "WindowSpec",
    "CarrierVector",
    "SimConfig",
    "make_stream",
    "trial_stream",
    "sample_gaussian_vector",
    "sample_complex_carrier",
]

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class ParameterError(ValueError):
    """Raised when a numerical parameter is outside its admissible range."""


class CovMode(str, Enum):
    EMPIRICAL = "empirical"
    ANALYTIC = "analytic"


class Domain(str, Enum):
    SINGLE_CARRIER = "single_carrier"
    SUBCARRIER = "subcarrier"
    MEASURED = "measured"


@dataclass(frozen=True)
class WindowSpec:
    """Cosine window ``beta_i = 1 + sum_y C_y cos(y Q_i)``; ``C_0`` is fixed at 1."""

    P: int = 0
    C: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "C", tuple(float(c) for c in self.C))
        if self.P < 0:
            raise ParameterError(f"window P must be >= 0, got {self.P}")
        if len(self.C) != self.P:
            raise ParameterError(
                f"window needs exactly P={self.P} coefficients, got {len(self.C)}")

    @classmethod
    def from_coefficients(cls, C: Sequence[float]) -> "WindowSpec":
        return cls(len(C), tuple(C))


@dataclass(frozen=True)
class CarrierVector:
    """Complex Gaussian vector (``z``, ``d`` or ``kappa``) with quadrature views."""

    values: np.ndarray
    domain_tag: Domain = Domain.SINGLE_CARRIER

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 1:
            raise ParameterError("CarrierVector values must be one-dimensional")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain_tag", Domain(self.domain_tag))

    def __len__(self):
        return self.values.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.values.real

    @property
    def p(self) -> np.ndarray:
        return self.values.imag


@dataclass(frozen=True)
class SimConfig:
    """Single source of truth for a simulation run.

    ``transmittances`` holds ``m`` ``(re, im)`` pairs.  ``reg_eps=None`` selects
    the automatic ridge ``1e-9 * trace(cov_kk) / d``; a number is used as an
    absolute ridge.  The fields after ``lambda0`` are optional extensions
    (detection noise, Eve's excess floor and key-rate estimation settings).
    """

    d: int
    m: int
    sigma_w0_sq: float
    sigma_w_sq: float
    sigma_n_sq: float
    transmittances: tuple[tuple[float, float], ...]
    seed: int
    trials: int
    window: WindowSpec = field(default_factory=WindowSpec)
    theta_points: int = 4096
    reg_eps: float | None = None
    cov_mode: CovMode = CovMode.EMPIRICAL
    lambda0: float = 1.0
    detection_variance: float = 0.0
    eve_excess: float = 0.0
    key_lags: int | None = None
    key_batches: int = 10

    def __post_init__(self):
        pairs = tuple((float(re), float(im)) for re, im in self.transmittances)
        object.__setattr__(self, "transmittances", pairs)
        object.__setattr__(self, "cov_mode", CovMode(self.cov_mode))
        self.validate()

    def validate(self) -> None:
        for name in ("d", "m", "trials"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.theta_points < 16 or self.theta_points % 2:
            raise ParameterError("theta_points must be even and >= 16")
        if not self.sigma_w0_sq > 0 or self.sigma_w_sq <= 0:
            raise ParameterError("modulation variances must be positive")
        if not self.sigma_w_sq < self.sigma_w0_sq:
            raise ParameterError(
                "sigma_w_sq must be strictly below sigma_w0_sq (Omega > 1)")
        if self.sigma_n_sq < 0 or self.detection_variance < 0 or self.eve_excess < 0:
            raise ParameterError("noise variances must be >= 0")
        if len(self.transmittances) != self.m:
            raise ParameterError(
                f"expected {self.m} transmittances, got {len(self.transmittances)}")
        for re, im in self.transmittances:
            if not (0.0 <= re <= INV_SQRT2 + 1e-15 and 0.0 <= im <= INV_SQRT2 + 1e-15):
                raise ParameterError(
                    f"transmittance ({re}, {im}) outside [0, 1/sqrt(2)] bounds")
        if self.reg_eps is not None and self.reg_eps < 0:
            raise ParameterError("reg_eps must be >= 0")
        if self.lambda0 == 0:
            raise ParameterError("lambda0 must be nonzero")
        if self.key_lags is not None and self.key_lags < 0:
            raise ParameterError("key_lags must be >= 0")
        if self.key_batches < 2:
            raise ParameterError("key_batches must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @property
    def omega(self) -> float:
        """Single-carrier to subcarrier variance ratio."""
        return self.sigma_w0_sq / self.sigma_w_sq

    @property
    def transmittance_array(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.transmittances])

    def with_m(self, m: int) -> "SimConfig":
        """Copy with ``m`` sub-channels; needs a uniform transmittance profile."""
        if len(set(self.transmittances)) > 1:
            raise ParameterError("changing m requires uniform transmittances")
        return replace(self, m=m, transmittances=(self.transmittances[0],) * m)


def make_stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    return make_stream(seed, trial)


def _check_variance(variance):
    if variance < 0:
        raise ParameterError(f"variance must be >= 0, got {variance}")


def sample_gaussian_vector(n, variance: float, stream: np.random.Generator) -> np.ndarray:
    """Draw ``n`` (int or shape) i.i.d. zero-mean normals of the given variance."""
    _check_variance(variance)
    if np.prod(n) < 1:
        raise ParameterError("n must be >= 1")
    return stream.standard_normal(n) * math.sqrt(variance)


def sample_complex_carrier(n: int, quad_variance: float, stream: np.random.Generator,
                           domain_tag: Domain = Domain.SINGLE_CARRIER) -> CarrierVector:
    """Complex carrier with independent ``N(0, quad_variance)`` quadratures."""
    q = sample_gaussian_vector((n, 2), quad_variance, stream)
    return CarrierVector(q[:, 0] + 1j * q[:, 1], domain_tag)
