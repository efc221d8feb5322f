"""Gaussian sub-channels, the per-user logical channel and measurement."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import INV_SQRT2, CarrierVector, Domain, ParameterError, SimConfig

__all__ = [
    "SubChannel",
    "LogicalChannel",
    "channel_noise",
    "apply_channel",
    "transmit",
    "measure",
    "gate_transfer",
    "g_function",
    "aggregate_coefficient",
]


@dataclass(frozen=True)
class SubChannel:
    transmittance: complex
    noise_variance: float

    def __post_init__(self):
        T = complex(self.transmittance)
        object.__setattr__(self, "transmittance", T)
        tol = 1e-15
        if not (-tol <= T.real <= INV_SQRT2 + tol and -tol <= T.imag <= INV_SQRT2 + tol):
            raise ParameterError(f"transmittance {T} violates 0 <= Re, Im <= 1/sqrt(2)")
        if self.noise_variance < 0:
            raise ParameterError("noise variance must be >= 0")


@dataclass(frozen=True)
class LogicalChannel:
    """Ordered sub-channels ``[N_0 ... N_{m-1}]`` allocated to one user."""

    subchannels: tuple[SubChannel, ...]

    def __post_init__(self):
        object.__setattr__(self, "subchannels", tuple(self.subchannels))
        if not self.subchannels:
            raise ParameterError("a logical channel needs at least one sub-channel")

    @classmethod
    def uniform(cls, m: int, transmittance: complex, noise_variance: float) -> "LogicalChannel":
        return cls(tuple(SubChannel(transmittance, noise_variance) for _ in range(m)))

    @classmethod
    def from_lists(cls, transmittances: Sequence[complex],
                   noise_variances) -> "LogicalChannel":
        noise = np.broadcast_to(np.asarray(noise_variances, dtype=float), (len(transmittances),))
        return cls(tuple(SubChannel(T, float(s)) for T, s in zip(transmittances, noise)))

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "LogicalChannel":
        return cls.from_lists(cfg.transmittance_array, cfg.sigma_n_sq)

    def __len__(self):
        return len(self.subchannels)

    @property
    def m(self) -> int:
        return len(self.subchannels)

    @property
    def transmittances(self) -> np.ndarray:
        return np.array([s.transmittance for s in self.subchannels])

    @property
    def noise_variances(self) -> np.ndarray:
        return np.array([s.noise_variance for s in self.subchannels])

    def check_equal_parts(self, atol: float = 1e-12) -> bool:
        """Optional ``Re T = Im T`` validation; raises on violation."""
        T = self.transmittances
        if not np.allclose(T.real, T.imag, atol=atol):
            raise ParameterError("Re T != Im T on at least one sub-channel")
        return True


def _values(v):
    if isinstance(v, CarrierVector):
        return v.values
    return np.asarray(v, dtype=complex)


def channel_noise(shape, chan: LogicalChannel, stream: np.random.Generator) -> np.ndarray:
    """Complex noise ``Delta`` with independent ``N(0, sigma_N_i^2)`` quadratures.

    ``shape`` must end with ``m``.  Both quadratures are drawn in one call so a
    stream always yields the same noise for the same shape.
    """
    shape = tuple(shape)
    if shape[-1] != chan.m:
        raise ParameterError(f"noise shape {shape} does not end with m={chan.m}")
    q = stream.standard_normal(shape + (2,))
    scale = np.sqrt(chan.noise_variances)
    return (q[..., 0] + 1j * q[..., 1]) * scale


def apply_channel(subcarriers, chan: LogicalChannel, noise) -> np.ndarray:
    v = _values(subcarriers)
    if v.shape[-1] != chan.m or np.shape(noise) != v.shape:
        raise ParameterError(
            f"dimension mismatch: subcarriers {v.shape}, noise {np.shape(noise)}, m={chan.m}")
    return chan.transmittances * v + noise


def transmit(subcarriers, chan: LogicalChannel, stream: np.random.Generator):
    """``out_i = T_i * in_i + Delta_i`` over the logical channel.

    Accepts a :class:`CarrierVector` (returned as one) or an array whose last
    axis indexes the ``m`` sub-channels.
    """
    v = _values(subcarriers)
    if v.shape[-1] != chan.m:
        raise ParameterError(f"expected {chan.m} subcarriers, got {v.shape[-1]}")
    out = apply_channel(v, chan, channel_noise(v.shape, chan, stream))
    if isinstance(subcarriers, CarrierVector):
        return CarrierVector(out, Domain.MEASURED)
    return out


def measure(noisy, mode: str = "homodyne_x", detection_variance: float = 0.0,
            stream: np.random.Generator | None = None) -> np.ndarray:
    """Homodyne returns the x quadrature; heterodyne both, plus optional detection noise."""
    v = _values(noisy)
    if mode == "homodyne_x":
        return v.real.copy()
    if mode != "heterodyne":
        raise ParameterError(f"unknown measurement mode {mode!r}")
    if detection_variance < 0:
        raise ParameterError("detection variance must be >= 0")
    if detection_variance == 0:
        return v.copy()
    if stream is None:
        raise ParameterError("heterodyne detection noise needs a random stream")
    q = stream.standard_normal(v.shape + (2,)) * math.sqrt(detection_variance)
    return v + q[..., 0] + 1j * q[..., 1]


def gate_transfer(theta, T: complex, omega: float):
    """``T`` inside the band ``|theta| <= pi/omega`` (boundary included), else 0."""
    if not omega >= 1:
        raise ParameterError(f"omega must be >= 1, got {omega}")
    theta = np.asarray(theta, dtype=float)
    out = np.where(np.abs(theta) <= np.pi / omega, complex(T), 0j)
    return out[()] if out.ndim == 0 else out


def g_function(theta, T: complex, omega: float):
    """``gate(theta) * conj(gate(-theta))``, i.e. ``|T|^2`` in band, else 0."""
    theta = np.asarray(theta, dtype=float)
    out = (gate_transfer(theta, T, omega) * np.conj(gate_transfer(-theta, T, omega))).real
    return out[()] if np.ndim(out) == 0 else out


def aggregate_coefficient(chan) -> complex:
    """Single-carrier coefficient: mean of the sub-channel transmittances.

    :param chan: a :class:`LogicalChannel` or a plain sequence of transmittances
    """
    if isinstance(chan, LogicalChannel):
        T = chan.transmittances
    else:
        T = np.asarray(chan, dtype=complex).ravel()
        if T.size == 0:
            raise ParameterError("need at least one transmittance")
    return complex(T.sum() / T.size)
