"""Direct Gaussian quadrature inference (DGQI).

The DGQI output is the inverse transform of the measured subcarrier
quadratures shaped by a cosine window.  The two-transform convolution is
evaluated through the convolution theorem::

    dgqi(x', beta) = unitary_idft(x' * beta)
                   = circconv(unitary_idft(x'), unitary_idft(beta)) / sqrt(m)

so that ``beta == 1`` is exactly the identity window.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import LogicalChannel, gate_transfer
from .core import ParameterError, WindowSpec
from .spectral import unitary_idft

__all__ = [
    "GqiOutput",
    "beta_window",
    "dgqi_estimate",
    "epsilon_max",
    "optimize_window",
    "grid_product",
    "lagrangian_autocorr",
]


@dataclass(frozen=True)
class GqiOutput:
    values: np.ndarray
    window_used: WindowSpec
    epsilon_achieved: float = 0.0

    def __post_init__(self):
        if self.epsilon_achieved < 0:
            raise ParameterError("epsilon must be >= 0")


def beta_window(spec: WindowSpec, m: int) -> np.ndarray:
    if m < 1:
        raise ParameterError("m must be >= 1")
    Q = 2.0 * np.pi * np.arange(m) / m
    beta = np.ones(m)
    for y, c in enumerate(spec.C, start=1):
        beta += c * np.cos(y * Q)
    return beta


def dgqi_estimate(measured, spec: WindowSpec, reference=None) -> GqiOutput:
    """Windowed inverse transform of the measured subcarrier quadratures.

    ``measured`` may be a batch (last axis = subcarriers).  When ``reference``
    is given, ``epsilon_achieved`` is the worst magnitude error against it.
    """
    x = np.asarray(measured)
    m = x.shape[-1]
    values = unitary_idft(x * beta_window(spec, m))
    eps = 0.0 if reference is None else epsilon_max(reference, values)
    return GqiOutput(values, spec, eps)


def epsilon_max(x, x_prime) -> float:
    """``max_j | |x_j|^2 - |x'_j|^2 |``."""
    x = np.asarray(x)
    x_prime = np.asarray(x_prime)
    if x.shape != x_prime.shape:
        raise ParameterError(f"length mismatch {x.shape} vs {x_prime.shape}")
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(np.abs(x) ** 2 - np.abs(x_prime) ** 2)))


def grid_product(values: Sequence[float], P: int) -> list[tuple[float, ...]]:
    """Cartesian search grid with the same candidate values on every coefficient."""
    return list(itertools.product(values, repeat=P))


def optimize_window(measured, reference, P: int,
                    grid: Iterable[Sequence[float]]) -> WindowSpec:
    """Grid search for the window coefficients minimising :func:`epsilon_max`.

    Ties go to the smallest ``||C||_2``, then to the lexicographically smallest ``C``.
    """
    if P < 1:
        raise ParameterError("P must be >= 1")
    best = None
    for C in grid:
        C = tuple(float(c) for c in C)
        if len(C) != P:
            raise ParameterError(f"grid point {C} does not have P={P} entries")
        spec = WindowSpec(P, C)
        eps = epsilon_max(reference, dgqi_estimate(measured, spec).values)
        key = (eps, float(np.linalg.norm(C)), C)
        if best is None or key < best[0]:
            best = (key, spec)
    if best is None:
        raise ParameterError("empty coefficient grid")
    return best[1]


def lagrangian_autocorr(i: int, g: int, chan: LogicalChannel, omega: float,
                        lambda0: float, theta_points: int = 4096,
                        guard: float = 1e-6) -> float:
    """Inference-derived autocorrelation coefficient of sub-channel ``i``.

    Integrates ``| |T_i|^2 e^{i theta g} / (|T_0|^2 lambda0 cos theta) |`` over
    the gate band with the trapezoid rule on ``theta_points`` intervals.  Nodes
    with ``|cos theta| < guard`` are excised.  The modulus removes the lag
    phase, so the value does not depend on ``g``.
    """
    if lambda0 == 0:
        raise ParameterError("lambda0 must be nonzero")
    if not 0 <= i < chan.m:
        raise ParameterError(f"sub-channel index {i} out of range")
    edge = np.pi / omega
    theta = np.linspace(-edge, edge, theta_points + 1)
    Ti = np.abs(gate_transfer(theta, chan.transmittances[i], omega)) ** 2
    T0 = np.abs(gate_transfer(theta, chan.transmittances[0], omega)) ** 2
    if np.all(Ti == 0):
        return 0.0
    if np.any((T0 == 0) & (Ti != 0)):
        raise ParameterError("reference sub-channel has zero transmittance in band")
    cos = np.cos(theta)
    keep = np.abs(cos) >= guard
    f = np.zeros_like(theta)
    f[keep] = np.abs(Ti[keep] * np.exp(1j * theta[keep] * g)
                     / (T0[keep] * lambda0 * cos[keep]))
    w = np.full(theta.size, theta[1] - theta[0])
    w[[0, -1]] *= 0.5
    return float((w * f).sum() / (2.0 * np.pi))
