"""First-order radio energy model and battery bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

NANO = 1e-9
PICO = 1e-12


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = 50 * NANO  # J/bit
    eps_fs: float = 10 * PICO  # J/bit/m^2
    eps_mp: float = 0.0013 * PICO  # J/bit/m^4

    def __post_init__(self) -> None:
        if not (self.e_elec > 0 and self.eps_fs > 0 and self.eps_mp > 0):
            raise ValueError("radio parameters must be strictly positive")

    @property
    def d0(self) -> float:
        return crossover_distance(self)


def crossover_distance(params: RadioParams) -> float:
    return math.sqrt(params.eps_fs / params.eps_mp)


def tx_energy(params: RadioParams, k, d):
    """Energy to transmit ``k`` bits over ``d`` metres.

    Free-space (d^2) loss below the crossover distance, multipath (d^4) at or
    above it.  Accepts scalars or numpy arrays.
    """
    d0 = crossover_distance(params)
    if np.ndim(k) == 0 and np.ndim(d) == 0:
        if d < d0:
            return k * params.e_elec + k * params.eps_fs * d * d
        return k * params.e_elec + k * params.eps_mp * d**4
    k = np.asarray(k, dtype=float)
    d = np.asarray(d, dtype=float)
    amp = np.where(d < d0, params.eps_fs * d * d, params.eps_mp * d**4)
    return k * params.e_elec + k * amp


def rx_energy(params: RadioParams, k):
    return k * params.e_elec


@dataclass(frozen=True)
class Battery:
    capacity: float
    residual: float
    death_threshold: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.residual <= self.capacity:
            raise ValueError("residual must lie in [0, capacity]")
        if self.death_threshold < 0:
            raise ValueError("death threshold must be non-negative")

    @classmethod
    def full(cls, capacity: float, death_threshold: float = 0.0) -> "Battery":
        return cls(capacity, capacity, death_threshold)

    @property
    def alive(self) -> bool:
        return self.residual >= self.death_threshold


def drain(battery: Battery, amount: float) -> tuple[Battery, bool]:
    """Spend ``amount`` joules; returns the new battery and its liveness."""
    if amount < 0:
        raise ValueError(f"cannot drain a negative amount ({amount})")
    if amount == 0:
        return battery, battery.alive
    out = replace(battery, residual=max(battery.residual - amount, 0.0))
    return out, out.alive
