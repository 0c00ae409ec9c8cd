"""Disc partitioning into sectors and tracks.

The deployment area is a disc of radius ``R`` centred on the base station.
It is cut into ``n_t`` concentric tracks of width ``r`` and ``n_s`` sectors
of angle ``theta``; every (sector, track) cell is a region that hosts one
FFD.  Angles are radians here; degrees are converted at the config layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

TAU = 2.0 * math.pi
_INTEGRAL_TOL = 1e-9


class ConfigError(ValueError):
    """Raised for parameter combinations that cannot describe a valid network."""


class OutsideAreaError(ValueError):
    """Raised when a point lies outside the deployment disc."""


class RegionId(NamedTuple):
    sector: int
    track: int


class PolarPoint(NamedTuple):
    rho: float
    phi: float

    def to_xy(self) -> tuple[float, float]:
        return self.rho * math.cos(self.phi), self.rho * math.sin(self.phi)


def _integral_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _INTEGRAL_TOL * max(1.0, abs(ratio)):
        raise ConfigError(f"{what} must be a positive integer, got {ratio!r}")
    return int(n)


@dataclass(frozen=True)
class PartitionSpec:
    """Circle radius ``R``, track width ``r`` and sector angle ``theta``."""

    R: float
    r: float
    theta: float

    def __post_init__(self) -> None:
        if not (self.R > 0 and 0 < self.r <= self.R):
            raise ConfigError(f"need 0 < r <= R, got r={self.r}, R={self.R}")
        if not (0 < self.theta <= math.pi + _INTEGRAL_TOL):
            raise ConfigError(f"need 0 < theta <= pi, got theta={self.theta}")
        _integral_ratio(self.R, self.r, "R/r")
        _integral_ratio(TAU, self.theta, "2*pi/theta")

    @classmethod
    def from_counts(cls, R: float, n_tracks: int, n_sectors: int) -> "PartitionSpec":
        return cls(R=R, r=R / n_tracks, theta=TAU / n_sectors)

    @property
    def n_t(self) -> int:
        return track_count(self)

    @property
    def n_s(self) -> int:
        return sector_count(self)

    def regions(self) -> list[RegionId]:
        """All regions, sector-major, tracks centre outward."""
        return [RegionId(s, t) for s in range(1, self.n_s + 1) for t in range(1, self.n_t + 1)]


def track_count(spec: PartitionSpec) -> int:
    return _integral_ratio(spec.R, spec.r, "R/r")


def sector_count(spec: PartitionSpec) -> int:
    return _integral_ratio(TAU, spec.theta, "2*pi/theta")


def region_count(spec: PartitionSpec) -> int:
    """Number of regions, which is also the number of FFDs."""
    return track_count(spec) * sector_count(spec)


def rfd_density(N: int, R: float) -> float:
    return N / (math.pi * R * R)


def _check_track(spec: PartitionSpec, track: int) -> None:
    if not 1 <= track <= spec.n_t:
        raise ValueError(f"track {track} outside 1..{spec.n_t}")


def region_area(spec: PartitionSpec, track: int) -> float:
    """Area of one region in ``track`` (an annular sector)."""
    _check_track(spec, track)
    return (track - 0.5) * spec.theta * spec.r**2


def expected_rfds(spec: PartitionSpec, N: int, track: int) -> float:
    """Expected RFD population of one region in ``track`` under uniform deployment."""
    _check_track(spec, track)
    return N * spec.theta * spec.r**2 / (math.pi * spec.R**2) * (track - 0.5)


def ffd_position(spec: PartitionSpec, region: RegionId) -> PolarPoint:
    """FFD site: radius ``(track - 1/2) r`` on the sector bisector."""
    sector, track = region
    if not (1 <= sector <= spec.n_s):
        raise ValueError(f"sector {sector} outside 1..{spec.n_s}")
    _check_track(spec, track)
    return PolarPoint((track - 0.5) * spec.r, (sector - 0.5) * spec.theta)


def locate_region(spec: PartitionSpec, p: PolarPoint) -> RegionId:
    """Region containing ``p``.

    Tracks are closed on the outside, ``((i-1) r, i r]``; sectors are closed on
    the leading edge, ``[(s-1) theta, s theta)``.
    """
    rho, phi = p
    if rho > spec.R * (1 + _INTEGRAL_TOL):
        raise OutsideAreaError(f"rho={rho} beyond R={spec.R}")
    if rho <= 0:
        raise OutsideAreaError("region undefined at the base station")
    n_t, n_s = spec.n_t, spec.n_s
    track = min(max(math.ceil(rho / spec.r - _INTEGRAL_TOL), 1), n_t)
    phi = phi % TAU
    sector = min(int(phi // spec.theta) + 1, n_s)
    return RegionId(sector, track)


def distance(p: PolarPoint, q: PolarPoint) -> float:
    # half-angle form of the law of cosines; no cancellation for close points
    s = math.sin(0.5 * (p.phi - q.phi))
    return math.sqrt((p.rho - q.rho) ** 2 + 4.0 * p.rho * q.rho * s * s)
