import math

import pytest
from hypothesis import given, strategies as st

from chainwsn.geometry import (
    ConfigError, OutsideAreaError, PartitionSpec, PolarPoint, RegionId,
    distance, expected_rfds, ffd_position, locate_region, region_area,
    region_count, rfd_density, sector_count, track_count,
)


@pytest.fixture
def ref():
    return PartitionSpec(50.0, 25.0, math.pi)


def test_reference_counts(ref):
    assert track_count(ref) == 2
    assert sector_count(ref) == 2
    assert region_count(ref) == 4
    assert ref.regions() == [RegionId(1, 1), RegionId(1, 2), RegionId(2, 1), RegionId(2, 2)]


def test_counts_for_finer_partition():
    spec = PartitionSpec.from_counts(50.0, 4, 8)
    assert (spec.n_t, spec.n_s, region_count(spec)) == (4, 8, 32)


@pytest.mark.parametrize("R,r,theta", [
    (50, 30, math.pi),          # R/r not integral
    (50, 25, 1.5 * math.pi),    # theta beyond pi
    (50, 25, 0.0),
    (50, 60, math.pi),          # r > R
    (50, 25, 2 * math.pi / 3.5),
])
def test_invalid_partitions(R, r, theta):
    with pytest.raises(ConfigError):
        PartitionSpec(R, r, theta)


def test_density_and_areas(ref):
    assert rfd_density(100, 50) == pytest.approx(100 / (math.pi * 2500), rel=1e-15)
    assert region_area(ref, 1) == pytest.approx(0.5 * math.pi * 625)
    assert region_area(ref, 2) == pytest.approx(1.5 * math.pi * 625)
    assert expected_rfds(ref, 100, 1) == pytest.approx(12.5, rel=1e-12)
    assert expected_rfds(ref, 100, 2) == pytest.approx(37.5, rel=1e-12)
    with pytest.raises(ValueError):
        region_area(ref, 3)


@given(st.integers(1, 8), st.sampled_from([2, 3, 4, 6, 8, 12]), st.integers(0, 500))
def test_regions_tile_the_disc(n_t, n_s, N):
    spec = PartitionSpec.from_counts(50.0, n_t, n_s)
    area = sum(region_area(spec, t) for _, t in spec.regions())
    assert area == pytest.approx(math.pi * 2500, rel=1e-9)
    pop = sum(expected_rfds(spec, N, t) for _, t in spec.regions())
    assert pop == pytest.approx(N, rel=1e-9, abs=1e-9)


def test_ffd_positions(ref):
    p = ffd_position(ref, RegionId(1, 1))
    assert p.rho == pytest.approx(12.5) and p.phi == pytest.approx(math.pi / 2)
    p = ffd_position(ref, RegionId(2, 2))
    assert p.rho == pytest.approx(37.5) and p.phi == pytest.approx(1.5 * math.pi)
    with pytest.raises(ValueError):
        ffd_position(ref, RegionId(3, 1))


def test_locate_boundaries(ref):
    assert locate_region(ref, PolarPoint(25.0, 0.0)) == RegionId(1, 1)   # outer edge closed
    assert locate_region(ref, PolarPoint(25.0001, 0.0)) == RegionId(1, 2)
    assert locate_region(ref, PolarPoint(50.0, 0.1)) == RegionId(1, 2)
    assert locate_region(ref, PolarPoint(10.0, math.pi)) == RegionId(2, 1)  # leading edge closed
    assert locate_region(ref, PolarPoint(10.0, 2 * math.pi)) == RegionId(1, 1)
    with pytest.raises(OutsideAreaError):
        locate_region(ref, PolarPoint(50.5, 0.0))
    with pytest.raises(OutsideAreaError):
        locate_region(ref, PolarPoint(0.0, 0.0))


@given(st.floats(1e-6, 50.0), st.floats(0, 2 * math.pi, exclude_max=True))
def test_locate_matches_cartesian(rho, phi):
    spec = PartitionSpec.from_counts(50.0, 2, 4)
    reg = locate_region(spec, PolarPoint(rho, phi))
    assert (reg.track - 1) * spec.r < rho * (1 + 1e-9) and rho <= reg.track * spec.r * (1 + 1e-9)
    lo, hi = (reg.sector - 1) * spec.theta, reg.sector * spec.theta
    assert lo - 1e-9 <= phi < hi + 1e-9


@given(st.floats(0, 100), st.floats(-7, 7), st.floats(0, 100), st.floats(-7, 7))
def test_distance_matches_cartesian(r1, a1, r2, a2):
    p, q = PolarPoint(r1, a1), PolarPoint(r2, a2)
    (x1, y1), (x2, y2) = p.to_xy(), q.to_xy()
    assert distance(p, q) == pytest.approx(math.hypot(x1 - x2, y1 - y2), rel=1e-9, abs=1e-9)
    assert distance(p, q) == pytest.approx(distance(q, p), rel=1e-12, abs=1e-12)


def test_distance_close_points_is_precise():
    p, q = PolarPoint(40.0, 1.0), PolarPoint(40.0, 1.0 + 1e-9)
    assert distance(p, q) == pytest.approx(40e-9, rel=1e-6)
