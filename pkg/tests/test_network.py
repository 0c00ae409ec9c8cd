import numpy as np
import pytest
from scipy import stats

from chainwsn.geometry import ConfigError, PartitionSpec, PolarPoint, RegionId
from chainwsn.network import (
    BS, DutyMode, ModeEvent, NetworkConfig, NodeKind, StateMachineError,
    advance_mode, deploy_rfds, place_ffds, rng_streams, run_bs_scan, sample_disc,
)
from chainwsn.radio import rx_energy

from oracles import deployment_counts


def test_defaults():
    cfg = NetworkConfig()
    assert cfg.N == 100 and cfg.partition.n_s == 2 and cfg.partition.n_t == 2
    assert (cfg.rfd_battery, cfg.ffd_battery) == (10.0, 100.0)
    assert (cfg.rfd_threshold, cfg.ffd_threshold) == (0.05, 0.5)
    assert cfg.report_bits == 2000


@pytest.mark.parametrize("kw", [
    {"N": -1}, {"rfd_battery": 0.0}, {"ffd_threshold": -0.1},
    {"rfd_threshold": 20.0}, {"report_bits": -5}, {"seed": -1}, {"seed": 2**64},
])
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        NetworkConfig(**kw)


def test_sparse_network_warns(caplog):
    NetworkConfig(N=3, partition=PartitionSpec.from_counts(50, 2, 4))
    assert "below the region count" in caplog.text


def test_rng_streams_reproducible_and_independent():
    a = rng_streams(7)
    b = rng_streams(7)
    assert np.array_equal(a[0].random(5), b[0].random(5))
    assert not np.array_equal(rng_streams(7)[0].random(5), rng_streams(7)[1].random(5))
    assert not np.array_equal(rng_streams(7)[0].random(5), rng_streams(8)[0].random(5))


def test_deployment_ids_and_regions():
    cfg = NetworkConfig(seed=3)
    rfds = deploy_rfds(cfg)
    assert [n.id for n in rfds] == list(range(100))
    assert all(0 < n.position.rho <= 50 for n in rfds)
    ffds = place_ffds(cfg)
    assert [f.id for f in ffds] == [100, 101, 102, 103]
    assert [f.region for f in ffds] == cfg.partition.regions()
    assert all(f.kind is NodeKind.FFD and f.battery.capacity == 100.0 for f in ffds)


def test_deployment_pinned_positions():
    cfg = NetworkConfig(N=2)
    nodes = deploy_rfds(cfg, positions=[PolarPoint(10, 0.1), PolarPoint(30, 4.0)])
    assert [n.region for n in nodes] == [RegionId(1, 1), RegionId(2, 2)]
    with pytest.raises(ConfigError):
        deploy_rfds(cfg, positions=[PolarPoint(10, 0.1)])


def test_deployment_is_area_uniform():
    # pooled counts over many seeds against the area-proportional expectation
    counts = np.zeros(8, dtype=int)
    for seed in range(200):
        rng = rng_streams(seed)[0]
        pts = sample_disc(rng, 100, 50.0)
        xy = np.column_stack([pts[:, 0] * np.cos(pts[:, 1]), pts[:, 0] * np.sin(pts[:, 1])])
        counts += deployment_counts(xy, 50.0, 25.0, 4)
    frac = np.tile([0.25, 0.75], 4) / 4
    chi2 = stats.chisquare(counts, frac * counts.sum())
    assert chi2.pvalue > 1e-3


def test_ffd_state_machine():
    cfg = NetworkConfig()
    f = place_ffds(cfg)[0]
    assert f.mode is DutyMode.TR_ON
    f.mode = advance_mode(f, ModeEvent.REPORT_SENT_TO_BS)
    assert f.mode is DutyMode.OFF
    f.mode = advance_mode(f, ModeEvent.ROUND_START)
    assert f.mode is DutyMode.TR_ON
    f.mode = DutyMode.OFF
    with pytest.raises(StateMachineError):
        advance_mode(f, ModeEvent.PACKET_ARRIVAL)


def test_rfd_state_machine():
    n = deploy_rfds(NetworkConfig(N=1))[0]
    n.mode = advance_mode(n, ModeEvent.ROUND_START)
    assert n.mode is DutyMode.LISTENING
    n.mode = advance_mode(n, ModeEvent.PACKET_ARRIVAL)
    assert n.mode is DutyMode.TR_ON
    assert advance_mode(n, ModeEvent.ACTION_DONE) is DutyMode.LISTENING
    assert advance_mode(n, ModeEvent.ACTION_DONE, sleep_mode=True) is DutyMode.SLEEP
    n.mode = DutyMode.SLEEP
    with pytest.raises(StateMachineError):
        advance_mode(n, ModeEvent.PACKET_ARRIVAL)  # a sleeping radio hears nothing
    assert advance_mode(n, ModeEvent.ROUND_START) is DutyMode.LISTENING
    with pytest.raises(StateMachineError):
        advance_mode(n, ModeEvent.REPORT_SENT_TO_BS)


def test_bs_scan_assigns_and_charges():
    cfg = NetworkConfig(seed=2)
    rfds = deploy_rfds(cfg)
    for n in rfds:
        n.region = None
    scan = run_bs_scan(rfds, cfg)
    assert len(scan.assignments) == 100 and len(scan.messages) == 100
    assert all(m.src == BS for m in scan.messages)
    cost = rx_energy(cfg.radio, 64)
    assert all(c == pytest.approx(cost) for c in scan.charges.values())
    assert all(n.battery.residual == pytest.approx(10.0 - cost) for n in rfds)
    assert all(n.region is not None for n in rfds)


def test_bs_scan_without_setup_energy():
    cfg = NetworkConfig(seed=2, setup_energy=False)
    rfds = deploy_rfds(cfg)
    scan = run_bs_scan(rfds, cfg)
    assert scan.charges == {}
    assert all(n.battery.residual == 10.0 for n in rfds)
