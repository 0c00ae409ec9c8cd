import math

import numpy as np
import pytest

from chainwsn.chain import RangeError
from chainwsn.engine import run_self_organization, run_setup, simulate
from chainwsn.geometry import PartitionSpec, PolarPoint
from chainwsn.network import BS, DutyMode, MessageKind, NetworkConfig, NodeKind
from chainwsn.radio import RadioParams, rx_energy, tx_energy

SINGLE = NetworkConfig(N=1, partition=PartitionSpec(40, 40, math.pi))
SINGLE_POS = [PolarPoint(30, math.pi / 2)]  # 10 m outward from its FFD


def test_single_rfd_round_cost():
    P = RadioParams()
    want = rx_energy(P, 64) + tx_energy(P, 2000, 10.0)
    assert want == pytest.approx(1.052e-4, rel=1e-12)
    seen = []
    simulate(SINGLE, "chain1", "one-hop", max_rounds=3, rfd_positions=SINGLE_POS,
             on_round=lambda w, k, t, d: seen.append(d[0]))
    assert seen == pytest.approx([want] * 3, rel=1e-12)


def test_single_rfd_lifetime_closed_form():
    r = simulate(SINGLE, "chain1", "one-hop", rfd_positions=SINGLE_POS)
    assert r.fnd_round == math.floor((10 - 0.05) / 1.052e-4) == 94581
    assert r.first_dead_node.id == 0 and r.first_dead_node.chain_index == 1


def test_determinism():
    a = simulate(NetworkConfig(seed=9), "chain2", "multi-hop")
    b = simulate(NetworkConfig(seed=9), "chain2", "multi-hop")
    assert a == b
    assert np.array_equal(a.world.residual, b.world.residual)
    c = simulate(NetworkConfig(seed=9), "epegasis")
    d = simulate(NetworkConfig(seed=9), "epegasis")
    assert c == d


@pytest.mark.parametrize("seed", range(1, 6))
def test_chain2_outlives_chain1(seed):
    cfg = NetworkConfig(seed=seed)
    assert simulate(cfg, "chain2", "one-hop").fnd_round >= simulate(cfg, "chain1", "one-hop").fnd_round


@pytest.mark.parametrize("scheme,approach", [("chain1", "multi-hop"), ("chiron", None)])
def test_energy_conservation(scheme, approach):
    drained = []
    r = simulate(NetworkConfig(seed=2), scheme, approach, max_rounds=50,
                 on_round=lambda w, k, t, d: drained.append(d.sum()))
    w = r.world
    initial = sum(n.battery.capacity for n in w.nodes)
    assert initial - w.residual.sum() == pytest.approx(w.setup_spent + sum(drained), rel=1e-12)
    assert sum(s.energy_spent_this_round for s in r.rounds) == pytest.approx(sum(drained), rel=1e-12)


def test_round_stats_monotone():
    r = simulate(NetworkConfig(seed=3, N=20), "chain1", "one-hop", stop_at="lnd")
    mins = [s.min_rfd_residual for s in r.rounds]
    assert all(a >= b for a, b in zip(mins, mins[1:]))
    alive = [s.alive_rfds for s in r.rounds]
    assert all(a >= b for a, b in zip(alive, alive[1:]))
    assert r.fnd_round <= r.hnd_round <= r.lnd_round
    assert r.rounds[-1].alive_rfds == 0


def test_lifetime_conventions():
    r = simulate(NetworkConfig(seed=3, N=20), "chain2", "one-hop", stop_at="hnd")
    died = [s.round for s in r.rounds if s.deaths_this_round]
    assert r.fnd_round == died[0] - 1
    dead = np.cumsum([len([i for i in s.deaths_this_round if i < 20]) for s in r.rounds])
    k = int(np.argmax(2 * dead >= 20))
    assert r.hnd_round == r.rounds[k].round - 1
    assert r.lnd_round is None and r.rounds[-1].round == r.hnd_round + 1


def test_censoring():
    r = simulate(NetworkConfig(seed=1), "chain1", "one-hop", max_rounds=10)
    assert r.fnd_round is None and r.fnd_censored and r.rounds_run == 10


def test_first_dead_node_is_adjacent_outer_rfd():
    r = simulate(NetworkConfig(seed=1), "chain1", "one-hop")
    fd = r.first_dead_node
    assert fd.kind == "RFD" and fd.chain_index == 1 and fd.region.track == 2


def test_approach_rejected_for_baselines():
    with pytest.raises(ValueError):
        simulate(NetworkConfig(), "pegasis", "one-hop")


def test_setup_message_legality():
    w = run_setup(NetworkConfig(seed=4), "chain2", "multi-hop")
    run_self_organization(w)
    n_ffd = 4
    kinds = [m.kind for m in w.setup_log]
    assert kinds.count(MessageKind.POSITION_CTL) == 100
    assert kinds.count(MessageKind.H_REGION) == n_ffd
    assert kinds.count(MessageKind.TOPOLOGY_D) == n_ffd
    assert kinds.count(MessageKind.BUILD_CHAIN) == 100
    assert kinds.count(MessageKind.CHAIN_D) == sum(1 for _, ch in w.plan.chains() if ch.members)
    for m in w.setup_log:
        if m.kind is MessageKind.H_REGION:
            assert m.is_broadcast and w.nodes[m.src].kind is NodeKind.FFD
        if m.kind is MessageKind.TOPOLOGY_D:
            assert m.dst == BS
        if m.kind is MessageKind.POSITION_CTL:
            assert m.src == BS
    assert all(n.mode in (DutyMode.LISTENING, DutyMode.TR_ON) for n in w.nodes)


def test_round_message_legality():
    kinds = set()
    senders_to_bs = set()

    def check(w, k, t, d):
        for m in t.messages():
            kinds.add(m.kind)
            if m.kind is MessageKind.REQ:
                assert w.nodes[m.dst].kind is NodeKind.RFD
            if m.dst == BS:
                senders_to_bs.add(w.nodes[m.src].kind)
        for n in w.nodes:
            if w.alive[n.id]:
                want = {DutyMode.LISTENING, DutyMode.SLEEP} if n.kind is NodeKind.RFD else {DutyMode.OFF}
                assert n.mode in want

    simulate(NetworkConfig(seed=5, sleep_mode=True), "chain1", "multi-hop", max_rounds=5, on_round=check)
    assert kinds == {MessageKind.REQ, MessageKind.REPORT}
    assert senders_to_bs == {NodeKind.FFD}


def test_dead_node_is_spliced_and_notified():
    r = simulate(NetworkConfig(seed=2, N=20), "chain1", "one-hop", stop_at="hnd")
    w = r.world
    notices = [m for m in w.event_log if m.kind is MessageKind.D_NODE]
    assert notices and all(w.nodes[m.dst].kind is NodeKind.FFD for m in notices)
    members = {m for _, ch in w.plan.chains() for m in ch.members}
    assert not members & {m.src for m in notices}


def test_fusion_extends_lifetime():
    cfg = NetworkConfig(seed=1)
    plain = simulate(cfg, "chain1", "one-hop").fnd_round
    fused = simulate(NetworkConfig(seed=1, fusion=True), "chain1", "one-hop").fnd_round
    assert fused > plain


def test_idle_cost_and_sleep():
    base = simulate(NetworkConfig(seed=1), "chain2", "one-hop").fnd_round
    idle = simulate(NetworkConfig(seed=1, idle_cost_j=1e-4), "chain2", "one-hop").fnd_round
    slept = simulate(NetworkConfig(seed=1, idle_cost_j=1e-4, sleep_mode=True), "chain2", "one-hop").fnd_round
    assert idle < base and slept == base


def test_strict_range():
    with pytest.raises(RangeError):
        simulate(NetworkConfig(seed=1, strict_range=True, tx_range_m=1.0), "chain1", "one-hop")


def test_setup_energy_switch():
    on = run_setup(NetworkConfig(seed=1), "chain1", "one-hop")
    off = run_setup(NetworkConfig(seed=1, setup_energy=False), "chain1", "one-hop")
    assert on.setup_spent > 0 and off.setup_spent == 0
    assert off.residual[:100].min() == 10.0


def test_multi_hop_drops_reports_behind_dead_relay():
    cfg = NetworkConfig(seed=1, ffd_battery=0.6)  # inner FFDs die quickly as relays
    r = simulate(cfg, "chain1", "multi-hop", stop_at="lnd", max_rounds=400)
    assert r.first_dead_node.kind == "FFD"
    assert r.dropped_reports > 0


def test_empty_network():
    r = simulate(NetworkConfig(N=0), "chain1", "one-hop")
    assert r.rounds_run == 0 and r.fnd_round is None
