import math

import numpy as np
import pytest
from scipy import stats

from chainwsn import baselines as bl
from chainwsn.baselines import BaselineConfig, BaselineModel, HeadElection
from chainwsn.engine import run_self_organization, run_setup
from chainwsn.network import BS, NetworkConfig, rng_streams

from oracles import bfs_max_path, nearest_neighbour_chains


def _world(model, seed=1, **kw):
    w = run_setup(NetworkConfig(seed=seed, **kw), model)
    run_self_organization(w)
    return w


def test_defaults():
    p = BaselineConfig.defaults("pegasis")
    assert p.side == 100 and p.election is HeadElection.RANDOM
    e = BaselineConfig.defaults("epegasis")
    assert (e.R, e.levels, e.level_width, e.n_groups) == (50, 2, 25, 2)
    c = BaselineConfig.defaults("chiron")
    assert (c.R, c.levels, c.level_width, c.n_sectors) == (100, 2, 50, 2)
    assert c.theta_area == pytest.approx(math.pi / 2) and c.theta_sector == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        BaselineConfig(BaselineModel.EPEGASIS, R=50, levels=3, level_width=25)


def test_greedy_chain_matches_bruteforce():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        xy = rng.uniform(-50, 50, (n, 2))
        start = int(rng.integers(n))
        got = bl.greedy_chain(range(n), xy, start)
        rest = [i for i in range(n) if i != start]
        want = nearest_neighbour_chains(xy[start], xy[rest], rest, [n - 1])[0]
        assert got == [start] + want


@pytest.mark.parametrize("model", ["pegasis", "epegasis", "chiron"])
def test_deployment_inside_arena(model):
    w = _world(model, seed=4)
    b = w.bcfg
    xy = w.xy
    if model == "pegasis":
        assert np.all(np.abs(xy) <= 50)
        assert len(w.bstate.chains[1]) == 100
        far = int(np.argmax(np.hypot(*xy.T)))
        assert w.bstate.chains[1][0] == far
    else:
        rho = np.hypot(*xy.T)
        phi = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2 * math.pi)
        assert np.all(rho <= b.R + 1e-9)
        assert np.all(phi <= b.theta_area + 1e-9)
        members = sorted(m for ch in w.bstate.chains.values() for m in ch)
        assert members == list(range(100))
        assert len(w.bstate.chains) == b.n_groups


def test_pegasis_election_is_uniform():
    # 100 alive nodes; each is head with probability 1/100 per round
    rng = rng_streams(123)[1]
    alive = list(range(100))
    heads = np.array([bl.pegasis_elect_head(k, alive, rng) for k in range(20000)])
    counts = np.bincount(heads, minlength=100)
    assert stats.chisquare(counts).pvalue > 1e-3
    # one particular node: binomial(20000, 0.01)
    assert stats.binomtest(int(counts[0]), 20000, 0.01).pvalue > 1e-3


def test_pegasis_election_uses_protocol_stream():
    w1, w2 = _world("pegasis", 5), _world("pegasis", 5)
    assert np.array_equal(w1.xy, w2.xy)
    bl.pegasis_round(w1.bstate, 1)
    bl.pegasis_round(w2.bstate, 1)
    assert w1.bstate.leaders == w2.bstate.leaders
    # the deployment comes from stream 0, so it is a function of the seed alone
    dep = bl.deploy_baseline(w1.bcfg, w1.cfg, rng_streams(5)[0])
    assert np.allclose([n.xy for n in dep], w1.xy)
    # elections come from stream 1
    proto = rng_streams(5)[1]
    assert bl.pegasis_elect_head(1, list(range(100)), proto) == w1.bstate.leaders[1]


def test_residual_election_ties_to_lowest_id():
    res = np.array([1.0, 3.0, 3.0, 2.0])
    assert bl.elect_by_residual([0, 1, 2, 3], res) == 1
    assert bl.elect_by_residual([3, 2], res) == 2


def test_chiron_first_round_leader_is_farthest():
    w = _world("chiron", 2)
    st = w.bstate
    bl.chiron_round(st, 1)
    for g, ch in st.chains.items():
        if ch:
            assert st.leaders[g] == max(ch, key=lambda i: st.rho[i])
    st.residual[:] = 1.0
    st.residual[st.chains[next(iter(st.chains))][-1]] = 5.0
    bl.chiron_round(st, 2)
    g = next(iter(st.chains))
    assert st.leaders[g] == st.chains[g][-1]


@pytest.mark.parametrize("model", ["pegasis", "epegasis", "chiron"])
def test_round_routes_every_node_to_bs(model):
    w = _world(model, seed=3)
    fn = bl.ROUND_FUNCS[BaselineModel(model)]
    t, nh = fn(w.bstate, 1)
    assert set(nh) == set(range(100))
    assert BS in nh.values()
    # bits conserved: every report arrives at the BS exactly once
    src, dst, bits, _, _ = t.arrays()
    assert bits[dst == BS].sum() == 100 * 2000
    assert bfs_max_path(nh, range(100)) > 0


def test_epegasis_relays_outer_head_to_inner_head():
    w = _world("epegasis", 6)
    st = w.bstate
    _, nh = bl.epegasis_round(st, 1)
    assert nh[st.leaders[2]] == st.leaders[1]
    assert nh[st.leaders[1]] == BS


def test_splice_dead_removes_members():
    w = _world("epegasis", 6)
    st = w.bstate
    victim = st.chains[1][3]
    st.alive[victim] = False
    st.splice_dead()
    assert victim not in st.chains[1]
    _, nh = bl.epegasis_round(st, 2)
    assert victim not in nh


def test_round_robin_and_random_elections():
    w = _world("epegasis", 6)
    st = w.bstate
    st.bcfg = BaselineConfig(BaselineModel.EPEGASIS, election=HeadElection.ROUND_ROBIN)
    bl.epegasis_round(st, 1)
    assert st.leaders[1] == st.chains[1][0]
    bl.epegasis_round(st, 2)
    assert st.leaders[1] == st.chains[1][1]
    st.bcfg = BaselineConfig(BaselineModel.EPEGASIS, election=HeadElection.RANDOM)
    bl.epegasis_round(st, 3)
    assert st.leaders[1] in st.chains[1]
