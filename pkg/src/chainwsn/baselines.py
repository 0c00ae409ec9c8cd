"""PEGASIS, EPEGASIS and CHIRON on the shared energy engine.

All three build greedy nearest-neighbour chains and gather reports along
them toward a per-round leader.  They differ in how the area is split into
chains, how leaders are chosen, and how leaders reach the BS:

* PEGASIS: one chain over a square arena; random head sends to the BS.
* EPEGASIS: one chain per concentric ring; ring heads relay outer to inner.
* CHIRON: one chain per (ring, sector) cell of a fan; cell leaders relay
  outer to inner within their sector.

The BS sits at the origin in every arena.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import PolarPoint, RegionId
from .network import BS, NetworkConfig, NodeKind, NodeRecord, sample_disc
from .radio import Battery
from .traffic import Traffic, gather


class BaselineModel(str, Enum):
    PEGASIS = "pegasis"
    EPEGASIS = "epegasis"
    CHIRON = "chiron"


class HeadElection(str, Enum):
    RANDOM = "random"
    RESIDUAL = "residual-energy"
    ROUND_ROBIN = "round-robin"
    FARTHEST_FIRST = "farthest-first"


@dataclass(frozen=True)
class BaselineConfig:
    """Arena and election settings for one baseline model.

    Use :meth:`defaults` for the reference parameterisation of each model.
    """

    model: BaselineModel
    N: int = 100
    side: float = 100.0  # PEGASIS square
    R: float = 50.0
    levels: int = 2
    level_width: float = 25.0
    theta_area: float = 2 * math.pi
    n_sectors: int = 1
    theta_sector: float = 2 * math.pi
    election: HeadElection = HeadElection.RESIDUAL
    chain_start: str = "farthest"

    def __post_init__(self) -> None:
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if self.model is not BaselineModel.PEGASIS:
            if abs(self.levels * self.level_width - self.R) > 1e-9 * self.R:
                raise ValueError("levels * level_width must equal R")
            if abs(self.n_sectors * self.theta_sector - self.theta_area) > 1e-9:
                raise ValueError("n_sectors * theta_sector must equal theta_area")
        if self.chain_start not in ("farthest", "nearest"):
            raise ValueError("chain_start must be 'farthest' or 'nearest'")

    @classmethod
    def defaults(cls, model, N: int = 100) -> "BaselineConfig":
        model = BaselineModel(model)
        if model is BaselineModel.PEGASIS:
            return cls(model, N=N, side=100.0, election=HeadElection.RANDOM)
        if model is BaselineModel.EPEGASIS:
            return cls(model, N=N, R=50.0, levels=2, level_width=25.0,
                       election=HeadElection.RESIDUAL)
        return cls(model, N=N, R=100.0, levels=2, level_width=50.0,
                   theta_area=math.pi / 2, n_sectors=2, theta_sector=math.pi / 4,
                   election=HeadElection.FARTHEST_FIRST)

    @property
    def n_groups(self) -> int:
        if self.model is BaselineModel.PEGASIS:
            return 1
        return self.levels * self.n_sectors


def _group_of(bcfg: BaselineConfig, rho: float, phi: float) -> Optional[RegionId]:
    if bcfg.model is BaselineModel.PEGASIS:
        return None
    level = min(max(math.ceil(rho / bcfg.level_width - 1e-9), 1), bcfg.levels)
    sector = min(int(phi // bcfg.theta_sector) + 1, bcfg.n_sectors)
    return RegionId(sector, level)


def deploy_baseline(bcfg: BaselineConfig, cfg: NetworkConfig, rng: np.random.Generator) -> list[NodeRecord]:
    """Uniform deployment over the model's arena, ids 0..N-1."""
    n = bcfg.N
    if bcfg.model is BaselineModel.PEGASIS:
        xy = np.empty((n, 2))
        filled = 0
        while filled < n:
            p = (rng.random((n - filled, 2)) - 0.5) * bcfg.side
            p = p[np.hypot(p[:, 0], p[:, 1]) > 0]
            xy[filled:filled + len(p)] = p
            filled += len(p)
        polar = np.column_stack([np.hypot(xy[:, 0], xy[:, 1]), np.arctan2(xy[:, 1], xy[:, 0]) % (2 * math.pi)])
    else:
        polar = sample_disc(rng, n, bcfg.R, bcfg.theta_area)
    out = []
    for i, (rho, phi) in enumerate(polar):
        out.append(NodeRecord(
            id=i,
            kind=NodeKind.RFD,
            position=PolarPoint(float(rho), float(phi)),
            region=_group_of(bcfg, rho, phi),
            battery=Battery.full(cfg.rfd_battery, cfg.rfd_threshold),
        ))
    return out


def greedy_chain(ids, xy: np.ndarray, start: int) -> list[int]:
    """Greedy nearest-neighbour path over ``ids`` beginning at ``start``.

    Ties go to the lowest id.
    """
    ids = np.asarray(sorted(ids), dtype=np.int64)
    if ids.size == 0:
        return []
    left = np.ones(ids.size, dtype=bool)
    k = int(np.searchsorted(ids, start))
    order = [int(ids[k])]
    left[k] = False
    pts = xy[ids]
    while left.any():
        d = np.hypot(*(pts - pts[k]).T)
        d[~left] = np.inf
        k = int(np.argmin(d))  # first minimum = lowest id
        order.append(int(ids[k]))
        left[k] = False
    return order


def _chain_start(ids, xy: np.ndarray, rule: str) -> int:
    ids = sorted(ids)
    rho = np.hypot(*xy[ids].T)
    k = int(np.argmax(rho)) if rule == "farthest" else int(np.argmin(rho))
    return ids[k]


def _xy(nodes: list[NodeRecord]) -> np.ndarray:
    return np.array([n.xy for n in nodes]).reshape(-1, 2)


def pegasis_build(nodes: list[NodeRecord], start: str = "farthest") -> list[int]:
    """Single greedy chain over every node, starting at the farthest from the BS."""
    if not nodes:
        return []
    xy = _xy(nodes)
    ids = [n.id for n in nodes]
    return greedy_chain(ids, xy, _chain_start(ids, xy, start))


def pegasis_elect_head(round_no: int, alive: list[int], rng: np.random.Generator) -> int:
    """Uniform draw over alive nodes (sorted by id)."""
    if not alive:
        raise RuntimeError(f"no alive node to elect in round {round_no}")
    alive = sorted(alive)
    return alive[int(rng.integers(len(alive)))]


def _group_chains(nodes: list[NodeRecord], bcfg: BaselineConfig) -> dict[RegionId, list[int]]:
    xy = np.zeros((max((n.id for n in nodes), default=-1) + 1, 2))
    for n in nodes:
        xy[n.id] = n.xy
    groups: dict[RegionId, list[int]] = {
        RegionId(s, t): [] for s in range(1, bcfg.n_sectors + 1) for t in range(1, bcfg.levels + 1)
    }
    for n in nodes:
        groups[n.region].append(n.id)
    return {g: (greedy_chain(ids, xy, _chain_start(ids, xy, bcfg.chain_start)) if ids else [])
            for g, ids in groups.items()}


def epegasis_build(nodes: list[NodeRecord], bcfg: BaselineConfig) -> dict[int, list[int]]:
    """One greedy chain per concentric level, keyed by level (1 = innermost)."""
    return {g.track: ch for g, ch in _group_chains(nodes, bcfg).items()}


def chiron_build(nodes: list[NodeRecord], bcfg: BaselineConfig) -> dict[RegionId, list[int]]:
    """One greedy chain per (sector, level) cell of the fan."""
    return _group_chains(nodes, bcfg)


def elect_by_residual(members: list[int], residual: np.ndarray) -> int:
    """Member with the largest residual energy; ties to the lowest id."""
    ids = np.asarray(members)
    r = residual[ids]
    return int(ids[r == r.max()].min())


def chiron_elect_leader(members: list[int], round_no: int, residual: np.ndarray, rho: np.ndarray) -> int:
    """Round 1: member farthest from the BS.  Later: maximum residual energy."""
    if not members:
        raise ValueError("empty group")
    if round_no <= 1:
        return max(members, key=lambda i: (rho[i], -i))
    return elect_by_residual(members, residual)


def _toward_head(chain: list[int], h: int, next_hop: dict[int, int]) -> None:
    for k, m in enumerate(chain):
        if k < h:
            next_hop[m] = chain[k + 1]
        elif k > h:
            next_hop[m] = chain[k - 1]


@dataclass
class BaselineState:
    """Mutable per-simulation state shared by the round functions."""

    bcfg: BaselineConfig
    xy: np.ndarray
    residual: np.ndarray
    alive: np.ndarray
    report_bits: int
    fusion: bool
    rng: np.random.Generator
    chains: dict = field(default_factory=dict)
    leaders: dict = field(default_factory=dict)
    rr_cursor: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.rho = np.hypot(self.xy[:, 0], self.xy[:, 1])

    def splice_dead(self) -> None:
        for g, ch in self.chains.items():
            self.chains[g] = [m for m in ch if self.alive[m]]


def _relay(state: BaselineState, t: Traffic, hops: list[tuple[int, int]], next_hop: dict[int, int]) -> None:
    """Leader-by-leader relay; ``hops`` is [(leader, own_reports), ...] outermost first."""
    K = float(state.report_bits)
    carried = 0
    for k, (leader, own) in enumerate(hops):
        carried += own
        nxt = hops[k + 1][0] if k + 1 < len(hops) else BS
        d = state.rho[leader] if nxt == BS else float(np.hypot(*(state.xy[leader] - state.xy[nxt])))
        t.add(leader, nxt, K if state.fusion else carried * K, d)
        next_hop[leader] = nxt


def pegasis_round(state: BaselineState, round_no: int) -> tuple[Traffic, dict[int, int]]:
    t = Traffic()
    next_hop: dict[int, int] = {}
    chain = state.chains.get(1, [])
    if not chain:
        return t, next_hop
    head = pegasis_elect_head(round_no, chain, state.rng)
    h = chain.index(head)
    state.leaders[1] = head
    n = gather(t, state.xy, np.array(chain), h, state.report_bits, state.fusion)
    _toward_head(chain, h, next_hop)
    _relay(state, t, [(head, n)], next_hop)
    return t, next_hop


def _elect_level_head(state: BaselineState, key, chain: list[int], round_no: int) -> int:
    mode = state.bcfg.election
    if mode is HeadElection.ROUND_ROBIN:
        cur = state.rr_cursor.get(key, -1) + 1
        state.rr_cursor[key] = cur
        return chain[cur % len(chain)]
    if mode is HeadElection.FARTHEST_FIRST:
        return chiron_elect_leader(chain, round_no, state.residual, state.rho)
    if mode is HeadElection.RANDOM:
        return pegasis_elect_head(round_no, chain, state.rng)
    return elect_by_residual(chain, state.residual)


def epegasis_round(state: BaselineState, round_no: int) -> tuple[Traffic, dict[int, int]]:
    """Gather on every level, then relay head to head from the outer level in."""
    t = Traffic()
    next_hop: dict[int, int] = {}
    hops = []
    for level in sorted(state.chains, reverse=True):
        chain = state.chains[level]
        if not chain:
            continue
        head = _elect_level_head(state, level, chain, round_no)
        state.leaders[level] = head
        h = chain.index(head)
        n = gather(t, state.xy, np.array(chain), h, state.report_bits, state.fusion)
        _toward_head(chain, h, next_hop)
        hops.append((head, n))
    if hops:
        _relay(state, t, hops, next_hop)
    return t, next_hop


def chiron_round(state: BaselineState, round_no: int) -> tuple[Traffic, dict[int, int]]:
    """Gather in every cell, then relay leader to leader, outer to inner, per sector."""
    t = Traffic()
    next_hop: dict[int, int] = {}
    for sector in range(1, state.bcfg.n_sectors + 1):
        hops = []
        for level in range(state.bcfg.levels, 0, -1):
            g = RegionId(sector, level)
            chain = state.chains.get(g, [])
            if not chain:
                continue
            leader = _elect_level_head(state, g, chain, round_no)
            state.leaders[g] = leader
            h = chain.index(leader)
            n = gather(t, state.xy, np.array(chain), h, state.report_bits, state.fusion)
            _toward_head(chain, h, next_hop)
            hops.append((leader, n))
        if hops:
            _relay(state, t, hops, next_hop)
    return t, next_hop


def build_state(nodes: list[NodeRecord], bcfg: BaselineConfig, cfg: NetworkConfig,
                residual: np.ndarray, alive: np.ndarray, rng: np.random.Generator) -> BaselineState:
    xy = _xy(nodes)
    state = BaselineState(bcfg, xy, residual, alive, cfg.report_bits, cfg.fusion, rng)
    if bcfg.model is BaselineModel.PEGASIS:
        state.chains = {1: pegasis_build(nodes, bcfg.chain_start)}
    elif bcfg.model is BaselineModel.EPEGASIS:
        state.chains = epegasis_build(nodes, bcfg)
    else:
        state.chains = chiron_build(nodes, bcfg)
    _annotate(nodes, state.chains)
    return state


def _annotate(nodes: list[NodeRecord], chains: dict) -> None:
    """Fill routing fields: pre = previous chain member, suc = next."""
    for no, (g, ch) in enumerate(sorted(chains.items(), key=lambda kv: str(kv[0])), start=1):
        for k, m in enumerate(ch):
            n = nodes[m]
            n.pre = ch[k - 1] if k > 0 else None
            n.suc = ch[k + 1] if k + 1 < len(ch) else None
            n.chain_no, n.chain_index = no, k + 1


ROUND_FUNCS = {
    BaselineModel.PEGASIS: pegasis_round,
    BaselineModel.EPEGASIS: epegasis_round,
    BaselineModel.CHIRON: chiron_round,
}
