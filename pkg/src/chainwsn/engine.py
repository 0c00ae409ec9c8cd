"""Round-based simulation: setup, self-organisation, then collection and
transmission rounds until the requested lifetime milestone.

Lifetime milestones count whole rounds.  A node that falls below its
death threshold while serving round ``k`` still completes that round; the
milestone is then ``k - 1``, the number of rounds the network served
before losing the node.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import baselines as bl
from .chain import (
    Approach,
    ChainVariant,
    RegionChains,
    TopologyPlan,
    build_topology,
    check_ranges,
)
from .delay import measured_max_path
from .geometry import RegionId, distance
from .network import (
    BS,
    DutyMode,
    Message,
    MessageKind,
    ModeEvent,
    NetworkConfig,
    NodeKind,
    NodeRecord,
    ScanResult,
    advance_mode,
    deploy_rfds,
    place_ffds,
    rng_streams,
    run_bs_scan,
)
from .radio import Battery, rx_energy, tx_energy
from .traffic import Traffic, gather, link_lengths

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 10**7


class Scheme(str, Enum):
    CHAIN1 = "chain1"
    CHAIN2 = "chain2"
    PEGASIS = "pegasis"
    EPEGASIS = "epegasis"
    CHIRON = "chiron"

    @property
    def proposed(self) -> bool:
        return self in (Scheme.CHAIN1, Scheme.CHAIN2)

    @property
    def variant(self) -> ChainVariant:
        return ChainVariant.CHAIN1 if self is Scheme.CHAIN1 else ChainVariant.CHAIN2

    @property
    def model(self) -> bl.BaselineModel:
        return bl.BaselineModel(self.value)


class StopAt(str, Enum):
    FND = "fnd"
    HND = "hnd"
    LND = "lnd"


@dataclass(slots=True)
class RoundStats:
    round: int
    alive_rfds: int
    alive_ffds: int
    energy_spent_this_round: float
    min_rfd_residual: float
    min_ffd_residual: Optional[float]
    measured_max_path_hops: int
    deaths_this_round: tuple


@dataclass(frozen=True)
class DeadNode:
    id: int
    kind: str
    region: Optional[RegionId]
    chain_no: Optional[int]
    chain_index: Optional[int]


@dataclass
class SimResult:
    scheme: str
    approach: Optional[str]
    seed: int
    config: dict
    rounds: list[RoundStats] = field(default_factory=list)
    fnd_round: Optional[int] = None
    hnd_round: Optional[int] = None
    lnd_round: Optional[int] = None
    fnd_censored: bool = False
    first_dead_node: Optional[DeadNode] = None
    dropped_reports: int = 0
    notes: list[str] = field(default_factory=list)
    world: Optional["World"] = field(default=None, compare=False, repr=False)

    @property
    def rounds_run(self) -> int:
        return len(self.rounds)

    @property
    def max_path(self) -> Optional[int]:
        return self.rounds[0].measured_max_path_hops if self.rounds else None


@dataclass
class World:
    cfg: NetworkConfig
    scheme: Scheme
    approach: Optional[Approach]
    nodes: list[NodeRecord]
    xy: np.ndarray
    residual: np.ndarray
    threshold: np.ndarray
    is_ffd: np.ndarray
    alive: np.ndarray
    rng: np.random.Generator
    bcfg: Optional[bl.BaselineConfig] = None
    scan: Optional[ScanResult] = None
    plan: Optional[TopologyPlan] = None
    bstate: Optional[bl.BaselineState] = None
    setup_log: list[Message] = field(default_factory=list)
    event_log: list[Message] = field(default_factory=list)
    setup_spent: float = 0.0

    @property
    def n(self) -> int:
        return len(self.nodes)

    def charge(self, cost: np.ndarray) -> np.ndarray:
        """Apply per-node costs, flooring residuals at zero; returns the drains."""
        drains = np.minimum(cost, self.residual)
        self.residual -= drains
        return drains

    def sync_records(self) -> None:
        for n in self.nodes:
            b = n.battery
            n.battery = Battery(b.capacity, float(self.residual[n.id]), b.death_threshold)


def _world_from(cfg, scheme, approach, nodes, rng, bcfg=None) -> World:
    xy = np.array([n.xy for n in nodes], dtype=float).reshape(-1, 2)
    return World(
        cfg=cfg, scheme=scheme, approach=approach, nodes=nodes, xy=xy,
        residual=np.array([n.battery.residual for n in nodes], dtype=float),
        threshold=np.array([n.battery.death_threshold for n in nodes], dtype=float),
        is_ffd=np.array([n.kind is NodeKind.FFD for n in nodes], dtype=bool),
        alive=np.ones(len(nodes), dtype=bool),
        rng=rng, bcfg=bcfg,
    )


def _messages_cost(world: World, msgs: list[Message]) -> np.ndarray:
    t = Traffic()
    for m in msgs:
        t.add(m.src, m.dst, m.payload_bits, m.distance, m.kind)
    return t.energy(world.cfg.radio, world.n)


def run_setup(cfg: NetworkConfig, scheme, approach=None, bcfg: Optional[bl.BaselineConfig] = None,
              rfd_positions=None) -> World:
    """Deployment, BS position scan, FFD placement and region-head broadcast.

    With setup energy on, every RFD pays one control reception for the scan
    and one for its region head's H_Region broadcast.
    """
    scheme = Scheme(scheme)
    dep_rng, proto_rng = rng_streams(cfg.seed)
    if scheme.proposed:
        approach = Approach(approach or Approach.ONE_HOP)
        rfds = deploy_rfds(cfg, dep_rng, rfd_positions)
        scan = run_bs_scan(rfds, cfg)
        ffds = place_ffds(cfg)
        world = _world_from(cfg, scheme, approach, rfds + ffds, proto_rng)
        world.scan = scan
        world.setup_log.extend(scan.messages)
        members: dict[RegionId, list[NodeRecord]] = {}
        for n in rfds:
            members.setdefault(n.region, []).append(n)
        cost = np.zeros(world.n)
        for f in ffds:
            inside = members.get(f.region, [])
            world.setup_log.append(Message(MessageKind.H_REGION, f.id, f.region, cfg.ctl_bits))
            reach = max((distance(f.position, n.position) for n in inside), default=0.0)
            if inside:
                cost[f.id] += tx_energy(cfg.radio, cfg.ctl_bits, reach)
            for n in inside:
                cost[n.id] += rx_energy(cfg.radio, cfg.ctl_bits)
        if cfg.setup_energy:
            world.setup_spent += float(sum(scan.charges.values()))
            world.setup_spent += float(world.charge(cost).sum())
        return world

    if approach is not None:
        raise ValueError(f"{scheme.value} has no one-hop/multi-hop approach")
    bcfg = bcfg or bl.BaselineConfig.defaults(scheme.model, cfg.N)
    if bcfg.model is not scheme.model:
        raise ValueError("baseline config does not match scheme")
    nodes = bl.deploy_baseline(bcfg, cfg, dep_rng)
    world = _world_from(cfg, scheme, None, nodes, proto_rng, bcfg)
    if scheme is not Scheme.PEGASIS:
        # level / cell assignment by the BS
        msgs = [Message(MessageKind.POSITION_CTL, BS, n.id, cfg.ctl_bits, n.position.rho) for n in nodes]
        world.setup_log.extend(msgs)
        if cfg.setup_energy:
            world.setup_spent += float(world.charge(_messages_cost(world, msgs)).sum())
    return world


def run_self_organization(world: World) -> None:
    """Build chains (and FFD relay tables) and move RFDs to their round mode."""
    cfg = world.cfg
    if world.scheme.proposed:
        rfds = [n for n in world.nodes if n.kind is NodeKind.RFD]
        ffds = [n for n in world.nodes if n.kind is NodeKind.FFD]
        world.plan = build_topology(rfds, ffds, world.scheme.variant, world.approach,
                                    cfg.ctl_bits, cfg.literal_fig4, cfg.partition.R)
        if cfg.strict_range:
            check_ranges(world.plan, cfg.tx_range_m)
        msgs = world.plan.setup_messages
        world.setup_log.extend(msgs)
        if cfg.setup_energy:
            world.setup_spent += float(world.charge(_messages_cost(world, msgs)).sum())
    else:
        world.bstate = bl.build_state(world.nodes, world.bcfg, cfg, world.residual, world.alive, world.rng)
    for n in world.nodes:
        n.mode = advance_mode(n, ModeEvent.ROUND_START)


def run_collection(world: World, rc: RegionChains, traffic: Optional[Traffic] = None) -> tuple[Traffic, int]:
    """Token-driven gather in one region; returns the traffic and reports delivered.

    The FFD's token walks the chain to its tail, every RFD forwarding it;
    reports then flow back with store-and-forward accumulation.
    """
    t = traffic if traffic is not None else Traffic()
    cfg = world.cfg
    if not world.alive[rc.ffd]:
        return t, 0
    delivered = 0
    for ch in rc.chains:
        members = np.array([m for m in ch.members if world.alive[m]], dtype=np.int64)
        if members.size == 0:
            continue
        seq = np.concatenate(([rc.ffd], members))
        t.add(seq[:-1], seq[1:], cfg.token_bits, link_lengths(world.xy, seq), MessageKind.REQ)
        delivered += gather(t, world.xy, members, 0, cfg.report_bits, cfg.fusion, root=rc.ffd)
    return t, delivered


def run_transmission(world: World, payload: dict[int, int], traffic: Optional[Traffic] = None) -> Traffic:
    """FFDs deliver collected reports to the BS, directly or relayed inward."""
    t = traffic if traffic is not None else Traffic()
    cfg, plan = world.cfg, world.plan
    K = float(cfg.report_bits)

    def bits(reports: int) -> float:
        if reports <= 0:
            return 0.0
        return K if cfg.fusion else reports * K

    for sector in plan.relays.values():
        carried = 0
        for f in reversed(sector):  # outermost first
            node = world.nodes[f]
            if not world.alive[f]:
                t.dropped_reports += carried
                carried = 0
                continue
            carried += payload.get(f, 0)
            suc = node.suc
            if suc != BS and not world.alive[suc]:
                t.dropped_reports += carried
                carried = 0
                continue
            if carried:
                d = node.position.rho if suc == BS else distance(node.position, world.nodes[suc].position)
                t.add(f, suc, bits(carried), d)
            if suc == BS:
                carried = 0
    return t


def _proposed_round(world: World) -> tuple[Traffic, dict[int, int]]:
    t = Traffic()
    payload = {}
    for rc in world.plan.regions.values():
        _, payload[rc.ffd] = run_collection(world, rc, t)
    run_transmission(world, payload, t)
    next_hop = {k: v for k, v in world.plan.next_hop().items() if world.alive[k]}
    return t, next_hop


def _walk_modes(world: World, traffic: Traffic) -> None:
    """Drive the duty-cycle machine through one traced round."""
    sleep = world.cfg.sleep_mode
    for n in world.nodes:
        if world.alive[n.id]:
            n.mode = advance_mode(n, ModeEvent.ROUND_START, sleep)
    busy = set()
    for m in traffic.messages():
        if m.dst != BS:
            dst = world.nodes[m.dst]
            dst.mode = advance_mode(dst, ModeEvent.PACKET_ARRIVAL, sleep)
            busy.add(m.dst)
        if m.dst == BS and world.nodes[m.src].kind is NodeKind.FFD:
            src = world.nodes[m.src]
            src.mode = advance_mode(src, ModeEvent.REPORT_SENT_TO_BS, sleep)
    for i in busy:
        n = world.nodes[i]
        if n.kind is NodeKind.RFD:
            n.mode = advance_mode(n, ModeEvent.ACTION_DONE, sleep)
    for n in world.nodes:
        if n.kind is NodeKind.FFD and world.alive[n.id] and n.mode is DutyMode.TR_ON:
            # relay-only FFDs in multi-hop finish once their upload leaves
            n.mode = advance_mode(n, ModeEvent.REPORT_SENT_TO_BS, sleep)


def _idle_cost(world: World) -> np.ndarray:
    cost = np.zeros(world.n)
    if world.cfg.idle_cost_j > 0 and not world.cfg.sleep_mode:
        cost[(~world.is_ffd) & world.alive] = world.cfg.idle_cost_j
    return cost


def config_echo(cfg: NetworkConfig, bcfg: Optional[bl.BaselineConfig] = None) -> dict:
    def clean(v):
        if isinstance(v, Enum):
            return v.value
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v
    out = {"network": clean(asdict(cfg))}
    if bcfg is not None:
        out["baseline"] = clean(asdict(bcfg))
    return out


def simulate(
    cfg: NetworkConfig,
    scheme,
    approach=None,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    stop_at=StopAt.FND,
    bcfg: Optional[bl.BaselineConfig] = None,
    on_round: Optional[Callable[[World, int, Traffic, np.ndarray], None]] = None,
    rfd_positions=None,
) -> SimResult:
    """Run one network to FND (default), HND or LND, or ``max_rounds``.

    ``on_round`` is called after every round's charges with the world, the
    round number, that round's traffic and the per-node drains; passing it
    also drives the duty-cycle machine message by message.  ``rfd_positions``
    (proposed schemes only) replaces the random deployment.
    """
    scheme = Scheme(scheme)
    stop_at = StopAt(stop_at)
    world = run_setup(cfg, scheme, approach, bcfg, rfd_positions)
    run_self_organization(world)
    res = SimResult(
        scheme=scheme.value,
        approach=world.approach.value if world.approach else None,
        seed=cfg.seed,
        config=config_echo(cfg, world.bcfg),
    )
    if world.bcfg is not None:
        res.notes.append(f"leader election: {world.bcfg.election.value}")
        if scheme is Scheme.CHIRON:
            res.notes.append("arena: 90 degree fan of radius 100 m, unlike the disc used by the other models")
    res.notes.append(f"rng: numpy PCG64 via SeedSequence({cfg.seed})")

    rfd_idx = np.flatnonzero(~world.is_ffd)
    ffd_idx = np.flatnonzero(world.is_ffd)
    n_rfd = rfd_idx.size
    if n_rfd == 0:
        return res

    round_fn = None if scheme.proposed else bl.ROUND_FUNCS[scheme.model]
    cached = None
    dead_rfds = 0
    alive = world.alive
    for rnd in range(1, max_rounds + 1):
        if round_fn is None:
            if cached is None:
                traffic, next_hop = _proposed_round(world)
                cost = traffic.energy(cfg.radio, world.n) + _idle_cost(world)
                hops, _ = measured_max_path(next_hop, rfd_idx[alive[rfd_idx]])
                cached = (traffic, cost, hops)
            traffic, cost, hops = cached
        else:
            traffic, next_hop = round_fn(world.bstate, rnd)
            cost = traffic.energy(cfg.radio, world.n) + _idle_cost(world)
            hops, _ = measured_max_path(next_hop, rfd_idx[alive[rfd_idx]])

        drains = world.charge(cost)
        res.dropped_reports += traffic.dropped_reports
        if on_round is not None:
            _walk_modes(world, traffic)
            on_round(world, rnd, traffic, drains)

        newly = np.flatnonzero(alive & (world.residual < world.threshold))
        if newly.size:
            alive[newly] = False
            dead_rfds += int((~world.is_ffd[newly]).sum())
            if res.first_dead_node is None:
                res.fnd_round = rnd - 1
                worst = min(newly, key=lambda i: (world.residual[i] - world.threshold[i], i))
                n = world.nodes[worst]
                res.first_dead_node = DeadNode(int(worst), n.kind.value, n.region, n.chain_no, n.chain_index)
            if res.hnd_round is None and 2 * dead_rfds >= n_rfd:
                res.hnd_round = rnd - 1
            if dead_rfds == n_rfd:
                res.lnd_round = rnd - 1
            for i in newly:
                world.nodes[i].mode = DutyMode.OFF
                if world.plan is not None:
                    msg = world.plan.splice(int(i))
                    if msg is not None:
                        world.event_log.append(msg)
            if world.bstate is not None:
                world.bstate.splice_dead()
            cached = None

        res.rounds.append(RoundStats(
            rnd,
            int(alive[rfd_idx].sum()),
            int(alive[ffd_idx].sum()),
            float(drains.sum()),
            float(world.residual[rfd_idx].min()),
            float(world.residual[ffd_idx].min()) if ffd_idx.size else None,
            int(hops),
            tuple(int(i) for i in newly),
        ))

        if res.lnd_round is not None:
            break
        if stop_at is StopAt.FND and res.fnd_round is not None:
            break
        if stop_at is StopAt.HND and res.hnd_round is not None:
            break

    if res.fnd_round is None:
        res.fnd_censored = True
        log.info("max_rounds=%d exhausted before the first death", max_rounds)
    world.sync_records()
    res.world = world
    return res
