"""Self-organisation of the proposed scheme: region chains and FFD relays.

Each region's FFD roots either one chain (Chain1, FFD at the chain start)
or two chains (Chain2, FFD in the middle).  RFDs are linked greedily,
nearest neighbour first.  In routing tables an RFD's ``pre`` points toward
its FFD and ``suc`` away from it; an FFD's ``suc`` points toward the BS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .geometry import RegionId, distance
from .network import BS, Message, MessageKind, NodeKind, NodeRecord


class ChainVariant(Enum):
    CHAIN1 = 1
    CHAIN2 = 2

    @property
    def beta(self) -> int:
        return self.value


class Approach(str, Enum):
    ONE_HOP = "one-hop"
    MULTI_HOP = "multi-hop"


class RangeError(RuntimeError):
    """A link is longer than the configured transmission range."""


def chain_lengths(region_rfd_count: int, beta: int) -> list[int]:
    """Split ``region_rfd_count`` RFDs over ``beta`` chains.

    The ``count % beta`` leading chains get one extra member.
    """
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    if region_rfd_count < 0:
        raise ValueError("negative RFD count")
    base, extra = divmod(region_rfd_count, beta)
    return [base + 1] * extra + [base] * (beta - extra)


@dataclass
class Selection:
    current: int
    chosen: int
    candidates: tuple[int, ...]  # unvisited ids at selection time, excluding current


@dataclass
class Chain:
    root: int
    chain_no: int
    members: list[int]
    history: list[Selection] = field(default_factory=list)


def _nearest(origin: NodeRecord, pool: Sequence[NodeRecord]) -> NodeRecord:
    # ties: lowest id
    return min(pool, key=lambda n: (distance(origin.position, n.position), n.id))


def _first_closer(origin: NodeRecord, pool: Sequence[NodeRecord], limit: float) -> Optional[NodeRecord]:
    for n in sorted(pool, key=lambda n: n.id):
        if distance(origin.position, n.position) < limit:
            return n
    return None


def build_chain(
    ffd: NodeRecord,
    region_rfds: Sequence[NodeRecord],
    chain_no: int,
    length: int,
    visited: Optional[set[int]] = None,
    literal: bool = False,
    scan_limit: float = float("inf"),
) -> Chain:
    """Link ``length`` unvisited RFDs into a chain rooted at ``ffd``.

    The first member is the unvisited RFD nearest the FFD; every later member
    is the unvisited RFD nearest the previous one.  ``literal`` switches to
    an id-ordered scan that stops at the first candidate closer than
    ``scan_limit`` (falling back to the nearest when none is).  Records' routing fields are updated and
    ``visited`` is extended in place.
    """
    if visited is None:
        visited = set()
    pool = [n for n in region_rfds if n.id not in visited]
    if length > len(pool):
        raise ValueError(f"chain length {length} exceeds {len(pool)} unvisited RFDs")
    chain = Chain(root=ffd.id, chain_no=chain_no, members=[])
    if length == 0:
        return chain

    first = _nearest(ffd, pool)
    chain.history.append(Selection(ffd.id, first.id, tuple(n.id for n in pool)))
    visited.add(first.id)
    pool.remove(first)
    first.pre, first.suc = ffd.id, None
    first.chain_no, first.chain_index = chain_no, 1
    chain.members.append(first.id)
    current = first

    for pos in range(2, length + 1):
        nxt = _first_closer(current, pool, scan_limit) if literal else None
        if nxt is None:
            nxt = _nearest(current, pool)
        chain.history.append(Selection(current.id, nxt.id, tuple(n.id for n in pool)))
        visited.add(nxt.id)
        pool.remove(nxt)
        current.suc = nxt.id
        nxt.pre, nxt.suc = current.id, None
        nxt.chain_no, nxt.chain_index = chain_no, pos
        chain.members.append(nxt.id)
        current = nxt
    return chain


@dataclass
class RegionChains:
    region: RegionId
    ffd: int
    chains: list[Chain]
    messages: list[Message]


def build_region_topology(
    ffd: NodeRecord,
    region_rfds: Sequence[NodeRecord],
    variant: ChainVariant,
    ctl_bits: int = 64,
    literal: bool = False,
    scan_limit: float = float("inf"),
) -> RegionChains:
    """Build the region's chain(s) and the setup message trace.

    Trace per chain: Build_Chain from the FFD to the first RFD and on down
    the chain, then one Chain_D from the first RFD back to the FFD.  The FFD
    closes with one Topology_D to the BS.
    """
    by_id = {n.id: n for n in region_rfds}
    by_id[ffd.id] = ffd
    visited: set[int] = set()
    chains = []
    msgs = []
    for h, length in enumerate(chain_lengths(len(region_rfds), variant.beta), start=1):
        ch = build_chain(ffd, region_rfds, h, length, visited, literal, scan_limit)
        chains.append(ch)
        if not ch.members:
            continue
        hops = [ffd.id] + ch.members
        for a, b in zip(hops, hops[1:]):
            msgs.append(Message(MessageKind.BUILD_CHAIN, a, b, ctl_bits,
                                distance(by_id[a].position, by_id[b].position)))
        head = by_id[ch.members[0]]
        msgs.append(Message(MessageKind.CHAIN_D, head.id, ffd.id, ctl_bits,
                            distance(head.position, ffd.position)))
    msgs.append(Message(MessageKind.TOPOLOGY_D, ffd.id, BS, ctl_bits, ffd.position.rho))
    return RegionChains(ffd.region, ffd.id, chains, msgs)


def build_ffd_relays(ffds: Iterable[NodeRecord], approach: Approach) -> dict[int, list[int]]:
    """Per-sector FFD relay order (innermost first); sets FFD pre/suc.

    Multi-hop: ``suc`` is the next FFD inward (the BS for track 1) and
    ``pre`` the next one outward (None at the outer track).  One-hop: every
    FFD has ``pre=None`` and ``suc=BS``.
    """
    sectors: dict[int, list[NodeRecord]] = {}
    for f in ffds:
        sectors.setdefault(f.region.sector, []).append(f)
    relays = {}
    for s, members in sorted(sectors.items()):
        members.sort(key=lambda f: f.region.track)
        for k, f in enumerate(members):
            if approach is Approach.ONE_HOP:
                f.pre, f.suc = None, BS
            else:
                f.suc = BS if k == 0 else members[k - 1].id
                f.pre = members[k + 1].id if k + 1 < len(members) else None
        relays[s] = [f.id for f in members]
    return relays


@dataclass
class TopologyPlan:
    """Routing state of the proposed scheme for one network."""

    variant: ChainVariant
    approach: Approach
    regions: dict[RegionId, RegionChains]
    relays: dict[int, list[int]]
    nodes: dict[int, NodeRecord]

    @property
    def setup_messages(self) -> list[Message]:
        return [m for rc in self.regions.values() for m in rc.messages]

    def chains(self) -> Iterable[tuple[RegionChains, Chain]]:
        for rc in self.regions.values():
            for ch in rc.chains:
                yield rc, ch

    def next_hop(self) -> dict[int, int]:
        """Report-forwarding map (node -> next hop, BS = -1) for alive routing."""
        out = {}
        for rc, ch in self.chains():
            prev = rc.ffd
            for m in ch.members:
                out[m] = prev
                prev = m
        for sector in self.relays.values():
            for f in sector:
                suc = self.nodes[f].suc
                if suc is not None:
                    out[f] = suc
        return out

    def splice(self, node_id: int) -> Optional[Message]:
        """Remove a dead RFD from its chain, linking its neighbours.

        Returns the D_Node notice (addressed to the region FFD), or None when
        the node is not a chain member.
        """
        node = self.nodes[node_id]
        if node.kind is not NodeKind.RFD:
            return None
        for rc, ch in self.chains():
            if node_id not in ch.members:
                continue
            k = ch.members.index(node_id)
            ch.members.pop(k)
            if node.pre is not None and node.pre in self.nodes and self.nodes[node.pre].kind is NodeKind.RFD:
                self.nodes[node.pre].suc = node.suc
            if node.suc is not None:
                self.nodes[node.suc].pre = node.pre
            for pos, m in enumerate(ch.members[k:], start=k + 1):
                self.nodes[m].chain_index = pos
            node.pre = node.suc = None
            node.chain_index = None
            return Message(MessageKind.D_NODE, node_id, rc.ffd, 0)
        return None


def build_topology(
    rfds: Sequence[NodeRecord],
    ffds: Sequence[NodeRecord],
    variant: ChainVariant,
    approach: Approach,
    ctl_bits: int = 64,
    literal: bool = False,
    scan_limit: float = float("inf"),
) -> TopologyPlan:
    by_region: dict[RegionId, list[NodeRecord]] = {}
    for n in rfds:
        by_region.setdefault(n.region, []).append(n)
    regions = {}
    for f in ffds:
        members = sorted(by_region.get(f.region, []), key=lambda n: n.id)
        regions[f.region] = build_region_topology(f, members, variant, ctl_bits, literal, scan_limit)
    relays = build_ffd_relays(ffds, approach)
    nodes = {n.id: n for n in list(rfds) + list(ffds)}
    return TopologyPlan(variant, approach, regions, relays, nodes)


def check_ranges(plan: TopologyPlan, tx_range: float) -> None:
    """Strict-range mode: every chain link must fit within ``tx_range``."""
    for rc, ch in plan.chains():
        prev = plan.nodes[rc.ffd]
        for m in ch.members:
            cur = plan.nodes[m]
            d = distance(prev.position, cur.position)
            if d > tx_range:
                raise RangeError(f"link {prev.id}->{cur.id} is {d:.2f} m, range is {tx_range} m")
            prev = cur


def _fmt(v: Optional[int]) -> str:
    if v is None:
        return "-"
    return "BS" if v == BS else str(v)


def dump_topology(records: Iterable[NodeRecord]) -> str:
    """Plain-text adjacency listing, one node per line, sorted by id.

    Columns: id kind sector track pre suc chain_no chain_index
    """
    lines = []
    for n in sorted(records, key=lambda n: n.id):
        sector, track = (n.region if n.region is not None else ("-", "-"))
        lines.append(" ".join([
            str(n.id), n.kind.value, str(sector), str(track),
            _fmt(n.pre), _fmt(n.suc), _fmt(n.chain_no), _fmt(n.chain_index),
        ]))
    return "\n".join(lines) + "\n"
