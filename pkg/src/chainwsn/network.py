"""Node records, duty-cycle modes, message taxonomy and seeded deployment."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import (
    TAU,
    ConfigError,
    PartitionSpec,
    PolarPoint,
    RegionId,
    ffd_position,
    locate_region,
    region_count,
)
from .radio import Battery, RadioParams, drain, rx_energy

log = logging.getLogger(__name__)

BS = -1
"""Node id of the base station in routing tables and message traces."""

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence-v1"


class NodeKind(str, Enum):
    FFD = "FFD"
    RFD = "RFD"


class DutyMode(str, Enum):
    TR_ON = "TR-On-Duty"
    LISTENING = "Listening-Duty"
    OFF = "Off-Duty"
    SLEEP = "Sleep"


class ModeEvent(str, Enum):
    ROUND_START = "round-start"
    PACKET_ARRIVAL = "packet-arrival"
    ACTION_DONE = "action-done"
    REPORT_SENT_TO_BS = "report-sent-to-BS"


class MessageKind(str, Enum):
    REPORT = "Report"
    REQ = "Req"
    D_NODE = "D_Node"
    BUILD_CHAIN = "Build_Chain"
    H_REGION = "H_Region"
    CHAIN_D = "Chain_D"
    TOPOLOGY_D = "Topology_D"
    POSITION_CTL = "Position_Ctl"


class StateMachineError(RuntimeError):
    """An event arrived that the duty-cycle machine has no edge for."""


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    src: int
    dst: Union[int, RegionId]  # RegionId only for region broadcasts
    payload_bits: int
    distance: float = 0.0

    @property
    def is_broadcast(self) -> bool:
        return isinstance(self.dst, RegionId)


@dataclass
class NodeRecord:
    id: int
    kind: NodeKind
    position: PolarPoint
    region: Optional[RegionId]
    battery: Battery
    mode: DutyMode = DutyMode.TR_ON
    pre: Optional[int] = None
    suc: Optional[int] = None
    chain_no: Optional[int] = None
    chain_index: Optional[int] = None  # 1 = adjacent to the chain root

    @property
    def xy(self) -> tuple[float, float]:
        return self.position.to_xy()


@dataclass(frozen=True)
class NetworkConfig:
    """Everything needed to build and run one network.

    Defaults reproduce the reference scenario: 100 RFDs on a 50 m disc,
    two 25 m tracks, two 180 degree sectors, 10 J RFDs and 100 J FFDs.
    """

    N: int = 100
    partition: PartitionSpec = field(default_factory=lambda: PartitionSpec(50.0, 25.0, math.pi))
    rfd_battery: float = 10.0
    ffd_battery: float = 100.0
    rfd_threshold: float = 0.05
    ffd_threshold: float = 0.5
    report_bits: int = 2000
    token_bits: int = 64
    ctl_bits: int = 64
    radio: RadioParams = field(default_factory=RadioParams)
    seed: int = 1
    # behaviour switches
    setup_energy: bool = True
    fusion: bool = False
    literal_fig4: bool = False
    strict_range: bool = False
    sleep_mode: bool = False
    idle_cost_j: float = 0.0
    sensing_range_m: float = 10.0
    tx_range_m: float = 20.0

    def __post_init__(self) -> None:
        if self.N < 0:
            raise ConfigError("N must be non-negative")
        for name in ("rfd_battery", "ffd_battery"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("rfd_threshold", "ffd_threshold", "idle_cost_j"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.rfd_threshold > self.rfd_battery or self.ffd_threshold > self.ffd_battery:
            raise ConfigError("death threshold exceeds battery capacity")
        for name in ("report_bits", "token_bits", "ctl_bits"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if 0 < self.N < region_count(self.partition):
            log.warning("N=%d is below the region count %d; some regions will be empty",
                        self.N, region_count(self.partition))


def rng_streams(seed: int, n: int = 2) -> list[np.random.Generator]:
    """Independent generators: [0] deployment, [1] protocol decisions."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_disc(rng: np.random.Generator, n: int, R: float, arc: float = TAU) -> np.ndarray:
    """Area-uniform polar samples on a disc (or a fan of angle ``arc``).

    Returns an (n, 2) array of (rho, phi); points at the origin are redrawn.
    """
    out = np.empty((n, 2))
    filled = 0
    while filled < n:
        m = n - filled
        u = rng.random((m, 2))
        rho = R * np.sqrt(u[:, 0])
        keep = rho > 0
        k = int(keep.sum())
        out[filled:filled + k, 0] = rho[keep]
        out[filled:filled + k, 1] = arc * u[keep, 1]
        filled += k
    return out


def deploy_rfds(
    cfg: NetworkConfig,
    rng: Optional[np.random.Generator] = None,
    positions: Optional[Sequence[PolarPoint]] = None,
) -> list[NodeRecord]:
    """Uniform RFD deployment over the disc; ids run 0..N-1.

    ``positions`` pins the N RFDs to given polar points instead.
    """
    spec = cfg.partition
    if positions is not None:
        if len(positions) != cfg.N:
            raise ConfigError(f"{len(positions)} positions given for N={cfg.N}")
        pts = np.array([(p.rho, p.phi) for p in positions], dtype=float).reshape(-1, 2)
    else:
        if rng is None:
            rng = rng_streams(cfg.seed)[0]
        pts = sample_disc(rng, cfg.N, spec.R)
    nodes = []
    for i, (rho, phi) in enumerate(pts):
        p = PolarPoint(float(rho), float(phi))
        nodes.append(NodeRecord(
            id=i,
            kind=NodeKind.RFD,
            position=p,
            region=locate_region(spec, p),
            battery=Battery.full(cfg.rfd_battery, cfg.rfd_threshold),
        ))
    return nodes


def place_ffds(cfg: NetworkConfig, first_id: Optional[int] = None) -> list[NodeRecord]:
    """One FFD per region, at the region's radial centre on the sector bisector."""
    next_id = cfg.N if first_id is None else first_id
    out = []
    for reg in cfg.partition.regions():
        out.append(NodeRecord(
            id=next_id,
            kind=NodeKind.FFD,
            position=ffd_position(cfg.partition, reg),
            region=reg,
            battery=Battery.full(cfg.ffd_battery, cfg.ffd_threshold),
        ))
        next_id += 1
    return out


_FFD_EDGES = {
    (DutyMode.TR_ON, ModeEvent.ROUND_START): DutyMode.TR_ON,
    (DutyMode.OFF, ModeEvent.ROUND_START): DutyMode.TR_ON,
    (DutyMode.TR_ON, ModeEvent.PACKET_ARRIVAL): DutyMode.TR_ON,
    (DutyMode.TR_ON, ModeEvent.ACTION_DONE): DutyMode.TR_ON,
    (DutyMode.TR_ON, ModeEvent.REPORT_SENT_TO_BS): DutyMode.OFF,
}

_RFD_EDGES = {
    (DutyMode.LISTENING, ModeEvent.PACKET_ARRIVAL): DutyMode.TR_ON,
    (DutyMode.TR_ON, ModeEvent.PACKET_ARRIVAL): DutyMode.TR_ON,
    (DutyMode.TR_ON, ModeEvent.ACTION_DONE): DutyMode.LISTENING,
    (DutyMode.TR_ON, ModeEvent.ROUND_START): DutyMode.LISTENING,  # end of setup
    (DutyMode.LISTENING, ModeEvent.ROUND_START): DutyMode.LISTENING,
    (DutyMode.SLEEP, ModeEvent.ROUND_START): DutyMode.LISTENING,
}


def advance_mode(node: NodeRecord, event: ModeEvent, sleep_mode: bool = False) -> DutyMode:
    """Next duty-cycle mode for ``node`` after ``event``.

    With ``sleep_mode`` an RFD that finishes its action sleeps until the
    next round timer instead of listening.
    """
    event = ModeEvent(event)
    edges = _FFD_EDGES if node.kind is NodeKind.FFD else _RFD_EDGES
    try:
        nxt = edges[(node.mode, event)]
    except KeyError:
        raise StateMachineError(f"{node.kind.value} in {node.mode.value} has no edge for {event.value}") from None
    if sleep_mode and node.kind is NodeKind.RFD and nxt is DutyMode.LISTENING and event is ModeEvent.ACTION_DONE:
        nxt = DutyMode.SLEEP
    return nxt


@dataclass
class ScanResult:
    assignments: dict[int, RegionId]
    charges: dict[int, float]
    messages: list[Message]


def run_bs_scan(nodes: list[NodeRecord], cfg: NetworkConfig) -> ScanResult:
    """Beam-star position scan: the BS tells every RFD its sector and track.

    Only the receivers pay; the BS is not energy constrained.
    """
    assignments: dict[int, RegionId] = {}
    charges: dict[int, float] = {}
    messages = []
    cost = rx_energy(cfg.radio, cfg.ctl_bits) if cfg.setup_energy else 0.0
    for n in nodes:
        if n.kind is not NodeKind.RFD:
            continue
        reg = locate_region(cfg.partition, n.position)
        n.region = reg
        assignments[n.id] = reg
        messages.append(Message(MessageKind.POSITION_CTL, BS, n.id, cfg.ctl_bits, n.position.rho))
        if cost > 0:
            n.battery, _ = drain(n.battery, cost)
            charges[n.id] = cost
    return ScanResult(assignments, charges, messages)
