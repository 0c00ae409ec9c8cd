"""Max-path delay: closed-form expectations and hop counts on real topologies.

Delay is measured in hops; a round's delay is the hop count of its longest
report path, including the final hop into the BS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .baselines import BaselineConfig, BaselineModel
from .chain import Approach, ChainVariant
from .geometry import PartitionSpec, expected_rfds, region_count
from .network import BS, NetworkConfig


def analytic_H(variant: ChainVariant, tau_last: float) -> float:
    """Expected in-region hops from the chain tail to the FFD."""
    if tau_last < 0:
        raise ValueError("negative population")
    if variant is ChainVariant.CHAIN1:
        return tau_last
    return float(math.ceil(tau_last / 2))


def analytic_max_path(variant: ChainVariant, approach: Approach, spec: PartitionSpec, N: int) -> float:
    tau = expected_rfds(spec, N, spec.n_t)
    H = analytic_H(variant, tau)
    return H + (1 if Approach(approach) is Approach.ONE_HOP else spec.n_t)


def last_ring_population(N: int, R: float, r: float, levels: int) -> float:
    """Expected node count of the outermost ring of a disc."""
    return N * r**2 * (2 * levels - 1) / R**2


def last_cell_population(N: int, R: float, r: float, levels: int, theta_area: float, theta_sector: float) -> float:
    """Expected node count of one outermost cell of a fan."""
    return 2 * N * theta_sector * r**2 / (theta_area * R**2) * (levels - 0.5)


def analytic_baseline_max_path(model: Union[BaselineModel, str], params: Optional[BaselineConfig] = None) -> float:
    model = BaselineModel(model)
    p = params or BaselineConfig.defaults(model)
    if model is BaselineModel.PEGASIS:
        return float(p.N)
    if model is BaselineModel.EPEGASIS:
        gamma = last_ring_population(p.N, p.R, p.level_width, p.levels)
        return (gamma - 1) + p.levels
    omega = last_cell_population(p.N, p.R, p.level_width, p.levels, p.theta_area, p.theta_sector)
    return (omega - 1) + p.levels * p.n_sectors


@dataclass
class MaxPathReport:
    model: str
    analytic_hops: Optional[float]
    measured_hops: int
    components: dict = field(default_factory=dict)
    disconnected: frozenset = frozenset()


def hop_counts(next_hop: Mapping[int, int]) -> tuple[dict[int, int], set[int]]:
    """Hops from every node in ``next_hop`` to the BS by following pointers.

    Nodes whose pointer chain leaves the map before reaching the BS are
    returned as disconnected.
    """
    hops: dict[int, int] = {}
    broken: set[int] = set()
    for start in next_hop:
        path = []
        cur = start
        while cur != BS and cur not in hops and cur not in broken:
            if cur not in next_hop or cur in path:
                break
            path.append(cur)
            cur = next_hop[cur]
        if cur == BS:
            base = 0
        elif cur in hops:
            base = hops[cur]
        else:
            broken.update(path)
            continue
        for k, n in enumerate(reversed(path), start=1):
            hops[n] = base + k
    return hops, broken


def measured_max_path(next_hop: Mapping[int, int], origins: Iterable[int]) -> tuple[int, set[int]]:
    """Longest hop count to the BS over ``origins`` (report-generating nodes).

    Returns (max hops, disconnected origins).  Zero when nothing reaches the BS.
    """
    hops, broken = hop_counts(next_hop)
    best = 0
    lost = set()
    for o in origins:
        if o in hops:
            best = max(best, hops[o])
        else:
            lost.add(o)
    return best, lost | (broken & set(origins))


def cost_summary(config: Union[NetworkConfig, BaselineConfig], w_ffd: float = 1.0, w_rfd: float = 1.0) -> dict:
    """Node-count cost: C FFDs and N RFDs weighted by unit prices."""
    if isinstance(config, BaselineConfig):
        C, N = 0, config.N
    else:
        C, N = region_count(config.partition), config.N
    return {"C": C, "N": N, "w_ffd": w_ffd, "w_rfd": w_rfd, "cost": C * w_ffd + N * w_rfd}
