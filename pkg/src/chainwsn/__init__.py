"""Round-based lifetime simulator for FFD-headed chain topologies in
heterogeneous wireless sensor networks, with PEGASIS, EPEGASIS and CHIRON
baselines on the same energy engine."""

from .chain import Approach, ChainVariant
from .engine import Scheme, SimResult, StopAt, simulate
from .geometry import PartitionSpec
from .network import NetworkConfig
from .radio import RadioParams

__all__ = [
    "Approach",
    "ChainVariant",
    "NetworkConfig",
    "PartitionSpec",
    "RadioParams",
    "Scheme",
    "SimResult",
    "StopAt",
    "simulate",
]
__version__ = "0.1.0"
