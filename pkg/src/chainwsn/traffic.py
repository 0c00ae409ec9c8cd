"""Per-round transfer lists and their energy cost.

Every protocol describes a round as a list of unicast transfers
(src, dst, bits, distance).  The sender pays the transmit energy, the
receiver (unless it is the BS) pays the receive energy.  This is the only
place radio energy is turned into per-node charges.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .network import BS, Message, MessageKind
from .radio import RadioParams, rx_energy, tx_energy

_KINDS = list(MessageKind)
_KIND_CODE = {k: i for i, k in enumerate(_KINDS)}


def _fill(v, shape, dtype) -> np.ndarray:
    if np.ndim(v) == 0:
        return np.full(shape, v, dtype=dtype)
    return np.asarray(v, dtype=dtype).reshape(shape)


class Traffic:
    def __init__(self) -> None:
        self._parts: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]] = []
        self.dropped_reports = 0

    def add(self, src, dst, bits, dist, kind: MessageKind = MessageKind.REPORT) -> None:
        src = np.atleast_1d(np.asarray(src, dtype=np.int64))
        if src.size == 0:
            return
        dst, bits, dist = (_fill(v, src.shape, t) for v, t in ((dst, np.int64), (bits, float), (dist, float)))
        self._parts.append((src, dst, bits, dist, _KIND_CODE[kind]))

    def extend(self, other: "Traffic") -> None:
        self._parts.extend(other._parts)
        self.dropped_reports += other.dropped_reports

    def arrays(self):
        if not self._parts:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z, z, z.astype(np.int64)
        src = np.concatenate([p[0] for p in self._parts])
        dst = np.concatenate([p[1] for p in self._parts])
        bits = np.concatenate([p[2] for p in self._parts])
        dist = np.concatenate([p[3] for p in self._parts])
        kind = np.concatenate([np.full(p[0].shape, p[4]) for p in self._parts])
        return src, dst, bits, dist, kind

    def energy(self, radio: RadioParams, n_nodes: int) -> np.ndarray:
        """Joules spent by each node for this traffic."""
        src, dst, bits, dist, _ = self.arrays()
        cost = np.zeros(n_nodes)
        if src.size == 0:
            return cost
        live = bits > 0
        src, dst, bits, dist = src[live], dst[live], bits[live], dist[live]
        tx = src != BS
        cost += np.bincount(src[tx], weights=tx_energy(radio, bits[tx], dist[tx]), minlength=n_nodes)
        rx = dst != BS
        cost += np.bincount(dst[rx], weights=rx_energy(radio, bits[rx]), minlength=n_nodes)
        return cost

    def messages(self) -> list[Message]:
        src, dst, bits, dist, kind = self.arrays()
        return [Message(_KINDS[k], int(s), int(d), int(b), float(x))
                for s, d, b, x, k in zip(src, dst, bits, dist, kind)]

    def __len__(self) -> int:
        return sum(p[0].size for p in self._parts)


def link_lengths(xy: np.ndarray, seq: np.ndarray) -> np.ndarray:
    """Distances between consecutive nodes of ``seq``."""
    if seq.size < 2:
        return np.zeros(0)
    d = np.diff(xy[seq], axis=0)
    return np.hypot(d[:, 0], d[:, 1])


def gather(
    traffic: Traffic,
    xy: np.ndarray,
    members: np.ndarray,
    head: int,
    report_bits: int,
    fusion: bool = False,
    root: Optional[int] = None,
) -> int:
    """Chain gather toward ``members[head]``, or toward an external ``root``.

    With ``root`` the chain hangs off that node (which produces no report of
    its own) and ``head`` is ignored.  Without fusion every hop forwards all
    reports accumulated so far.  Returns the number of reports delivered.
    """
    members = np.asarray(members, dtype=np.int64)
    if members.size == 0:
        return 0
    if root is not None:
        seq, h = np.concatenate(([root], members)), 0
    else:
        seq, h = members, head
    n = seq.size
    dl = link_lengths(xy, seq)
    j = np.arange(n)
    left, right = j < h, j > h
    # reports a node forwards: everything between its chain end and itself
    carried = np.where(left, j + 1, n - j)
    bits = np.full(n, float(report_bits)) if fusion else carried * float(report_bits)
    if left.any():
        traffic.add(seq[left], seq[j[left] + 1], bits[left], dl[j[left]])
    if right.any():
        traffic.add(seq[right], seq[j[right] - 1], bits[right], dl[j[right] - 1])
    return int(members.size)
