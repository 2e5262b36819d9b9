"""Initial zero-sum offset strategy: a one-shot pre-round offset exchange.

Before the consensus run starts, each participating node sends an integer
offset to every out-neighbor and balances them with a self-offset so its
own contribution sums to zero.  Received offsets plus the self-offset are
folded into the initial state; the network sum is unchanged and the node
then runs the unmodified baseline protocol.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .protocol import MassPair, NodeCore, ProtocolError, StateVars


@dataclass(frozen=True)
class ZeroSumSchedule:
    """Per-out-neighbor offsets; the self-offset is their negated sum."""

    per_out: tuple[tuple[int, int], ...]  # (out-neighbor, offset), sorted by neighbor

    @property
    def u_self(self) -> int:
        return -sum(v for _, v in self.per_out)

    def offset_for(self, neighbor: int) -> int:
        for k, v in self.per_out:
            if k == neighbor:
                return v
        raise KeyError(neighbor)


@dataclass(frozen=True, slots=True)
class OffsetMessage:
    sender: int
    receiver: int
    value: int


def make_zero_sum_schedule(per_out: Mapping[int, int]) -> ZeroSumSchedule:
    return ZeroSumSchedule(per_out=tuple(sorted(per_out.items())))


def sample_zero_sum_schedule(
    out_neighbors: Sequence[int],
    rng: random.Random,
    value_range: tuple[int, int] = (-20, 20),
) -> ZeroSumSchedule:
    lo, hi = value_range
    per_out = {v: rng.randint(lo, hi) for v in sorted(out_neighbors)}
    return make_zero_sum_schedule(per_out)


def init_zero_sum(
    y0: int,
    schedule: ZeroSumSchedule,
    received: Iterable[OffsetMessage],
    in_neighbors: Sequence[int],
) -> NodeCore:
    """Fold the self-offset and all received offsets into the initial state."""
    in_set = set(in_neighbors)
    total = y0 + schedule.u_self
    for msg in received:
        if msg.sender not in in_set:
            raise ProtocolError(
                f"offset from {msg.sender} which is not an in-neighbor"
            )
        total += msg.value
    return NodeCore(mass=MassPair(total, 1), state=StateVars(total, 1))
