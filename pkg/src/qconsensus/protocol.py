"""Baseline event-triggered quantized average consensus state machine.

A traveling token is a mass pair (y, z): an integer numerator and a
nonnegative counter.  Nodes merge arriving tokens into their stored mass,
fire when the merged mass dominates their last accepted state, and forward
the full mass to out-neighbors in round-robin order.  State variables hold
the last accepted mass; the estimate q = y_s / z_s is kept as the integer
pair and only ever compared by cross-multiplication.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .graph import Digraph


class ProtocolError(RuntimeError):
    """An operation was invoked outside its contract."""


@dataclass(slots=True)
class MassPair:
    y: int = 0
    z: int = 0


@dataclass(slots=True)
class StateVars:
    y: int
    z: int

    @property
    def q(self) -> Fraction:
        return Fraction(self.y, self.z)


@dataclass(slots=True)
class NodeCore:
    mass: MassPair
    state: StateVars
    c: int = 0  # transmissions performed
    e: int = 0  # round-robin priority index, always c mod out-degree


@dataclass(frozen=True, slots=True)
class Message:
    sender: int
    receiver: int
    y: int
    z: int
    send_step: int


def init_plain(y0: int) -> NodeCore:
    """Node state before the unconditional initialization transmission."""
    return NodeCore(mass=MassPair(y0, 1), state=StateVars(y0, 1))


def absorb(node: NodeCore, inbox: Iterable[Message]) -> NodeCore:
    """Merge all arriving tokens into the stored mass (order-independent)."""
    for msg in inbox:
        node.mass.y += msg.y
        node.mass.z += msg.z
    return node


def check_event(node: NodeCore) -> bool:
    """Fire when the mass dominates the state by counter, or ties and
    dominates by numerator."""
    return node.mass.z > node.state.z or (
        node.mass.z == node.state.z and node.mass.y >= node.state.y
    )


def fire_and_transmit(node: NodeCore, g: Digraph, node_id: int, step: int) -> Message:
    """Accept the mass into the state, ship it to the current-priority
    out-neighbor, and reset the stored mass."""
    if not check_event(node):
        raise ProtocolError(f"node {node_id} fired without a satisfied event condition")
    if node.mass.z < 1:
        raise ProtocolError(f"node {node_id} tried to transmit a counterless mass")
    order = g.out_order[node_id]
    dest = order[node.e]
    node.state.y = node.mass.y
    node.state.z = node.mass.z
    msg = Message(node_id, dest, node.mass.y, node.mass.z, step)
    node.mass.y = 0
    node.mass.z = 0
    node.c += 1
    node.e = node.c % len(order)
    return msg


def state_matches_average(state: StateVars, exact_sum: int, n: int) -> bool:
    """Exact-rational test y_s / z_s == exact_sum / n by cross-multiplication."""
    return state.y * n == exact_sum * state.z


def consensus_reached(states: Iterable[StateVars], exact_sum: int, n: int) -> bool:
    """True iff every node's estimate equals the exact average."""
    return all(state_matches_average(s, exact_sum, n) for s in states)
