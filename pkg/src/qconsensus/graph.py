"""Directed-graph data model, random generation, and out-neighbor orders.

Edges are stored as ``(receiver, sender)`` pairs: the edge ``(j, i)`` means
node ``i`` can transmit to node ``j``.  Every node owns a fixed priority
order over its out-neighbors that drives round-robin transmission.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

Seed = int | str


class GraphError(ValueError):
    """Malformed digraph, order assignment, or exchange file."""


@dataclass(frozen=True)
class Digraph:
    """Immutable digraph with per-node out-neighbor transmission orders.

    ``out_order[j]`` lists node ``j``'s out-neighbors from priority 0 up;
    it must be a permutation of ``j``'s out-neighbors.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    out_order: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise GraphError(f"need at least 2 nodes, got {self.n}")
        out_adj: list[list[int]] = [[] for _ in range(self.n)]
        in_adj: list[list[int]] = [[] for _ in range(self.n)]
        for receiver, sender in self.edges:
            if receiver == sender:
                raise GraphError(f"self-loop at node {receiver}")
            if not (0 <= receiver < self.n and 0 <= sender < self.n):
                raise GraphError(f"edge ({receiver}, {sender}) out of range")
            out_adj[sender].append(receiver)
            in_adj[receiver].append(sender)
        if len(self.out_order) != self.n:
            raise GraphError("out_order must list every node")
        for j, order in enumerate(self.out_order):
            if sorted(order) != sorted(out_adj[j]):
                raise GraphError(
                    f"out_order of node {j} is not a permutation of its out-neighbors"
                )
        object.__setattr__(self, "_out_adj", tuple(tuple(sorted(a)) for a in out_adj))
        object.__setattr__(self, "_in_adj", tuple(tuple(sorted(a)) for a in in_adj))

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        return self._out_adj[j]  # type: ignore[attr-defined]

    def in_neighbors(self, j: int) -> tuple[int, ...]:
        return self._in_adj[j]  # type: ignore[attr-defined]

    def out_degree(self, j: int) -> int:
        return len(self._out_adj[j])  # type: ignore[attr-defined]


class Role(Enum):
    PRIVACY = "privacy"
    CURIOUS = "curious"
    PLAIN = "plain"


@dataclass(frozen=True)
class RoleMap:
    """Partition of the node set into privacy-seeking, curious, and plain."""

    n: int
    privacy: frozenset[int]
    curious: frozenset[int]

    def __post_init__(self) -> None:
        if self.privacy & self.curious:
            raise GraphError("privacy and curious sets overlap")
        all_nodes = self.privacy | self.curious
        if any(not (0 <= j < self.n) for j in all_nodes):
            raise GraphError("role assigned to node outside [0, n)")

    @property
    def plain(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.privacy - self.curious

    def role(self, j: int) -> Role:
        if j in self.privacy:
            return Role.PRIVACY
        if j in self.curious:
            return Role.CURIOUS
        return Role.PLAIN


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every ordered node pair is joined by a directed path."""
    return _covers_all(g, forward=True) and _covers_all(g, forward=False)


def _covers_all(g: Digraph, forward: bool) -> bool:
    seen = {0}
    stack = [0]
    step = g.out_neighbors if forward else g.in_neighbors
    while stack:
        j = stack.pop()
        for k in step(j):
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return len(seen) == g.n


def _sample_edges(n: int, p: float, rng: random.Random) -> frozenset[tuple[int, int]]:
    edges = set()
    for receiver in range(n):
        for sender in range(n):
            if receiver != sender and rng.random() < p:
                edges.add((receiver, sender))
    return frozenset(edges)


def _random_orders(
    n: int,
    out_adj: Mapping[int, Iterable[int]],
    rng: random.Random,
    prioritize: Mapping[int, int] | None = None,
) -> tuple[tuple[int, ...], ...]:
    prioritize = prioritize or {}
    orders = []
    for j in range(n):
        neigh = sorted(out_adj[j])
        rng.shuffle(neigh)
        if j in prioritize:
            first = prioritize[j]
            if first not in neigh:
                raise GraphError(f"node {first} is not an out-neighbor of {j}")
            neigh.remove(first)
            neigh.insert(0, first)
        orders.append(tuple(neigh))
    return tuple(orders)


def generate_random_digraph(
    n: int, p: float, seed: Seed, max_retries: int = 10_000
) -> Digraph:
    """Sample a strongly connected digraph with i.i.d. edge probability ``p``.

    Each ordered pair (receiver, sender) gets an edge with probability ``p``.
    Non-strongly-connected draws are discarded and regenerated from a seed
    derived deterministically from ``seed`` and the attempt index.
    """
    if n < 2:
        raise GraphError(f"need at least 2 nodes, got {n}")
    if not (0.0 < p <= 1.0):
        raise GraphError(f"edge probability must be in (0, 1], got {p}")
    for attempt in range(max_retries):
        rng = random.Random(f"{seed}#{attempt}")
        edges = _sample_edges(n, p, rng)
        out_adj = {j: [] for j in range(n)}
        for receiver, sender in edges:
            out_adj[sender].append(receiver)
        orders = _random_orders(n, out_adj, rng)
        g = Digraph(n=n, edges=edges, out_order=orders)
        if is_strongly_connected(g):
            return g
    raise GraphError(
        f"no strongly connected digraph found in {max_retries} attempts "
        f"(n={n}, p={p}); increase p or the retry budget"
    )


def assign_out_orders(
    g: Digraph, seed: Seed, prioritize: Mapping[int, int] | None = None
) -> Digraph:
    """Re-randomize every node's out-neighbor order, deterministically per seed.

    ``prioritize`` maps a sender to the out-neighbor that must get order 0.
    """
    rng = random.Random(f"{seed}#orders")
    out_adj = {j: g.out_neighbors(j) for j in range(g.n)}
    orders = _random_orders(g.n, out_adj, rng, prioritize)
    return Digraph(n=g.n, edges=g.edges, out_order=orders)


def digraph_to_dict(g: Digraph) -> dict:
    return {
        "n": g.n,
        "edges": sorted([list(e) for e in g.edges]),
        "out_order": {str(j): list(g.out_order[j]) for j in range(g.n)},
    }


def digraph_from_dict(data: dict) -> Digraph:
    try:
        n = int(data["n"])
        edges = frozenset((int(r), int(s)) for r, s in data["edges"])
        order_map = {int(j): tuple(v) for j, v in data["out_order"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed digraph document: {exc}") from exc
    if sorted(order_map) != list(range(n)):
        raise GraphError("out_order must have one entry per node")
    return Digraph(n=n, edges=edges, out_order=tuple(order_map[j] for j in range(n)))


def save_digraph(g: Digraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(digraph_to_dict(g), indent=2) + "\n")


def load_digraph(path: str | Path) -> Digraph:
    return digraph_from_dict(json.loads(Path(path).read_text()))
