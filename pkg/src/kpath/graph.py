"""Directed graphs on dense integer ids, and fixed-capacity bitmask vertex sets."""

from __future__ import annotations

from typing import Iterable, Iterator


class GraphFormatError(ValueError):
    """Malformed edge-list text; the message names the offending line."""


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class VertexSet:
    """Immutable set of vertex ids in ``[0, capacity)``, backed by an int bitmask.

    Operations never mutate; they return new sets.  Mixing sets of different
    capacities is a programming error and raises ValueError instead of
    silently resizing.
    """

    __slots__ = ("capacity", "mask")

    def __init__(self, capacity: int, mask: int = 0):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        if mask < 0 or mask >> capacity:
            raise ValueError("mask has bits outside [0, capacity)")
        self.capacity = capacity
        self.mask = mask

    @classmethod
    def from_ids(cls, capacity: int, ids: Iterable[int]) -> "VertexSet":
        m = 0
        for v in ids:
            if not 0 <= v < capacity:
                raise ValueError(f"vertex id {v} outside [0, {capacity})")
            m |= 1 << v
        return cls(capacity, m)

    @classmethod
    def full(cls, capacity: int) -> "VertexSet":
        return cls(capacity, (1 << capacity) - 1)

    def _check(self, other: "VertexSet") -> None:
        if self.capacity != other.capacity:
            raise ValueError("vertex sets have different capacities")

    def _check_id(self, v: int) -> None:
        if not 0 <= v < self.capacity:
            raise ValueError(f"vertex id {v} outside [0, {self.capacity})")

    def add(self, v: int) -> "VertexSet":
        self._check_id(v)
        return VertexSet(self.capacity, self.mask | (1 << v))

    def remove(self, v: int) -> "VertexSet":
        self._check_id(v)
        return VertexSet(self.capacity, self.mask & ~(1 << v))

    def union(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.capacity, self.mask | other.mask)

    def intersection(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.capacity, self.mask & other.mask)

    def difference(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.capacity, self.mask & ~other.mask)

    def complement(self) -> "VertexSet":
        return VertexSet(self.capacity, ~self.mask & ((1 << self.capacity) - 1))

    def disjoint(self, other: "VertexSet") -> bool:
        self._check(other)
        return not self.mask & other.mask

    def intersection_size(self, other: "VertexSet") -> int:
        self._check(other)
        return (self.mask & other.mask).bit_count()

    def issubset(self, other: "VertexSet") -> bool:
        self._check(other)
        return not self.mask & ~other.mask

    def elements(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.mask))

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.capacity and (self.mask >> v) & 1 == 1

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, VertexSet)
            and self.capacity == other.capacity
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.capacity, self.mask))

    def __repr__(self) -> str:
        return f"VertexSet({self.capacity}, {{{', '.join(map(str, self))}}})"


class Digraph:
    """Immutable directed graph on vertex ids ``0..n-1``.

    Self-loops are rejected and duplicate edges are collapsed, so the edge
    list, the adjacency lists and the adjacency bitmasks always agree.
    """

    __slots__ = ("n", "edges", "out_adj", "in_adj", "out_mask", "in_mask")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        dedup = sorted(set((int(u), int(v)) for u, v in edges))
        out_adj: list[list[int]] = [[] for _ in range(n)]
        in_adj: list[list[int]] = [[] for _ in range(n)]
        out_mask = [0] * n
        in_mask = [0] * n
        for u, v in dedup:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            out_adj[u].append(v)
            in_adj[v].append(u)
            out_mask[u] |= 1 << v
            in_mask[v] |= 1 << u
        self.n = n
        self.edges = tuple(dedup)
        self.out_adj = tuple(tuple(a) for a in out_adj)
        self.in_adj = tuple(tuple(a) for a in in_adj)
        self.out_mask = tuple(out_mask)
        self.in_mask = tuple(in_mask)

    def out_neighbors(self, v: int) -> VertexSet:
        return VertexSet(self.n, self.out_mask[v])

    def in_neighbors(self, v: int) -> VertexSet:
        return VertexSet(self.n, self.in_mask[v])

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.n and (self.out_mask[u] >> v) & 1 == 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Digraph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={len(self.edges)})"


def out_neighbors(g: Digraph, v: int) -> VertexSet:
    """Set of u with an edge v -> u."""
    return g.out_neighbors(v)


def in_neighbors(g: Digraph, v: int) -> VertexSet:
    """Set of u with an edge u -> v."""
    return g.in_neighbors(v)


def parse_graph(text: str | bytes) -> Digraph:
    """Parse edge-list text: a header line ``n m`` followed by m lines ``u v``.

    Lines starting with '#' and blank lines are ignored.  Duplicate edges are
    collapsed; self-loops, out-of-range ids and malformed lines raise
    GraphFormatError naming the offending (1-based) line.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    n = m = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2:
                raise GraphFormatError(f"malformed header at line {lineno}")
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"malformed header at line {lineno}") from None
            if n < 0 or m < 0:
                raise GraphFormatError(f"negative count at line {lineno}")
            continue
        if len(edges) == m:
            raise GraphFormatError(f"unexpected extra line at line {lineno}")
        if len(parts) != 2:
            raise GraphFormatError(f"malformed edge at line {lineno}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"malformed edge at line {lineno}") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex id out of range at line {lineno}")
        if u == v:
            raise GraphFormatError(f"self-loop at line {lineno}")
        edges.append((u, v))
    if n is None:
        raise GraphFormatError("missing header line")
    if len(edges) != m:
        raise GraphFormatError(f"expected {m} edge lines, found {len(edges)}")
    return Digraph(n, edges)


def render_graph(g: Digraph) -> str:
    """Canonical edge-list text: header plus edges in lexicographic order."""
    lines = [f"{g.n} {len(g.edges)}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"
