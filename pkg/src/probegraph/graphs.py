"""Minimal undirected graph container shared by the construction and the oracles."""

from __future__ import annotations

from typing import Iterable, Iterator


class Graph:
    """Undirected simple graph on vertices 0..n-1 with a frozen edge set.

    Edges are stored normalized as (u, v) with u < v.  Adjacency bitmasks are
    built lazily; they are the workhorse for the exact solvers.
    """

    __slots__ = ("n", "edges", "_adj", "_masks")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = n
        norm = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            norm.add((u, v) if u < v else (v, u))
        self.edges = frozenset(norm)
        self._adj = None
        self._masks = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[set[int]]:
        if self._adj is None:
            adj = [set() for _ in range(self.n)]
            for u, v in self.edges:
                adj[u].add(v)
                adj[v].add(u)
            self._adj = adj
        return self._adj

    def masks(self) -> list[int]:
        """Neighbor bitmask per vertex (vertex itself not included)."""
        if self._masks is None:
            masks = [0] * self.n
            for u, v in self.edges:
                masks[u] |= 1 << v
                masks[v] |= 1 << u
            self._masks = masks
        return self._masks

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    def edges_sorted(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_independent(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        mask = 0
        for v in vs:
            mask |= 1 << v
        nb = self.masks()
        return all(nb[v] & mask == 0 for v in vs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def bits(mask: int) -> Iterator[int]:
    """Indices of set bits, ascending."""
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


def popcount(mask: int) -> int:
    return bin(mask).count("1")
