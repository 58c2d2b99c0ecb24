"""Recursive construction of the probe graphs G_k / G~_k and their weights.

Level 1 is a single vertex carrying the single probe.  For k >= 2 the level-k
object is assembled from a base copy of level k-1, one fresh copy of level k-1
per base probe, and one new "diagonal" vertex per (base probe, copy probe)
pair, joined to exactly that copy probe.  Probes at level k are all sets
P u Q and P u {d_Q}.  Weights: base weights are scaled by the level-(k-1)
probe count, copy weights are kept, diagonals weigh 1.

The G~ variant additionally attaches one weight-1 diagonal per level-k probe;
it adds no probes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

from .graphs import Graph


class LevelTooLarge(ValueError):
    """Requested level would exceed the configured vertex budget."""


class AlreadyTilde(ValueError):
    """The structure already carries its per-probe diagonals."""


DEFAULT_VERTEX_CAP = 50_000
GEOMETRY_LEVEL_CAP = 4


def probe_count(k: int) -> int:
    """Number of probes at level k: 2^(2^(k-1) - 1)."""
    _check_level(k)
    return 2 ** (2 ** (k - 1) - 1)


def total_weight(k: int, tilde: bool = False) -> int:
    """Exact total weight: (k+1)/2 * 2^(2^(k-1)-1), or (k+3)/2 * ... for G~_k."""
    _check_level(k)
    num = (k + 3 if tilde else k + 1) * 2 ** (2 ** (k - 1) - 1)
    assert num % 2 == 0
    return num // 2


def vertex_count(k: int, tilde: bool = False) -> int:
    """Vertices at level k, computed from the recurrence without building."""
    _check_level(k)
    n = 1
    for j in range(2, k + 1):
        p = probe_count(j - 1)
        n = n * (1 + p) + p * p
    return n + (probe_count(k) if tilde else 0)


def edge_count(k: int, tilde: bool = False) -> int:
    """Edges at level k from the recurrence (diagonals contribute |Q| each)."""
    _check_level(k)
    m, sum_probe_sizes, p = 0, 1, 1
    for j in range(2, k + 1):
        m = m * (1 + p) + p * sum_probe_sizes
        # probe sizes at level j: sum over pairs of |P|+|Q| and |P|+1
        sum_probe_sizes = 2 * p * sum_probe_sizes + p * (sum_probe_sizes + p)
        p = probe_count(j)
    if tilde:
        m += sum_probe_sizes
    return m


def _check_level(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"level must be an integer >= 1, got {k!r}")


@dataclass(frozen=True)
class Blueprint:
    """Immutable recursive description of one level, with local vertex ids.

    Shared across all instances of the same level (the base copy and every
    probe copy of level k point at the single level-(k-1) blueprint).
    """

    k: int
    n: int
    p: int  # probe count of the *previous* level (copies per block); 0 at k=1
    probes: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]
    weights: tuple[int, ...]
    prov: tuple[tuple[str, ...], ...]
    sub: "Blueprint | None"  # level k-1 blueprint (base and copies alike)

    def copy_offset(self, i: int) -> int:
        return (1 + i) * self.sub.n

    def diag_id(self, i: int, j: int) -> int:
        return (1 + self.p) * self.sub.n + i * self.p + j

    def probe_index(self, i: int, j: int, kind: str) -> int:
        """Index in the probe list of P_i u Q_j ('union') or P_i u {d_ij} ('diag')."""
        return 2 * (i * self.p + j) + (0 if kind == "union" else 1)


@lru_cache(maxsize=None)
def blueprint(k: int) -> Blueprint:
    _check_level(k)
    if k == 1:
        return Blueprint(
            k=1, n=1, p=0,
            probes=((0,),), edges=(), weights=(1,), prov=((),), sub=None,
        )
    sub = blueprint(k - 1)
    p = len(sub.probes)
    n = (1 + p) * sub.n + p * p

    def off(i: int) -> int:
        return (1 + i) * sub.n

    edges: list[tuple[int, int]] = list(sub.edges)
    prov: list[tuple[str, ...]] = [("base",) + path for path in sub.prov]
    weights: list[int] = [w * p for w in sub.weights]
    for i in range(p):
        o = off(i)
        edges.extend((u + o, v + o) for u, v in sub.edges)
        prov.extend((f"copy{i}",) + path for path in sub.prov)
        weights.extend(sub.weights)
    probes: list[tuple[int, ...]] = []
    diag_base = (1 + p) * sub.n
    for i in range(p):
        base_probe = sub.probes[i]
        for j in range(p):
            d = diag_base + i * p + j
            o = off(i)
            copy_probe = tuple(v + o for v in sub.probes[j])
            edges.extend((min(v, d), max(v, d)) for v in copy_probe)
            probes.append(tuple(sorted(base_probe + copy_probe)))
            probes.append(tuple(sorted(base_probe + (d,))))
    for i in range(p):
        for j in range(p):
            prov.append((f"copy{i}", f"diag{j}"))
            weights.append(1)
    return Blueprint(
        k=k, n=n, p=p,
        probes=tuple(probes), edges=tuple(edges),
        weights=tuple(weights), prov=tuple(prov), sub=sub,
    )


@dataclass(frozen=True)
class Structure:
    """One built level: graph, ordered probes, weights, and provenance labels."""

    k: int
    tilde: bool
    graph: Graph
    probes: tuple[frozenset[int], ...]
    weights: tuple[int, ...]
    provenance: tuple[tuple[str, ...], ...]

    @property
    def n(self) -> int:
        return self.graph.n

    def total_weight(self) -> int:
        return sum(self.weights)

    def provenance_strings(self) -> list[str]:
        return [path_string(p) for p in self.provenance]


def path_string(path: tuple[str, ...]) -> str:
    return "/".join(path) if path else "v"


def build_structure(k: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Structure:
    """Deterministically build (G_k, P_k, w_k).

    Rejects levels whose vertex count would exceed ``vertex_cap`` before any
    allocation happens (level 6 already has ~2.4e9 vertices).
    """
    _check_level(k)
    n = vertex_count(k)
    if n > vertex_cap:
        raise LevelTooLarge(
            f"level {k} has {n} vertices, exceeding the cap of {vertex_cap}"
        )
    bp = blueprint(k)
    return Structure(
        k=k,
        tilde=False,
        graph=Graph(bp.n, bp.edges),
        probes=tuple(frozenset(p) for p in bp.probes),
        weights=bp.weights,
        provenance=bp.prov,
    )


def build_tilde(s: Structure) -> Structure:
    """Attach one weight-1 diagonal per probe of s; probes are unchanged."""
    if s.tilde:
        raise AlreadyTilde("structure already has per-probe diagonals")
    n = s.n
    edges = list(s.graph.edges)
    for t, probe in enumerate(s.probes):
        d = n + t
        edges.extend((v, d) for v in sorted(probe))
    return Structure(
        k=s.k,
        tilde=True,
        graph=Graph(n + len(s.probes), edges),
        probes=s.probes,
        weights=s.weights + (1,) * len(s.probes),
        provenance=s.provenance + tuple((f"diag{t}",) for t in range(len(s.probes))),
    )


@dataclass(frozen=True)
class BlowUp:
    """Result of replacing each vertex by an independent class of its weight."""

    graph: Graph
    classes: tuple[tuple[int, ...], ...]  # classes[v] = new ids for vertex v


def blow_up(g: Graph, weights) -> BlowUp:
    """Replace vertex v by w(v) independent vertices; join classes of adjacent vertices."""
    weights = tuple(weights)
    if len(weights) != g.n:
        raise ValueError("weight map size does not match the graph")
    if any(w < 1 for w in weights):
        raise ValueError("weights must be positive integers")
    classes = []
    nxt = 0
    for v in range(g.n):
        classes.append(tuple(range(nxt, nxt + weights[v])))
        nxt += weights[v]
    edges = [
        (a, b)
        for u, v in g.edges
        for a in classes[u]
        for b in classes[v]
    ]
    return BlowUp(graph=Graph(nxt, edges), classes=tuple(classes))


def structure_to_json(s: Structure) -> str:
    doc = {
        "k": s.k,
        "tilde": s.tilde,
        "n": s.n,
        "edges": s.graph.edges_sorted(),
        "probes": [sorted(p) for p in s.probes],
        "weights": list(s.weights),
        "provenance": s.provenance_strings(),
    }
    return json.dumps(doc, indent=1)


def structure_to_dot(s: Structure) -> str:
    name = ("Gt" if s.tilde else "G") + str(s.k)
    lines = [f"graph {name} {{"]
    for v in range(s.n):
        lines.append(f'  v{v} [label="{v} w={s.weights[v]}"];')
    for u, v in s.graph.edges_sorted():
        lines.append(f"  v{u} -- v{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
