"""Independent exact verification of the combinatorial claims.

Everything here is an oracle: it never trusts the construction, only the
graph/probe/weight data handed to it.  All arithmetic is exact (ints and
Fractions); verdicts carry witnesses on failure.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .construction import Structure
from .graphs import Graph, bits

DEFAULT_NODE_BUDGET = 10 ** 9
DEFAULT_EXHAUSTIVE_CAP = 25
DEFAULT_COLORING_CAP = 25
DEFAULT_ENUMERATION_CAP = 30


class BudgetExceeded(RuntimeError):
    """Branch-and-bound node budget exhausted; no partial result is returned."""


class TooLargeForExhaustive(ValueError):
    pass


class TooLargeForSearch(ValueError):
    pass


class NotIndependent(ValueError):
    pass


@dataclass
class Certificate:
    """Outcome record of one property check."""

    check: str
    ok: bool
    witness: object = None
    bounds: dict = field(default_factory=dict)
    millis: float = 0.0

    def __post_init__(self):
        if not self.ok and self.witness is None:
            raise ValueError("failing certificate requires a witness")

    @property
    def verdict(self) -> str:
        return "pass" if self.ok else "fail"

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return f"{x.numerator}/{x.denominator}"
            if isinstance(x, frozenset):
                return sorted(x)
            if isinstance(x, (set, tuple)):
                return [enc(v) for v in x]
            if isinstance(x, list):
                return [enc(v) for v in x]
            if isinstance(x, dict):
                return {str(k): enc(v) for k, v in x.items()}
            return x

        return {
            "check": self.check,
            "verdict": self.verdict,
            "witness": enc(self.witness),
            "bounds": enc(self.bounds),
            "millis": round(self.millis, 3),
        }


def _timed(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def is_triangle_free(g: Graph) -> Certificate:
    """Pass iff no three mutually adjacent vertices; witness is a triangle."""
    start = time.perf_counter()
    masks = g.masks()
    for u, v in g.edges:
        common = masks[u] & masks[v]
        if common:
            w = (common & -common).bit_length() - 1
            return Certificate(
                "triangle_free", False, witness=tuple(sorted((u, v, w))),
                millis=_timed(start),
            )
    return Certificate("triangle_free", True, bounds={"edges": g.m}, millis=_timed(start))


def check_probes_independent(s: Structure) -> Certificate:
    """Pass iff every probe induces no edge; witness is (probe index, edge)."""
    start = time.perf_counter()
    masks = s.graph.masks()
    for idx, probe in enumerate(s.probes):
        pm = 0
        for v in probe:
            pm |= 1 << v
        for v in probe:
            bad = masks[v] & pm
            if bad:
                u = (bad & -bad).bit_length() - 1
                return Certificate(
                    "probes_independent", False,
                    witness=(idx, tuple(sorted((v, u)))), millis=_timed(start),
                )
    return Certificate(
        "probes_independent", True, bounds={"probes": len(s.probes)},
        millis=_timed(start),
    )


def enumerate_independent_sets(g: Graph, cap: int = DEFAULT_EXHAUSTIVE_CAP) -> Iterator[frozenset[int]]:
    """Every independent set exactly once, including the empty set."""
    if g.n > cap:
        raise TooLargeForExhaustive(f"{g.n} vertices exceeds exhaustive cap {cap}")
    masks = g.masks()

    def rec(v: int, chosen: tuple[int, ...], forbidden: int) -> Iterator[frozenset[int]]:
        if v == g.n:
            yield frozenset(chosen)
            return
        yield from rec(v + 1, chosen, forbidden)
        if not (forbidden >> v) & 1:
            yield from rec(v + 1, chosen + (v,), forbidden | masks[v])

    yield from rec(0, (), 0)


def count_independent_sets(g: Graph, cap: int = 40) -> int:
    """Number of independent sets via the deletion recurrence i(G)=i(G-v)+i(G-N[v])."""
    if g.n > cap:
        raise TooLargeForExhaustive(f"{g.n} vertices exceeds counting cap {cap}")
    masks = g.masks()
    memo: dict[int, int] = {0: 1}

    def count(mask: int) -> int:
        if mask in memo:
            return memo[mask]
        v = (mask & -mask).bit_length() - 1
        res = count(mask & ~(1 << v)) + count(mask & ~((masks[v] | (1 << v)) & mask))
        memo[mask] = res
        return res

    return count((1 << g.n) - 1)


def max_weight_independent_set(
    g: Graph,
    weights,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[int, frozenset[int]]:
    """Exact maximum-weight independent set.

    Memoized recursion with connected-component decomposition, isolated/pendant
    reductions, and a weighted clique-cover upper bound (vertices and edges are
    the only cliques to cover in the triangle-free regime, but the bound is
    admissible for any graph).  Branching: maximum-weight vertex, ties broken
    by degree then id, include-branch first.
    """
    weights = tuple(weights)
    if len(weights) != g.n:
        raise ValueError("weight map size does not match the graph")
    if g.n == 0:
        return 0, frozenset()
    masks = g.masks()
    closed = [masks[v] | (1 << v) for v in range(g.n)]
    memo: dict[int, tuple[int, int]] = {}
    nodes = 0

    def component(mask: int) -> int:
        seed = mask & -mask
        comp = seed
        frontier = seed
        while frontier:
            grow = 0
            for v in bits(frontier):
                grow |= masks[v]
            grow &= mask & ~comp
            comp |= grow
            frontier = grow
        return comp

    def greedy_bound(mask: int) -> int:
        # cover by edges (count max endpoint weight) and single vertices
        left = mask
        total = 0
        order = sorted(bits(mask), key=lambda v: (-weights[v], v))
        for v in order:
            if not (left >> v) & 1:
                continue
            left &= ~(1 << v)
            nb = masks[v] & left
            if nb:
                best_u, best_w = -1, -1
                for u in bits(nb):
                    if weights[u] > best_w:
                        best_u, best_w = u, weights[u]
                left &= ~(1 << best_u)
            total += weights[v]
        return total

    def greedy_lower(mask: int) -> tuple[int, int]:
        left = mask
        total = 0
        chosen = 0
        for v in sorted(bits(mask), key=lambda v: (-weights[v], v)):
            if (left >> v) & 1:
                chosen |= 1 << v
                total += weights[v]
                left &= ~closed[v]
        return total, chosen

    def solve(mask: int) -> tuple[int, int]:
        nonlocal nodes
        if mask == 0:
            return 0, 0
        hit = memo.get(mask)
        if hit is not None:
            return hit
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"exceeded {node_budget} search nodes")

        # reductions: isolated vertices always in; pendant v beats its neighbor
        w_acc, s_acc, work = 0, 0, mask
        changed = True
        while changed:
            changed = False
            for v in bits(work):
                if not (work >> v) & 1:
                    continue
                nb = masks[v] & work
                if nb == 0:
                    w_acc += weights[v]
                    s_acc |= 1 << v
                    work &= ~(1 << v)
                    changed = True
                elif nb & (nb - 1) == 0:  # single neighbor
                    u = nb.bit_length() - 1
                    if weights[v] >= weights[u]:
                        w_acc += weights[v]
                        s_acc |= 1 << v
                        work &= ~(closed[v] | (1 << u))
                        changed = True
        if work != mask or w_acc:
            w2, s2 = solve(work) if work else (0, 0)
            res = (w_acc + w2, s_acc | s2)
            memo[mask] = res
            return res

        comp = component(mask)
        if comp != mask:
            w1, s1 = solve(comp)
            w2, s2 = solve(mask ^ comp)
            res = (w1 + w2, s1 | s2)
            memo[mask] = res
            return res

        lb, lb_set = greedy_lower(mask)
        if greedy_bound(mask) == lb:
            res = (lb, lb_set)
            memo[mask] = res
            return res

        v = max(bits(mask), key=lambda u: (weights[u], bin(masks[u] & mask).count("1"), -u))
        wi, si = solve(mask & ~closed[v])
        wi += weights[v]
        si |= 1 << v
        we, se = solve(mask & ~(1 << v))
        res = (wi, si) if wi >= we else (we, se)
        memo[mask] = res
        return res

    best_w, best_mask = solve((1 << g.n) - 1)
    return best_w, frozenset(bits(best_mask))


def check_probe_hit_inequality(s: Structure, independent_set) -> Certificate:
    """Pass iff the number of probes meeting I is at least the weight of I."""
    start = time.perf_counter()
    iset = frozenset(independent_set)
    if not s.graph.is_independent(iset):
        raise NotIndependent(f"{sorted(iset)} is not independent")
    hits = sum(1 for probe in s.probes if probe & iset)
    weight = sum(s.weights[v] for v in iset)
    ok = hits >= weight
    return Certificate(
        "probe_hit_inequality", ok,
        witness=None if ok else sorted(iset),
        bounds={"hits": hits, "weight": weight},
        millis=_timed(start),
    )


def check_probe_hits_exhaustive(s: Structure, cap: int = DEFAULT_EXHAUSTIVE_CAP) -> Certificate:
    """Quantify the probe-hit inequality over every independent set (exhaustive)."""
    start = time.perf_counter()
    masks = s.graph.masks()
    probe_masks = []
    for probe in s.probes:
        pm = 0
        for v in probe:
            pm |= 1 << v
        probe_masks.append(pm)
    checked = 0
    if s.n > cap:
        raise TooLargeForExhaustive(f"{s.n} vertices exceeds exhaustive cap {cap}")

    def rec(v: int, mask: int, weight: int, forbidden: int):
        nonlocal checked
        if v == s.n:
            checked += 1
            hits = sum(1 for pm in probe_masks if pm & mask)
            if hits < weight:
                return sorted(bits(mask))
            return None
        bad = rec(v + 1, mask, weight, forbidden)
        if bad is not None:
            return bad
        if not (forbidden >> v) & 1:
            return rec(v + 1, mask | (1 << v), weight + s.weights[v], forbidden | masks[v])
        return None

    bad = rec(0, 0, 0, 0)
    return Certificate(
        "probe_hits_all_independent_sets", bad is None,
        witness=bad, bounds={"independent_sets": checked},
        millis=_timed(start),
    )


def sample_probe_hits(s: Structure, samples: int, seed: int = 0) -> Certificate:
    """Spot-check the probe-hit inequality on random maximal independent sets."""
    start = time.perf_counter()
    rng = random.Random(seed)
    masks = s.graph.masks()
    closed = [masks[v] | (1 << v) for v in range(s.n)]
    probe_masks = []
    for probe in s.probes:
        pm = 0
        for v in probe:
            pm |= 1 << v
        probe_masks.append(pm)
    order = list(range(s.n))
    for _ in range(samples):
        rng.shuffle(order)
        mask, weight, free = 0, 0, (1 << s.n) - 1
        for v in order:
            if (free >> v) & 1:
                mask |= 1 << v
                weight += s.weights[v]
                free &= ~closed[v]
        hits = sum(1 for pm in probe_masks if pm & mask)
        if hits < weight:
            return Certificate(
                "probe_hits_sampled", False, witness=sorted(bits(mask)),
                bounds={"hits": hits, "weight": weight}, millis=_timed(start),
            )
    return Certificate(
        "probe_hits_sampled", True, bounds={"samples": samples},
        millis=_timed(start),
    )


def exists_coloring_all_probes_below(
    s: Structure,
    colors: int,
    cap: int = DEFAULT_COLORING_CAP,
) -> Certificate:
    """Search for a proper coloring in which every probe shows < ``colors`` colors.

    Pass means such a coloring exists (witness included); fail means every
    proper coloring puts at least ``colors`` colors on some probe.  Colors are
    canonicalized: a vertex may only open color c+1 if colors 1..c are in use.
    """
    start = time.perf_counter()
    if s.n > cap:
        raise TooLargeForSearch(f"{s.n} vertices exceeds coloring cap {cap}")
    adj = s.graph.adjacency()
    probes_of = [[] for _ in range(s.n)]
    for idx, probe in enumerate(s.probes):
        for v in probe:
            probes_of[v].append(idx)
    order = sorted(range(s.n), key=lambda v: (-len(probes_of[v]), -len(adj[v]), v))
    coloring = [0] * s.n  # 0 = uncolored, colors are 1-based
    probe_counts: list[dict[int, int]] = [dict() for _ in s.probes]

    def distinct(idx: int) -> int:
        return len(probe_counts[idx])

    def assign(v: int, c: int) -> bool:
        coloring[v] = c
        ok = True
        for idx in probes_of[v]:
            probe_counts[idx][c] = probe_counts[idx].get(c, 0) + 1
            if distinct(idx) >= colors:
                ok = False
        return ok

    def unassign(v: int, c: int) -> None:
        coloring[v] = 0
        for idx in probes_of[v]:
            probe_counts[idx][c] -= 1
            if probe_counts[idx][c] == 0:
                del probe_counts[idx][c]

    def rec(pos: int, used: int) -> bool:
        if pos == s.n:
            return True
        v = order[pos]
        banned = {coloring[u] for u in adj[v] if coloring[u]}
        for c in range(1, min(used + 1, s.n) + 1):
            if c in banned:
                continue
            if assign(v, c) and rec(pos + 1, max(used, c)):
                return True
            unassign(v, c)
        return False

    found = rec(0, 0)
    return Certificate(
        f"coloring_all_probes_below_{colors}", found,
        witness=list(coloring) if found else "search exhausted",
        bounds={"colors": colors},
        millis=_timed(start),
    )


def _proper_colorable(g: Graph, colors: int) -> list[int] | None:
    """Backtracking proper-coloring search with canonical color introduction."""
    if g.n == 0:
        return []
    adj = g.adjacency()
    order: list[int] = []
    seen = set()
    # seed with an edge (the largest clique in the triangle-free regime)
    if g.m:
        u, v = max(g.edges, key=lambda e: (len(adj[e[0]]) + len(adj[e[1]]), e))
        order = [u, v]
        seen = {u, v}
    while len(order) < g.n:
        best = max(
            (v for v in range(g.n) if v not in seen),
            key=lambda v: (sum(1 for u in adj[v] if u in seen), len(adj[v]), -v),
        )
        order.append(best)
        seen.add(best)
    coloring = [0] * g.n

    def rec(pos: int, used: int) -> bool:
        if pos == g.n:
            return True
        v = order[pos]
        banned = {coloring[u] for u in adj[v] if coloring[u]}
        for c in range(1, min(used + 1, colors) + 1):
            if c in banned:
                continue
            coloring[v] = c
            if rec(pos + 1, max(used, c)):
                return True
            coloring[v] = 0
        return False

    if rec(0, 0):
        return [c - 1 for c in coloring]
    return None


def chromatic_number(g: Graph, cap: int = DEFAULT_COLORING_CAP) -> int:
    """Exact chromatic number by iterative deepening."""
    if g.n > cap:
        raise TooLargeForSearch(f"{g.n} vertices exceeds coloring cap {cap}")
    if g.n == 0:
        return 0
    for c in range(1, g.n + 1):
        if _proper_colorable(g, c) is not None:
            return c
    raise AssertionError("unreachable")


def independence_ratio(g: Graph, weights, node_budget: int = DEFAULT_NODE_BUDGET) -> Fraction:
    """Exact (max independent weight) / (total weight)."""
    weights = tuple(weights)
    best, _ = max_weight_independent_set(g, weights, node_budget=node_budget)
    return Fraction(best, sum(weights))
