"""Segment families with exact rational coordinates realizing the probe graphs.

Layout idea.  Every probe gets a horizontal "band box" (probes stacked bottom
to top in a recursive order that keeps each vertex's probe set contiguous).
Leaf vertices (copies of the level-1 vertex) are vertical segments, one column
each, base subtree west of the copy subtrees.  Every diagonal is a single
gently-rising segment: it starts just west of its neighborhood, crosses all of
it inside a narrow sweep window (the mid zone of the band box of the probe it
was built from), then climbs east fast enough to clear, with exact margins,
the member hull of every band box it traverses without belonging to.  Climb
rates are shared within a creation site and assigned bottom-up, so every
constraint only references segments born lower down; a small repair loop
separates any residual diagonal pair.

Probe rectangles are carved from the top fifth of each probe's band box and
derived post hoc from the actual member positions.  An exact validator then
recomputes the whole intersection graph, every rectangle's crossing set, and
the general-position requirements, so the construction is certified rather
than trusted.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import lcm

from .construction import GEOMETRY_LEVEL_CAP, Structure, blueprint
from .graphs import Graph
from .oracle import Certificate, _timed


class LevelTooLargeForGeometry(ValueError):
    pass


class ReplicationCollision(RuntimeError):
    pass


class LayoutError(RuntimeError):
    """Internal validation of a freshly built family failed."""


Frac = Fraction

# band grid: stride 1, box height 4/5; zones as fractions of a box
STRIDE = Frac(1)
BOX_H = Frac(4, 5)
CHILD_HI = Frac(3, 5)            # lower part: nested boxes of deeper levels
MID_LO, MID_HI = Frac(13, 20), Frac(3, 4)   # sweep window of the box creator
ZONE_LO, ZONE_HI = Frac(4, 5), Frac(19, 20)  # exported-rectangle zone

COLSP = Frac(1)
P0 = Frac(1, 4)  # global clearance between member hulls and dodging diagonals


@dataclass(frozen=True)
class Segment:
    ax: Frac
    ay: Frac
    bx: Frac
    by: Frac
    label: int
    copy: int = 0

    def x_at(self, y: Frac) -> Frac:
        t = (y - self.ay) / (self.by - self.ay)
        return self.ax + t * (self.bx - self.ax)

    @property
    def ylo(self) -> Frac:
        return min(self.ay, self.by)

    @property
    def yhi(self) -> Frac:
        return max(self.ay, self.by)


@dataclass(frozen=True)
class ProbeRect:
    x0: Frac
    y0: Frac
    x1: Frac
    y1: Frac
    probe: int


@dataclass
class SegmentFamily:
    segments: list[Segment]
    rects: list[ProbeRect]
    probe_members: tuple[frozenset[int], ...]
    k: int
    tilde: bool
    n_vertices: int
    replicated: bool = False


def orient(ax, ay, bx, by, cx, cy) -> int:
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    """Closed-segment intersection via exact orientation tests."""
    a, b = (s1.ax, s1.ay), (s1.bx, s1.by)
    c, d = (s2.ax, s2.ay), (s2.bx, s2.by)
    o1 = orient(*a, *b, *c)
    o2 = orient(*a, *b, *d)
    o3 = orient(*c, *d, *a)
    o4 = orient(*c, *d, *b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_segment(*a, *b, *c):
        return True
    if o2 == 0 and _on_segment(*a, *b, *d):
        return True
    if o3 == 0 and _on_segment(*c, *d, *a):
        return True
    if o4 == 0 and _on_segment(*c, *d, *b):
        return True
    return False


def proper_crossing(s1: Segment, s2: Segment) -> bool:
    """True iff the segments cross transversally at interior points of both."""
    o1 = orient(s1.ax, s1.ay, s1.bx, s1.by, s2.ax, s2.ay)
    o2 = orient(s1.ax, s1.ay, s1.bx, s1.by, s2.bx, s2.by)
    o3 = orient(s2.ax, s2.ay, s2.bx, s2.by, s1.ax, s1.ay)
    o4 = orient(s2.ax, s2.ay, s2.bx, s2.by, s1.bx, s1.by)
    return o1 * o2 < 0 and o3 * o4 < 0


def crossing_point(s1: Segment, s2: Segment) -> tuple[Frac, Frac]:
    d1x, d1y = s1.bx - s1.ax, s1.by - s1.ay
    d2x, d2y = s2.bx - s2.ax, s2.by - s2.ay
    den = d1x * d2y - d1y * d2x
    if den == 0:
        raise ValueError("parallel segments do not cross in one point")
    t = ((s2.ax - s1.ax) * d2y - (s2.ay - s1.ay) * d2x) / den
    return s1.ax + t * d1x, s1.ay + t * d1y


def seg_intersects_open_rect(s: Segment, r: ProbeRect) -> bool:
    """Exact test: does the (closed) segment meet the open rectangle?"""
    lo, hi = Frac(0), Frac(1)
    for p, d, q0, q1 in (
        (s.ax, s.bx - s.ax, r.x0, r.x1),
        (s.ay, s.by - s.ay, r.y0, r.y1),
    ):
        if d == 0:
            if not (q0 < p < q1):
                return False
            continue
        t0, t1 = (q0 - p) / d, (q1 - p) / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo, hi = max(lo, t0), min(hi, t1)
        if lo >= hi:
            return False
    return lo < hi


def point_in_closed_rect(x: Frac, y: Frac, r: ProbeRect) -> bool:
    return r.x0 <= x <= r.x1 and r.y0 <= y <= r.y1


# --- band orders and layout ---------------------------------------------------


@lru_cache(maxsize=None)
def c1p_order(k: int) -> tuple[int, ...]:
    """Probe order in which every vertex's probe set is contiguous.

    Recursively: per block, all union probes (in sublevel c1p order), then
    the diagonal probes reversed.  Used to sequence blocks so that base-side
    vertices never have gaps in their top-level band runs.
    """
    if k == 1:
        return (0,)
    bp = blueprint(k)
    sub = c1p_order(k - 1)
    order: list[int] = []
    for i in sub:
        order.extend(bp.probe_index(i, t, "union") for t in sub)
        order.extend(bp.probe_index(i, t, "diag") for t in reversed(sub))
    return tuple(order)


@lru_cache(maxsize=None)
def geo_order(k: int) -> tuple[int, ...]:
    """Bottom-to-top band stacking: blocks in sublevel c1p order; inside a
    block, (union band, its diagonal band) pairs with unions in sublevel
    geo order, so every diagonal's duty band sits right above its sweep."""
    if k == 1:
        return (0,)
    bp = blueprint(k)
    order: list[int] = []
    for i in c1p_order(k - 1):
        for t in geo_order(k - 1):
            order.append(bp.probe_index(i, t, "union"))
            order.append(bp.probe_index(i, t, "diag"))
    return tuple(order)


@lru_cache(maxsize=None)
def geo_pos(k: int) -> tuple[int, ...]:
    order = geo_order(k)
    pos = [0] * len(order)
    for p, idx in enumerate(order):
        pos[idx] = p
    return tuple(pos)


def _box(q: int) -> tuple[Frac, Frac]:
    return (q * STRIDE, q * STRIDE + BOX_H)


def _mid(box: tuple[Frac, Frac]) -> tuple[Frac, Frac]:
    lo, hi = box
    h = hi - lo
    return (lo + h * MID_LO, lo + h * MID_HI)


def _zone(box: tuple[Frac, Frac]) -> tuple[Frac, Frac]:
    lo, hi = box
    h = hi - lo
    return (lo + h * ZONE_LO, lo + h * ZONE_HI)


class _Layout:
    """One layout computation for a structure; all coordinates exact.

    Columns per node: copy subtrees west, a parking strip, then the base
    subtree east.  Every diagonal is born in the gap just above the highest
    band its sweep targets all cross, sweeps them there, and then drifts into
    parking space ahead of its first duty band: the strip of its creation
    node when that band is adjacent, or a far-west lot (crossed into while
    every intervening column is dead) when blocks intervene.  Exported
    rectangles live in the top zone of each band's box and are derived from
    the actual member positions, then everything is validated exactly.
    """

    def __init__(self, s: Structure, strip_scale: int = 1):
        self.s = s
        self.k = s.k
        self.n = s.n
        self.strip_scale = strip_scale
        self.pos_k = geo_pos(s.k)
        self.n_probes = len(s.probes)
        runs: list[list[int]] = [[] for _ in range(self.n)]
        for t, probe in enumerate(s.probes):
            p = self.pos_k[t]
            for v in probe:
                runs[v].append(p)
        self.runs = [sorted(r) for r in runs]
        self.band_at = {self.pos_k[t]: t for t in range(self.n_probes)}
        self.adj = s.graph.adjacency()

    def _mu(self, v: int) -> Frac:
        return STRIDE / 40 * (1 + Frac(v + 1, 2 * self.n + 2))

    def duty_site(self, v: int) -> tuple[tuple[str, ...], int]:
        """Where a diagonal's duty lives in block terms: the all-copy prefix
        of its creation node and the index of the base probe (of that
        prefix's structure) whose block hosts its duty bands.

        The duty probe is wrapped upward until the step entering the
        prefix's base; at deeper base flips it is replaced by the block's
        highest-c1p band, so the result names the westmost duty block under
        the reversed copy ordering.
        """
        path = self.s.provenance[v]
        node_path = path[:-2]
        fbi = 0
        while fbi < len(node_path) and node_path[fbi] != "base":
            fbi += 1
        sigma = node_path[:fbi]
        node_bp = blueprint(self.k - len(node_path))
        probe = node_bp.probe_index(int(path[-2][4:]), int(path[-1][4:]), "diag")
        level = self.k - len(node_path)
        for step in reversed(node_path[fbi + 1 :]):
            parent_bp = blueprint(level + 1)
            if step.startswith("copy"):
                probe = parent_bp.probe_index(int(step[4:]), probe, "union")
            else:
                # block flip: continue with the block's lowest-c1p band, so
                # the final site lands east of the eastmost duty block
                probe = parent_bp.probe_index(probe, c1p_order(level)[0], "union")
            level += 1
        return sigma, probe

    # -- column and parking-site assignment

    def _assign_columns(self, site_spans):
        """Columns and parking sites.

        Per node, west to east: for each block in reverse c1p order, the
        block's copy subtree followed by its parking site, then the base
        subtree.  Sites are sized east-to-west: a parker's drift scales with
        the distance from its birth (near the base side) back to its site
        times the ratio of its lifetime to its landing window, so each site's
        width depends only on what lies east of it.
        """
        leaf_at: dict[tuple[str, ...], int] = {}
        for v in range(self.n):
            path = self.s.provenance[v]
            if not path or not path[-1].startswith("diag"):
                leaf_at[path] = v

        width_memo: dict[tuple[str, ...], Frac] = {}
        site_w: dict[tuple, Frac] = {}

        def site_factor(key: tuple) -> int:
            if key not in site_spans:
                return 0
            return (30 * site_spans[key] + 8) * self.strip_scale

        def width_of(path: tuple[str, ...], level: int) -> Frac:
            if level == 1:
                return COLSP
            hit = width_memo.get(path)
            if hit is not None:
                return hit
            east = width_of(path + ("base",), level - 1)
            for i in c1p_order(level - 1):  # east to west
                cw = width_of(path + (f"copy{i}",), level - 1)
                f = site_factor((path, i))
                if f:
                    # a parker's drift scales with its sweep spread (up to the
                    # swept copy's width) plus its distance east, times its
                    # lifetime over its landing window
                    site_w[(path, i)] = (east + cw + 4 * COLSP) * f
                    east += site_w[(path, i)] + COLSP
                east += cw
            width_memo[path] = east
            return east

        width_of((), self.k)

        x_of: dict[int, Frac] = {}
        sites: dict[tuple, tuple[Frac, Frac]] = {}
        cursor = [Frac(0)]

        def walk(path: tuple[str, ...], level: int) -> None:
            if level == 1:
                x_of[leaf_at[path]] = cursor[0]
                cursor[0] += COLSP
                return
            for i in reversed(c1p_order(level - 1)):  # west to east
                walk(path + (f"copy{i}",), level - 1)
                w = site_w.get((path, i))
                if w is not None:
                    sites[(path, i)] = (cursor[0], cursor[0] + w)
                    cursor[0] += w + COLSP
            walk(path + ("base",), level - 1)

        walk((), self.k)
        return x_of, sites

    # -- main driver

    def build(self) -> SegmentFamily:
        s = self.s
        n = self.n
        leaves, regular, tilde_diags = [], [], []
        for v in range(n):
            path = s.provenance[v]
            if not path or not path[-1].startswith("diag"):
                leaves.append(v)
            elif len(path) == 1:
                tilde_diags.append(v)
            else:
                regular.append(v)
        for v in leaves + regular:
            if not self.runs[v]:
                raise LayoutError(f"vertex {v} belongs to no probe")

        # sweep targets: the members of the probe this diagonal was built on;
        # their provenance extends the diagonal's copy prefix, while neighbors
        # acquired later (dominating diagonals) do not
        sweep_targets: dict[int, list[int]] = {}
        gap_of: dict[int, int] = {}
        diags_of_node: dict[tuple[str, ...], list[int]] = {}
        for v in regular:
            diags_of_node.setdefault(s.provenance[v][:-2], []).append(v)
        for v in regular:
            prefix = s.provenance[v][:-1]
            sweep_targets[v] = sorted(
                u for u in self.adj[v] if s.provenance[u][: len(prefix)] == prefix
            )
            if not sweep_targets[v]:
                raise LayoutError(f"diagonal {v} has no sweep targets")
            # sweep where all targets still live, as high as possible but
            # below the first duty band
            gap_of[v] = min(
                self.runs[v][0] - 1,
                min(self.runs[u][-1] for u in sweep_targets[v]),
            )
            if gap_of[v] < 0:
                raise LayoutError(f"diagonal {v} has no sweep gap")

        # abstract walk order: an interval per subtree and per parking
        # site, so the classification below can reason about west/east
        # before any columns exist
        order_iv: dict[tuple, tuple[int, int]] = {}
        counter = [0]

        def dry_walk(path: tuple[str, ...], level: int) -> None:
            start = counter[0]
            if level > 1:
                for i in reversed(c1p_order(level - 1)):
                    dry_walk(path + (f"copy{i}",), level - 1)
                    counter[0] += 1
                    order_iv[("site", path, i)] = (counter[0] - 1, counter[0])
                dry_walk(path + ("base",), level - 1)
            counter[0] += 1
            order_iv[("sub", path)] = (start, counter[0])

        dry_walk((), self.k)

        # every diagonal parks just east of the copy subtree of its duty
        # block; bands between its sweep and its duty are safe when owned by
        # a diagonal of a strictly shallower node on its own path (whose
        # site lies east of everything crossing such a band) and free of
        # members parked west of the crosser; otherwise the diagonal must
        # clear westward past the blocks it crosses while they are dead,
        # which needs a fast rate and an exclusive gap
        park_site: dict[int, tuple] = {}
        for v in regular:
            node = s.provenance[v][:-2]
            if "base" in node:
                sigma, x_d = self.duty_site(v)
                park_site[v] = (sigma, x_d)
            else:
                park_site[v] = (node, int(s.provenance[v][-2][4:]))

        regular_set = set(regular)

        def west_of(member: int, v: int) -> bool:
            site_iv = order_iv[("site",) + park_site[member]]
            node_iv = order_iv[("sub", s.provenance[v][:-2])]
            return site_iv[1] <= node_iv[0]

        zoomers: set[int] = set()
        for v in regular:
            node = s.provenance[v][:-2]
            ancestors = {
                a
                for j in range(len(node))
                for a in diags_of_node.get(node[:j], ())
            }
            for q in range(gap_of[v] + 1, self.runs[v][0]):
                probe = s.probes[self.band_at[q]]
                diag_members = probe & regular_set
                if any(west_of(m, v) for m in diag_members) or not (
                    diag_members & ancestors
                ):
                    zoomers.add(v)
                    break

        site_spans: dict[tuple, int] = {}
        for v in regular:
            span = self.runs[v][-1] - gap_of[v] + 2
            key = park_site[v]
            site_spans[key] = max(site_spans.get(key, 1), span)
        x_of, sites = self._assign_columns(site_spans)

        # gap slices stagger births: shallower diagonals are born lower,
        # zoomers last so their clearing dives start above every extension
        by_gap: dict[int, list[int]] = {}
        for v in regular:
            by_gap.setdefault(gap_of[v], []).append(v)
        birth_y: dict[int, Frac] = {}
        for gap_q, vs in by_gap.items():
            # a clearing dive goes first (lowest): it is west of everything
            # before any gap mate is born, provided the mates only sweep
            # columns the diver also crosses or columns east of its start
            vs.sort(key=lambda v: (v not in zoomers, len(s.provenance[v]), v))
            gap_zoomers = [v for v in vs if v in zoomers]
            if len(gap_zoomers) > 1:
                raise LayoutError(f"gap {gap_q} hosts several clearing dives")
            if gap_zoomers:
                z_targets = set(sweep_targets[gap_zoomers[0]])
                for w in vs:
                    if w not in zoomers and not set(sweep_targets[w]) <= z_targets:
                        raise LayoutError(
                            f"gap {gap_q} mixes a dive with foreign sweeps"
                        )
            lo = gap_q * STRIDE + BOX_H
            height = (STRIDE - BOX_H) / 2
            m = len(vs)
            for idx, v in enumerate(vs):
                birth_y[v] = lo + height * Frac(2 * idx + 1, 2 * m + 1)

        # lifespans: through the top zone of the last duty band, extended so
        # every sweep can still cross its targets in its birth gap
        tops: dict[int, Frac] = {}
        for v in leaves + regular:
            tops[v] = self.runs[v][-1] * STRIDE + BOX_H * ZONE_HI + self._mu(v)
        for v in regular:
            if v in zoomers:
                need = birth_y[v] + Frac(1, 50)
            else:
                # targets may live right up to the landing deadline: the box
                # parts below a diagonal band's sweep window are empty
                deadline = self.runs[v][0] * STRIDE + BOX_H * MID_LO
                need = deadline - BOX_H / 20 * (1 + Frac(v + 1, 2 * n + 2))
                if need <= birth_y[v]:
                    need = birth_y[v] + (STRIDE - BOX_H) / 5
            for u in sweep_targets[v]:
                tops[u] = max(tops[u], need + self._mu(u) / 4)

        segs: dict[int, Segment] = {}
        for v in leaves:
            lo = self.runs[v][0] * STRIDE - self._mu(v)
            segs[v] = Segment(x_of[v], lo, x_of[v], tops[v], v)

        rates: dict[int, Frac] = {}
        birth_x: dict[int, Frac] = {}
        sweep_reach: dict[int, Frac] = {}

        def x_at(u: int, y: Frac) -> Frac:
            seg = segs.get(u)
            if seg is not None:
                return seg.ax if seg.ax == seg.bx else seg.x_at(y)
            return birth_x[u] + rates[u] * (y - birth_y[u])

        # deepest first: sweep targets and deeper gap mates are always placed
        for v in sorted(regular, key=lambda v: (-len(s.provenance[v]), v)):
            by = birth_y[v]
            nbrs = sweep_targets[v]
            pad = P0 / (4 * (len(s.provenance[v]) + 1)) * (
                1 + Frac(v + 1, 2 * n + 2)
            )
            site_lo, site_hi = sites[park_site[v]]
            westbound = "base" in s.provenance[v][:-2]
            if westbound:
                # born just east of its targets, sweeping west into its site
                bx = max(x_at(u, by) for u in nbrs) + pad
                birth_x[v] = bx
                lane = site_hi - COLSP * (1 + Frac(v + 1, n + 2)) / 2
                if v in zoomers:
                    # clear every column down to the site while the blocks in
                    # between are dead or unborn
                    deadline = (gap_of[v] + 1) * STRIDE - Frac(3, 50)
                else:
                    deadline = self.runs[v][0] * STRIDE + BOX_H * MID_LO
                if deadline <= by:
                    raise LayoutError(f"no landing window for diagonal {v}")
                bound = (lane - bx) / (deadline - by)
                for u in nbrs:
                    yu = min(tops[u], deadline)
                    r = (x_at(u, yu) - pad - bx) / (yu - by)
                    bound = r if r < bound else bound
                for w in by_gap[gap_of[v]]:
                    if (
                        w == v or w in nbrs or birth_y[w] <= by
                        or w not in rates or "base" not in s.provenance[w][:-2]
                    ):
                        continue
                    for r in (
                        (sweep_reach[w] - pad - bx) / (birth_y[w] - by),
                        rates[w],
                    ):
                        bound = r if r < bound else bound
                rates[v] = bound
                sweep_reach[v] = min(x_at(u, by) for u in nbrs) - 2 * pad
                x_end = bx + rates[v] * (tops[v] - by)
                if x_end < site_lo:
                    raise LayoutError(f"diagonal {v} overshoots its parking site")
            else:
                # born just west of its targets, sweeping east into its site
                bx = min(x_at(u, by) for u in nbrs) - pad
                birth_x[v] = bx
                deadline = self.runs[v][0] * STRIDE + BOX_H * MID_LO
                lane = site_lo + COLSP * (1 + Frac(v + 1, n + 2)) / 2
                bound = (lane - bx) / (deadline - by)
                for u in nbrs:
                    yu = min(tops[u], deadline)
                    r = (x_at(u, yu) + pad - bx) / (yu - by)
                    bound = r if r > bound else bound
                for w in by_gap[gap_of[v]]:
                    if (
                        w == v or w in nbrs or birth_y[w] <= by
                        or w not in rates or "base" in s.provenance[w][:-2]
                    ):
                        continue
                    for r in (
                        (sweep_reach[w] + pad - bx) / (birth_y[w] - by),
                        rates[w],
                    ):
                        bound = r if r > bound else bound
                rates[v] = bound
                sweep_reach[v] = max(x_at(u, by) for u in nbrs) + 2 * pad
                x_end = bx + rates[v] * (tops[v] - by)
                if x_end > site_hi:
                    raise LayoutError(f"diagonal {v} overshoots its parking site")
            segs[v] = Segment(bx, by, x_end, tops[v], v)

        # tilde diagonals: short eastward sweeps inside their band's window
        for v in tilde_diags:
            t = int(s.provenance[v][0][4:])
            box = _box(self.pos_k[t])
            m_lo, m_hi = _mid(box)
            h = m_hi - m_lo
            y0 = m_lo + h / 4 + h * Frac(v + 1, 4 * (n + 2))
            y1 = y0 + h / 8
            pad = P0 / 16 * (1 + Frac(v + 1, 2 * n + 2))
            nbrs = sorted(self.adj[v])
            x0 = min(min(x_at(u, y0), x_at(u, y1)) for u in nbrs) - pad
            x1 = max(max(x_at(u, y0), x_at(u, y1)) for u in nbrs) + pad
            segs[v] = Segment(x0, y0, x1, y1, v)

        segments = [segs[v] for v in range(n)]
        probes = tuple(frozenset(p) for p in s.probes)
        family = SegmentFamily(
            segments=segments,
            rects=self._derive_rects(segments),
            probe_members=probes,
            k=self.k,
            tilde=s.tilde,
            n_vertices=n,
        )
        validate_family(family, s.graph)
        return family

    def _derive_rects(self, segments: list[Segment]) -> list[ProbeRect]:
        rects = []
        for t, probe in enumerate(self.s.probes):
            q = self.pos_k[t]
            z_lo, z_hi = _zone(_box(q))
            lo = hi = None
            for m in probe:
                seg = segments[m]
                for y in (z_lo, z_hi):
                    xm = seg.ax if seg.ax == seg.bx else seg.x_at(y)
                    lo = xm if lo is None or xm < lo else lo
                    hi = xm if hi is None or xm > hi else hi
            west_gap = east_gap = COLSP
            for v, seg in enumerate(segments):
                if v in probe or seg.yhi <= z_lo or seg.ylo >= z_hi:
                    continue
                ya, yb = max(seg.ylo, z_lo), min(seg.yhi, z_hi)
                if seg.ax == seg.bx:
                    x_min = x_max = seg.ax
                else:
                    xa, xb = seg.x_at(ya), seg.x_at(yb)
                    x_min, x_max = min(xa, xb), max(xa, xb)
                if x_max < lo:
                    west_gap = min(west_gap, lo - x_max)
                elif x_min > hi:
                    east_gap = min(east_gap, x_min - hi)
                else:
                    raise LayoutError(
                        f"segment {v} invades the rectangle zone of probe {t}"
                    )
            rects.append(ProbeRect(lo - west_gap / 2, z_lo, hi + east_gap / 2, z_hi, t))
        return rects


def build_representation(s: Structure, level_cap: int = GEOMETRY_LEVEL_CAP) -> SegmentFamily:
    """Realize the structure as a family of segments, certified on the way out.

    Parking strips are sized heuristically; if a diagonal overshoots its
    strip the layout retries deterministically with wider strips.
    """
    if s.k > level_cap:
        raise LevelTooLargeForGeometry(
            f"level {s.k} exceeds the geometry cap of {level_cap}"
        )
    scale, last = 1, None
    for _ in range(8):
        try:
            return _Layout(s, strip_scale=scale).build()
        except LayoutError as exc:
            if "overshoots" not in str(exc):
                raise
            last = exc
            scale *= 4
    raise last


def intersection_graph(family: SegmentFamily) -> Graph:
    """One vertex per segment (by list index), edges from exact pairwise tests."""
    segs = family.segments
    edges = []
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            if segments_intersect(segs[i], segs[j]):
                edges.append((i, j))
    return Graph(len(segs), edges)


def _general_position_errors(segments: list[Segment]) -> list[str]:
    errors = []
    endpoints: dict[tuple[Frac, Frac], int] = {}
    for i, s in enumerate(segments):
        for p in ((s.ax, s.ay), (s.bx, s.by)):
            if p in endpoints:
                errors.append(f"segments {endpoints[p]} and {i} share endpoint")
            endpoints[p] = i
    seen: dict[tuple[Frac, Frac], tuple[int, int]] = {}
    for i in range(len(segments)):
        for j in range(i + 1, len(segments)):
            if not segments_intersect(segments[i], segments[j]):
                continue
            if not proper_crossing(segments[i], segments[j]):
                errors.append(f"non-transversal contact of segments {i} and {j}")
                continue
            pt = crossing_point(segments[i], segments[j])
            if pt in seen:
                errors.append(f"three segments concurrent at {pt}")
            seen[pt] = (i, j)
    return errors


def _expected_vertex(seg: Segment, class_map=None) -> int:
    if class_map is None:
        return seg.label
    return class_map[seg.label][seg.copy - 1 if seg.copy else 0]


def validate_family(family: SegmentFamily, expected: Graph, class_map=None) -> None:
    """Exact check of edges, general position, and rectangles; raises LayoutError."""
    segs = family.segments
    got = set()
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            if segments_intersect(segs[i], segs[j]):
                u = _expected_vertex(segs[i], class_map)
                v = _expected_vertex(segs[j], class_map)
                if u == v:
                    raise LayoutError(f"two copies of vertex {segs[i].label} intersect")
                got.add((min(u, v), max(u, v)))
    if got != set(expected.edges):
        missing = sorted(set(expected.edges) - got)[:5]
        extra = sorted(got - set(expected.edges))[:5]
        raise LayoutError(f"edge mismatch: missing={missing} extra={extra}")
    errors = _general_position_errors(segs)
    if errors:
        raise LayoutError("; ".join(errors[:5]))
    for rect in family.rects:
        members = family.probe_members[rect.probe]
        for i, seg in enumerate(segs):
            inside = seg_intersects_open_rect(seg, rect)
            if inside != (seg.label in members):
                raise LayoutError(
                    f"rectangle {rect.probe}: segment {i} "
                    f"{'crosses' if inside else 'misses'} it unexpectedly"
                )
            for p in ((seg.ax, seg.ay), (seg.bx, seg.by)):
                if point_in_closed_rect(*p, rect):
                    raise LayoutError(
                        f"rectangle {rect.probe} contains an endpoint of segment {i}"
                    )


def certify_representation(
    family: SegmentFamily, expected: Graph, class_map=None
) -> Certificate:
    """Pass iff the family realizes ``expected`` exactly under its labeling.

    Checks the full intersection graph, every probe rectangle's crossing set,
    endpoint freeness, and general position (no shared endpoints, transversal
    crossings only, no three segments concurrent).  For replicated families
    pass the blow-up ``class_map`` so (label, copy) maps to expected vertices.
    """
    start = time.perf_counter()
    try:
        validate_family(family, expected, class_map=class_map)
    except LayoutError as exc:
        return Certificate("representation", False, witness=str(exc), millis=_timed(start))
    return Certificate(
        "representation", True,
        bounds={"segments": len(family.segments), "rects": len(family.rects)},
        millis=_timed(start),
    )


def replicate(family: SegmentFamily, weights, max_halvings: int = 200) -> SegmentFamily:
    """Replace each segment by w(v) parallel copies lying very close together.

    The horizontal offset starts small and is halved until an exact check
    confirms: copies of one vertex are pairwise disjoint, copies of adjacent
    vertices cross transversally, copies of non-adjacent vertices are
    disjoint, and every probe rectangle is crossed by exactly the copies of
    its members with no endpoint inside.
    """
    weights = tuple(weights)
    if family.replicated:
        raise ValueError("family is already replicated")
    if len(weights) != family.n_vertices:
        raise ValueError("weight map size does not match the family")
    base = family.segments
    base_pairs = set()
    for i in range(len(base)):
        for j in range(i + 1, len(base)):
            if segments_intersect(base[i], base[j]):
                a, b = base[i].label, base[j].label
                base_pairs.add((min(a, b), max(a, b)))

    eps = STRIDE / 1024
    for _ in range(max_halvings):
        segs = [
            replace(seg, ax=seg.ax + eps * c, bx=seg.bx + eps * c, copy=c)
            for seg in base
            for c in range(1, weights[seg.label] + 1)
        ]
        if _replication_ok(segs, base_pairs, family):
            return SegmentFamily(
                segments=segs,
                rects=list(family.rects),
                probe_members=family.probe_members,
                k=family.k,
                tilde=family.tilde,
                n_vertices=family.n_vertices,
                replicated=True,
            )
        eps /= 2
    raise ReplicationCollision("no replication offset preserved the family")


def _replication_ok(segs: list[Segment], base_pairs: set, family: SegmentFamily) -> bool:
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            s1, s2 = segs[i], segs[j]
            meet = segments_intersect(s1, s2)
            want = s1.label != s2.label and (
                (min(s1.label, s2.label), max(s1.label, s2.label)) in base_pairs
            )
            if meet != want or (meet and not proper_crossing(s1, s2)):
                return False
    for rect in family.rects:
        members = family.probe_members[rect.probe]
        for seg in segs:
            if seg_intersects_open_rect(seg, rect) != (seg.label in members):
                return False
            for p in ((seg.ax, seg.ay), (seg.bx, seg.by)):
                if point_in_closed_rect(*p, rect):
                    return False
    return True


def family_to_json(family: SegmentFamily) -> str:
    frac = lambda q: f"{q.numerator}/{q.denominator}"
    doc = {
        "segments": [
            {
                "ax": frac(s.ax), "ay": frac(s.ay),
                "bx": frac(s.bx), "by": frac(s.by),
                "label": s.label, "copy": s.copy,
            }
            for s in family.segments
        ],
        "rectangles": [
            {
                "x0": frac(r.x0), "y0": frac(r.y0),
                "x1": frac(r.x1), "y1": frac(r.y1),
                "probe": r.probe,
            }
            for r in family.rects
        ],
    }
    return json.dumps(doc, indent=1)


def normalized_integer_family(family: SegmentFamily) -> SegmentFamily:
    """Scale all coordinates by the lcm of the denominators to plain integers."""
    dens = {
        q.denominator
        for s in family.segments
        for q in (s.ax, s.ay, s.bx, s.by)
    }
    dens.update(
        q.denominator for r in family.rects for q in (r.x0, r.y0, r.x1, r.y1)
    )
    scale = Frac(lcm(*dens)) if dens else Frac(1)
    return SegmentFamily(
        segments=[
            replace(s, ax=s.ax * scale, ay=s.ay * scale, bx=s.bx * scale, by=s.by * scale)
            for s in family.segments
        ],
        rects=[
            ProbeRect(r.x0 * scale, r.y0 * scale, r.x1 * scale, r.y1 * scale, r.probe)
            for r in family.rects
        ],
        probe_members=family.probe_members,
        k=family.k,
        tilde=family.tilde,
        n_vertices=family.n_vertices,
        replicated=family.replicated,
    )


_PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
]


def _provenance_color(path: tuple[str, ...]) -> str:
    if not path:
        return _PALETTE[0]
    head = path[0]
    if head.startswith("diag"):
        return _PALETTE[1]
    if head == "base":
        return _PALETTE[2]
    return _PALETTE[3 + int(head[4:]) % (len(_PALETTE) - 3)]


def export_svg(family: SegmentFamily, provenance=None, width: int = 900) -> str:
    """Deterministic SVG (one line per segment, translucent probe boxes)."""
    xs = [float(q) for s in family.segments for q in (s.ax, s.bx)]
    ys = [float(q) for s in family.segments for q in (s.ay, s.by)]
    for r in family.rects:
        xs.extend((float(r.x0), float(r.x1)))
        ys.extend((float(r.y0), float(r.y1)))
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    spanx = (x1 - x0) or 1.0
    spany = (y1 - y0) or 1.0
    scale = width / spanx
    height = max(1, round(spany * scale))

    def tx(x: float) -> float:
        return round((x - x0) * scale, 3)

    def ty(y: float) -> float:
        return round((y1 - y) * scale, 3)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for r in family.rects:
        rx, ry = tx(float(r.x0)), ty(float(r.y1))
        rw = max(tx(float(r.x1)) - rx, 0.5)
        rh = max(ty(float(r.y0)) - ry, 0.5)
        out.append(
            f'<rect x="{rx}" y="{ry}" width="{rw}" height="{rh}" '
            f'fill="#ffcc00" fill-opacity="0.15" stroke="#aa8800" stroke-width="0.4"/>'
        )
    for s in family.segments:
        color = (
            _provenance_color(provenance[s.label])
            if provenance is not None
            else _PALETTE[0]
        )
        out.append(
            f'<line x1="{tx(float(s.ax))}" y1="{ty(float(s.ay))}" '
            f'x2="{tx(float(s.bx))}" y2="{ty(float(s.by))}" '
            f'stroke="{color}" stroke-width="0.8"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
