"""Exact LP certification that a weighting minimizes the independence ratio.

The program, over nonnegative vertex weights normalized to total 1:

    minimize t  subject to  sum(w) = 1,  w(I) <= t for every maximal
    independent set I,  w >= 0.

Restricting constraints to maximal independent sets is enough because w >= 0
makes w(J) <= w(I) whenever J is contained in I.  The optimum equals the least
achievable ratio (max independent-set weight) / (total weight).

The solver runs a cutting-plane loop around a dense exact-rational simplex
with Bland's rule, then certifies the result against the *full* enumerated
constraint set together with an exact dual certificate (a distribution over
maximal independent sets covering every vertex by at least the optimum), so
the final verdict never trusts the pivoting path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from .graphs import Graph, bits
from .oracle import Certificate, _timed

DEFAULT_ENUMERATION_CAP = 30


class TooLargeForEnumeration(ValueError):
    pass


def enumerate_maximal_independent_sets(
    g: Graph, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[frozenset[int]]:
    """All maximal independent sets, each exactly once (pivoting recursion).

    This is Bron-Kerbosch run on the complement: "adjacency" below means
    non-adjacency in g, so maximal cliques of that relation are exactly the
    maximal independent sets of g.
    """
    if g.n > cap:
        raise TooLargeForEnumeration(f"{g.n} vertices exceeds enumeration cap {cap}")
    if g.n == 0:
        return [frozenset()]
    full = (1 << g.n) - 1
    masks = g.masks()
    co = [full & ~(masks[v] | (1 << v)) for v in range(g.n)]
    out: list[frozenset[int]] = []

    def expand(r: int, p: int, x: int) -> None:
        if p == 0 and x == 0:
            out.append(frozenset(bits(r)))
            return
        pivot_pool = p | x
        pivot = max(bits(pivot_pool), key=lambda v: bin(co[v] & p).count("1"))
        for v in bits(p & ~co[pivot]):
            expand(r | (1 << v), p & co[v], x & co[v])
            p &= ~(1 << v)
            x |= 1 << v

    expand(0, full, 0)
    return out


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tab[row][col]
    tab[row] = [x / piv for x in tab[row]]
    for r, line in enumerate(tab):
        if r != row and line[col] != 0:
            f = line[col]
            tab[r] = [a - f * b for a, b in zip(line, tab[row])]
    basis[row] = col


def _bland_solve(tab: list[list[Fraction]], basis: list[int], ncols: int) -> None:
    """Run primal simplex (maximization) to optimality with Bland's rule."""
    while True:
        obj = tab[-1]
        col = next((j for j in range(ncols) if obj[j] < 0), None)
        if col is None:
            return
        best_row, best_ratio = None, None
        for r in range(len(tab) - 1):
            a = tab[r][col]
            if a > 0:
                ratio = tab[r][-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[r] < basis[best_row])
                ):
                    best_row, best_ratio = r, ratio
        if best_row is None:
            raise ArithmeticError("LP is unbounded")
        _pivot(tab, basis, best_row, col)


def solve_lp_max(
    c: list[Fraction],
    a_ub: list[list[Fraction]],
    b_ub: list[Fraction],
    a_eq: list[list[Fraction]],
    b_eq: list[Fraction],
) -> tuple[Fraction, list[Fraction]]:
    """maximize c.x  s.t.  a_ub x <= b_ub, a_eq x = b_eq, x >= 0 (all b >= 0)."""
    n = len(c)
    if any(b < 0 for b in b_ub) or any(b < 0 for b in b_eq):
        raise ValueError("right-hand sides must be nonnegative")
    n_ub, n_eq = len(a_ub), len(a_eq)
    n_slack = n_ub
    n_art = n_eq
    width = n + n_slack + n_art + 1
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    for i, row in enumerate(a_ub):
        line = [Fraction(x) for x in row] + [Fraction(0)] * (n_slack + n_art + 1)
        line[n + i] = Fraction(1)
        line[-1] = Fraction(b_ub[i])
        tab.append(line)
        basis.append(n + i)
    for i, row in enumerate(a_eq):
        line = [Fraction(x) for x in row] + [Fraction(0)] * (n_slack + n_art + 1)
        line[n + n_slack + i] = Fraction(1)
        line[-1] = Fraction(b_eq[i])
        tab.append(line)
        basis.append(n + n_slack + i)

    if n_art:
        # phase 1: maximize -sum(artificials)
        obj = [Fraction(0)] * width
        for i in range(n_eq):
            row = tab[n_ub + i]
            obj = [a - b for a, b in zip(obj, row)]
            obj[n + n_slack + i] += 1
        tab.append(obj)
        _bland_solve(tab, basis, n + n_slack)
        if tab[-1][-1] != 0:
            raise ArithmeticError("LP is infeasible")
        tab.pop()
        # drive remaining artificials out of the basis where possible
        for r in range(len(basis)):
            if basis[r] >= n + n_slack:
                col = next(
                    (j for j in range(n + n_slack) if tab[r][j] != 0), None
                )
                if col is not None:
                    _pivot(tab, basis, r, col)

    obj = [Fraction(0)] * width
    for j in range(n):
        obj[j] = -Fraction(c[j])
    tab.append(obj)
    for r, b in enumerate(basis):
        if b < n and tab[-1][b] != 0:
            f = tab[-1][b]
            tab[-1] = [a - f * x for a, x in zip(tab[-1], tab[r])]
    _bland_solve(tab, basis, n + n_slack)
    x = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < n:
            x[b] = tab[r][-1]
    return tab[-1][-1], x


@dataclass(frozen=True)
class LpResult:
    """Verified optimum of the min-ratio LP with an exact dual certificate."""

    ratio: Fraction
    weighting: tuple[Fraction, ...]
    tight_sets: tuple[frozenset[int], ...]
    dual: tuple[tuple[frozenset[int], Fraction], ...]
    dual_objective: Fraction

    def to_json(self) -> dict:
        frac = lambda q: f"{q.numerator}/{q.denominator}"
        return {
            "ratio": frac(self.ratio),
            "weighting": [frac(w) for w in self.weighting],
            "tight_sets": [sorted(s) for s in self.tight_sets],
            "dual": [[sorted(s), frac(lam)] for s, lam in self.dual],
            "dual_objective": frac(self.dual_objective),
        }


def _solve_restricted_primal(
    n: int, active: list[frozenset[int]]
) -> tuple[Fraction, list[Fraction]]:
    """min t s.t. sum w = 1, w(I) <= t for I in active, w >= 0."""
    nv = n + 1  # w_0..w_{n-1}, t
    c = [Fraction(0)] * n + [Fraction(-1)]  # maximize -t
    a_ub = []
    for iset in active:
        row = [Fraction(0)] * nv
        for v in iset:
            row[v] = Fraction(1)
        row[n] = Fraction(-1)
        a_ub.append(row)
    b_ub = [Fraction(0)] * len(active)
    a_eq = [[Fraction(1)] * n + [Fraction(0)]]
    b_eq = [Fraction(1)]
    value, x = solve_lp_max(c, a_ub, b_ub, a_eq, b_eq)
    return -value, x[:n]


def _solve_restricted_dual(
    n: int, active: list[frozenset[int]]
) -> tuple[Fraction, list[Fraction]]:
    """max y s.t. sum lambda = 1, y <= sum_{I contains v} lambda_I for all v, lambda, y >= 0."""
    m = len(active)
    nv = m + 1  # lambda_I, y
    c = [Fraction(0)] * m + [Fraction(1)]
    a_ub = []
    for v in range(n):
        row = [Fraction(0)] * nv
        for i, iset in enumerate(active):
            if v in iset:
                row[i] = Fraction(-1)
        row[m] = Fraction(1)
        a_ub.append(row)
    b_ub = [Fraction(0)] * n
    a_eq = [[Fraction(1)] * m + [Fraction(0)]]
    b_eq = [Fraction(1)]
    value, x = solve_lp_max(c, a_ub, b_ub, a_eq, b_eq)
    return value, x[:m]


def optimal_weighting(g: Graph, cap: int = DEFAULT_ENUMERATION_CAP) -> LpResult:
    """Least achievable independence ratio over normalized weightings, certified."""
    if g.n == 0:
        raise ValueError("graph must have at least one vertex")
    all_sets = enumerate_maximal_independent_sets(g, cap=cap)
    # cutting-plane loop: grow the active set until nothing is violated
    active = [all_sets[0]]
    while True:
        ratio, w = _solve_restricted_primal(g.n, active)
        worst, worst_val = None, ratio
        for iset in all_sets:
            val = sum(w[v] for v in iset)
            if val > worst_val:
                worst, worst_val = iset, val
        if worst is None:
            break
        active.append(worst)
    dual_obj, lam = _solve_restricted_dual(g.n, active)

    # exact certification, independent of the pivoting path
    if any(x < 0 for x in w) or sum(w) != 1:
        raise AssertionError("primal solution is not a normalized weighting")
    if any(sum(w[v] for v in iset) > ratio for iset in all_sets):
        raise AssertionError("primal solution violates an independent-set constraint")
    if any(l < 0 for l in lam) or sum(lam) != 1:
        raise AssertionError("dual multipliers are not a distribution")
    coverage = [Fraction(0)] * g.n
    for iset, l in zip(active, lam):
        for v in iset:
            coverage[v] += l
    if any(cov < dual_obj for cov in coverage):
        raise AssertionError("dual certificate does not cover every vertex")
    if dual_obj != ratio:
        raise AssertionError(
            f"strong duality gap: primal {ratio} vs dual {dual_obj}"
        )

    tight = tuple(s for s in all_sets if sum(w[v] for v in s) == ratio)
    dual_support = tuple(
        (iset, l) for iset, l in zip(active, lam) if l != 0
    )
    return LpResult(
        ratio=ratio,
        weighting=tuple(w),
        tight_sets=tight,
        dual=dual_support,
        dual_objective=dual_obj,
    )


def weighting_ratio(g: Graph, weights, cap: int = DEFAULT_ENUMERATION_CAP) -> Fraction:
    """Exact ratio achieved by an integer weighting, via full enumeration."""
    weights = tuple(weights)
    total = sum(weights)
    best = max(
        sum(weights[v] for v in iset)
        for iset in enumerate_maximal_independent_sets(g, cap=cap)
    )
    return Fraction(best, total)


def verify_weighting_optimal(g: Graph, weights, cap: int = DEFAULT_ENUMERATION_CAP) -> Certificate:
    """Pass iff the given weighting achieves the LP-optimal ratio exactly."""
    start = time.perf_counter()
    achieved = weighting_ratio(g, weights, cap=cap)
    best = optimal_weighting(g, cap=cap)
    ok = achieved == best.ratio
    return Certificate(
        "weighting_optimal", ok,
        witness=None if ok else {"achieved": achieved, "optimal": best.ratio},
        bounds={"achieved": achieved, "optimal": best.ratio},
        millis=_timed(start),
    )
