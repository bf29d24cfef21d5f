"""Naive brute-force reference implementations.

These certify the derived constants used in the tests and cross-check the
fast algorithms on small instances.  They deliberately share no search
logic with the main modules: plain breadth-first closure, no pruning, and
one global dense linear solve for the shear gauge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .abelian import Elt
from .errors import BudgetExceeded, SingularSystem
from .monoid_core import FineMonoid, default_weighting as _weights
from .qlin import qmat, qnullspace, qsolve, qvec


@dataclass(frozen=True)
class EnumerationBudget:
    weight_bound: int
    element_cap: int = 100000

    def __post_init__(self):
        if self.weight_bound <= 0 or self.element_cap <= 0:
            raise ValueError("budget entries must be positive")


def _weight_map(m: FineMonoid):
    values = _weights(m)
    from .monoid_core import weighting_functional

    lam = weighting_functional(m, values)

    def weight(g: Elt) -> Fraction:
        return sum((lam[i] * g[0][i] for i in range(len(lam))), Fraction(0))

    return values, weight


def enumerate_monoid(m: FineMonoid, budget: EnumerationBudget) -> list[Elt]:
    """Every element with weight <= bound, by repeated generator addition."""
    values, weight = _weight_map(m)
    for g, v in zip(m.generators, values):
        if v == 0 and not m.gp.is_zero(g):
            raise ValueError("enumerate_monoid requires a sharp monoid")
    elements = {m.gp.zero()}
    changed = True
    while changed:
        changed = False
        for e in list(elements):
            for g in m.generators:
                cand = m.gp.add(e, g)
                if cand in elements:
                    continue
                if weight(cand) <= budget.weight_bound:
                    elements.add(cand)
                    changed = True
                    if len(elements) > budget.element_cap:
                        raise BudgetExceeded("element cap exceeded")
    return sorted(elements)


def brute_membership(m: FineMonoid, g: Elt, budget: EnumerationBudget) -> bool:
    _, weight = _weight_map(m)
    w = weight(g)
    if w > budget.weight_bound:
        raise BudgetExceeded("element weight exceeds the budget")
    return g in enumerate_monoid(m, budget)


def _closure_in_ball(m: FineMonoid, gens, ball_set) -> set[Elt]:
    """Closure of {0} under adding gens, never leaving the ball.  Complete for
    the submonoid intersected with the ball (partial sums divide the total)."""
    elems = {m.gp.zero()}
    changed = True
    while changed:
        changed = False
        for e in list(elems):
            for g in gens:
                cand = m.gp.add(e, g)
                if cand not in elems and cand in ball_set:
                    elems.add(cand)
                    changed = True
    return elems


def brute_faces(m: FineMonoid, budget: EnumerationBudget) -> list[frozenset[Elt]]:
    """Faces as element sets inside the enumerated ball.

    Candidates are the submonoids generated by generator subsets; the face
    axiom (a+b in F implies a, b in F) is tested on every pair of ball
    elements whose sum stays in the ball.  The verdict is certified only
    within the budget: a violation whose witnessing sum has weight above the
    bound goes unseen (e.g. generators 2 and 3 of N need weight 6 to separate
    the candidate <2>), so censuses must be compared at a sufficient bound.
    """
    ball = enumerate_monoid(m, budget)
    ball_set = set(ball)
    n = len(m.generators)
    found: list[frozenset[Elt]] = []
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            f_elems = _closure_in_ball(m, [m.generators[i] for i in subset], ball_set)
            ok = True
            for a in ball:
                for b in ball:
                    s = m.gp.add(a, b)
                    if s not in ball_set:
                        continue
                    if s in f_elems and not (a in f_elems and b in f_elems):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                fs = frozenset(f_elems)
                if fs not in found:
                    found.append(fs)
    return found


def brute_h_plus(m: FineMonoid, g: Elt, budget: EnumerationBudget) -> int:
    """Exhaustive min over {h(y) : y in ball, y - g in M}."""
    _, weight = _weight_map(m)
    wg = weight(g)
    big = EnumerationBudget(
        budget.weight_bound + max(0, -int(wg)), budget.element_cap
    )
    ball_set = set(enumerate_monoid(m, big))
    best = None
    for y in ball_set:
        if weight(y) > budget.weight_bound:
            continue
        diff = m.gp.sub(y, g)
        if diff in ball_set:
            wy = int(weight(y))
            if best is None or wy < best:
                best = wy
    if best is None:
        raise BudgetExceeded("no decomposition found within the budget")
    return best


def brute_shear_order(e, k: int):
    """Solve the full order-<= k shear system at once (all equations, all i),
    without the single-index selection trick.  Returns {m: B_m}."""
    from .log_connection import smat_coefficient
    from .monoid_core import _sharp_ball

    m = e.monoid
    w = e.weighting
    emb = e.embedding
    n = e.rank
    ball = _sharp_ball(m, w.values, k)
    keys = sorted((key for key in ball if not m.gp.is_zero(key)), key=lambda key: (ball[key], key))
    index = {key: idx for idx, key in enumerate(keys)}
    nun = len(keys) * n * n
    a0 = [smat_coefficient(e.matrices[i], m.gp.zero()) for i in range(emb.r)]
    acoeff = [{key: smat_coefficient(e.matrices[i], key) for key in keys} for i in range(emb.r)]

    rows = []
    rhs = []
    for key in keys:
        coords = emb.coords(key)
        for i in range(emb.r):
            for r_i in range(n):
                for c_i in range(n):
                    row = [Fraction(0)] * nun
                    base = index[key] * n * n
                    for t in range(n):
                        row[base + t * n + c_i] += a0[i][r_i][t]
                        row[base + r_i * n + t] -= a0[i][t][c_i]
                    row[base + r_i * n + c_i] += Fraction(coords[i])
                    target = Fraction(0)
                    # convolution terms: A^i_{m'} B_{m''} with m', m'' nonzero
                    for kp in keys:
                        rest = m.gp.sub(key, kp)
                        if m.gp.is_zero(rest):
                            # m'' = 0: B_0 = I contributes A^i_{m} directly
                            target -= acoeff[i][kp][r_i][c_i]
                            continue
                        if rest not in index:
                            continue
                        amat = acoeff[i][kp]
                        rbase = index[rest] * n * n
                        for t in range(n):
                            row[rbase + t * n + c_i] += amat[r_i][t]
                    rows.append(row)
                    rhs.append(target)
    mat = qmat(rows)
    sol = qsolve(mat, qvec(rhs))
    if sol is None:
        raise SingularSystem("full shear system inconsistent")
    if len(qnullspace(mat)) > 0:
        raise SingularSystem("full shear system underdetermined")
    out = {}
    for key in keys:
        base = index[key] * n * n
        out[key] = tuple(
            tuple(sol[base + i * n + j] for j in range(n)) for i in range(n)
        )
    return out
