"""Exact rational cone computations.

Feasibility questions (cone membership, interior dual vectors, face
supports) are solved by a phase-1 simplex with Bland's rule over
Fractions, so every answer is a certificate.  Hilbert bases are computed
for pointed cones of rank <= 3 by fan triangulation plus fundamental
parallelepiped enumeration.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

from .qlin import QVector, qmat, qrank, qsolve, qvec


def simplex_feasible(
    a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> Optional[list[Fraction]]:
    """Find x >= 0 with a*x = b, or None.  Exact phase-1 simplex, Bland's rule."""
    m = len(a)
    n = len(a[0]) if m else 0
    if m == 0:
        return [Fraction(0)] * n
    rows = [[Fraction(x) for x in row] for row in a]
    rhs = [Fraction(x) for x in b]
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -rhs[i]
    total = n + m
    tab = [
        rows[i]
        + [Fraction(1) if j == i else Fraction(0) for j in range(m)]
        + [rhs[i]]
        for i in range(m)
    ]
    basis = [n + i for i in range(m)]
    # phase-1 objective: minimize the sum of artificials
    cost = [Fraction(0)] * (total + 1)
    for i in range(m):
        for j in range(total + 1):
            cost[j] += tab[i][j]
    while True:
        enter = None
        for j in range(n):  # Bland: first original variable with positive reduced cost
            if cost[j] > 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][total] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            break
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        f = cost[enter]
        cost = [x - f * y for x, y in zip(cost, tab[leave])]
        basis[leave] = enter
    if cost[total] != 0:
        return None
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][total]
        elif tab[i][total] != 0:
            return None
    return x


def cone_member(rays: Sequence[QVector], target: Sequence[Fraction]) -> Optional[list[Fraction]]:
    """Nonnegative rational coefficients expressing target in cone(rays), or None."""
    target = qvec(target)
    if not rays:
        return [] if all(x == 0 for x in target) else None
    d = len(target)
    a = [[rays[j][i] for j in range(len(rays))] for i in range(d)]
    return simplex_feasible(a, list(target))


def support_functional(
    vectors: Sequence[QVector],
    zero_set: Sequence[int],
    positive_set: Sequence[int],
    dim: int,
) -> Optional[QVector]:
    """Rational lam in Q^dim with lam*v = 0 on zero_set and lam*v >= 1 on positive_set."""
    npos = len(positive_set)
    a: list[list[Fraction]] = []
    b: list[Fraction] = []
    for idx in zero_set:
        v = vectors[idx]
        a.append([Fraction(x) for x in v] + [Fraction(-x) for x in v] + [Fraction(0)] * npos)
        b.append(Fraction(0))
    for k, idx in enumerate(positive_set):
        v = vectors[idx]
        row = [Fraction(x) for x in v] + [Fraction(-x) for x in v] + [Fraction(0)] * npos
        row[2 * dim + k] = Fraction(-1)
        a.append(row)
        b.append(Fraction(1))
    if not a:
        return tuple(Fraction(0) for _ in range(dim))
    sol = simplex_feasible(a, b)
    if sol is None:
        return None
    return tuple(sol[i] - sol[dim + i] for i in range(dim))


def lineality_indices(rays: Sequence[QVector]) -> set[int]:
    """Indices j with -rays[j] in cone(rays)."""
    out = set()
    for j, v in enumerate(rays):
        if all(x == 0 for x in v):
            out.add(j)
        elif cone_member(rays, tuple(-x for x in v)) is not None:
            out.add(j)
    return out


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    if g == 0:
        return tuple(v)
    return tuple(x // g for x in v)


def integer_ray(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Primitive integer vector on the ray through v."""
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    return _primitive([int(x * den) for x in v])


def extreme_rays(rays: Sequence[QVector]) -> list[QVector]:
    """Inclusion-minimal generating subset of a pointed cone, primitive, deduplicated."""
    prim: list[QVector] = []
    for v in rays:
        if all(x == 0 for x in v):
            continue
        pv = qvec(integer_ray(v))
        if pv not in prim:
            prim.append(pv)
    out = []
    for j, v in enumerate(prim):
        others = [w for k, w in enumerate(prim) if k != j]
        if cone_member(others, v) is None:
            out.append(v)
    return out


def _span_basis(rays: Sequence[QVector]) -> list[QVector]:
    basis: list[QVector] = []
    for v in rays:
        cand = basis + [v]
        if qrank(qmat(cand)) == len(cand):
            basis.append(v)
    return basis


def _coords_in(basis: list[QVector], v: QVector) -> QVector:
    a = qmat([[basis[j][i] for j in range(len(basis))] for i in range(len(v))])
    sol = qsolve(a, v)
    if sol is None:
        raise ValueError("vector outside span")
    return sol


def _angular_order(points: list[QVector]) -> list[int]:
    """Order indices of planar points (convex position) counterclockwise."""
    k = len(points)
    cx = sum((p[0] for p in points), Fraction(0)) / k
    cy = sum((p[1] for p in points), Fraction(0)) / k
    rel = [(p[0] - cx, p[1] - cy) for p in points]

    def half(p):
        return 0 if (p[1] > 0 or (p[1] == 0 and p[0] > 0)) else 1

    import functools

    def cmp(i, j):
        a, b = rel[i], rel[j]
        ha, hb = half(a), half(b)
        if ha != hb:
            return -1 if ha < hb else 1
        cr = a[0] * b[1] - a[1] * b[0]
        if cr > 0:
            return -1
        if cr < 0:
            return 1
        return 0

    return sorted(range(k), key=functools.cmp_to_key(cmp))


def _triangulate(ext: list[tuple[int, ...]], rank: int) -> list[list[tuple[int, ...]]]:
    """Split a pointed cone with extreme rays `ext` (rank <= 3) into simplicial cones."""
    if len(ext) <= rank:
        return [ext]
    # rank 3 with >= 4 extreme rays: cut by a positive functional, sort the polygon
    qext = [qvec(v) for v in ext]
    lam = support_functional(qext, [], list(range(len(qext))), len(ext[0]))
    if lam is None:
        raise ValueError("cone is not pointed")
    cut = []
    for v in qext:
        s = sum((lam[i] * v[i] for i in range(len(v))), Fraction(0))
        cut.append(tuple(x / s for x in v))
    span = _span_basis(qext)
    plane_coords = [_coords_in(span, p) for p in cut]
    # drop one coordinate to land in 2-dim: the affine plane has rank-2 direction space
    dirs = [tuple(p[i] - plane_coords[0][i] for i in range(rank)) for p in plane_coords[1:]]
    dbasis = _span_basis([qvec(d) for d in dirs])
    planar = [qvec([Fraction(0)] * 2)] + [_coords_in(dbasis, qvec(d)) for d in dirs]
    order = _angular_order([(p[0], p[1]) for p in planar])
    ordered = [ext[i] for i in order]
    return [[ordered[0], ordered[i], ordered[i + 1]] for i in range(1, len(ordered) - 1)]


def _parallelepiped_points(cone_rays: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Integer points of {sum c_i v_i : 0 <= c_i <= 1} for independent integer rays."""
    d = len(cone_rays[0])
    k = len(cone_rays)
    lo = [sum(min(0, v[i]) for v in cone_rays) for i in range(d)]
    hi = [sum(max(0, v[i]) for v in cone_rays) for i in range(d)]
    a = qmat([[Fraction(cone_rays[j][i]) for j in range(k)] for i in range(d)])
    points = []
    for cand in itertools.product(*[range(lo[i], hi[i] + 1) for i in range(d)]):
        sol = qsolve(a, qvec(cand))
        if sol is None:
            continue
        if all(0 <= c <= 1 for c in sol):
            recon = [sum((sol[j] * cone_rays[j][i] for j in range(k)), Fraction(0)) for i in range(d)]
            if all(Fraction(c) == r for c, r in zip(cand, recon)):
                points.append(tuple(int(c) for c in cand))
    return points


def hilbert_basis(rays: Sequence[QVector], ambient_dim: int) -> list[tuple[int, ...]]:
    """Hilbert basis of cone(rays) cap Z^ambient_dim for pointed cones of rank <= 3."""
    ext_q = extreme_rays(rays)
    if not ext_q:
        return []
    ext = [integer_ray(v) for v in ext_q]
    rank = qrank(qmat([qvec(v) for v in ext]))
    if rank > 3:
        raise ValueError("hilbert basis limited to cone rank <= 3")
    candidates: set[tuple[int, ...]] = set(ext)
    for simplicial in _triangulate(ext, rank):
        candidates.update(_parallelepiped_points(simplicial))
    candidates.discard(tuple([0] * ambient_dim))
    qrays = [qvec(v) for v in ext]
    hb = []
    cands = sorted(candidates)
    for h in cands:
        reducible = False
        for c in cands:
            if c == h:
                continue
            diff = tuple(Fraction(x - y) for x, y in zip(h, c))
            if cone_member(qrays, diff) is not None:
                reducible = True
                break
        if not reducible:
            hb.append(h)
    return hb
