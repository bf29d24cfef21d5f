"""Exact linear algebra over the rationals.

Matrices are tuples of tuples of Fractions (rows).  Includes the p-adic
valuation helpers shared by the series and connection modules.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

QMatrix = tuple[tuple[Fraction, ...], ...]
QVector = tuple[Fraction, ...]

INF = math.inf  # valuation of 0; compares correctly against Fractions


def qmat(rows: Sequence[Sequence]) -> QMatrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def qvec(entries: Sequence) -> QVector:
    return tuple(Fraction(x) for x in entries)


def qidentity(n: int) -> QMatrix:
    return tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(n)) for i in range(n)
    )


def qzeros(n: int, m: int) -> QMatrix:
    return tuple(tuple(Fraction(0) for _ in range(m)) for _ in range(n))


def qmat_mul(a: QMatrix, b: QMatrix) -> QMatrix:
    if not a or not b:
        return tuple(tuple() for _ in a)
    cols = len(b[0])
    return tuple(
        tuple(sum((row[k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(cols))
        for row in a
    )


def qmat_vec(a: QMatrix, v: Sequence[Fraction]) -> QVector:
    return tuple(sum((row[k] * v[k] for k in range(len(v))), Fraction(0)) for row in a)


def qmat_add(a: QMatrix, b: QMatrix) -> QMatrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def qmat_sub(a: QMatrix, b: QMatrix) -> QMatrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def qmat_scale(c: Fraction, a: QMatrix) -> QMatrix:
    return tuple(tuple(c * x for x in row) for row in a)


def qtranspose(a: QMatrix) -> QMatrix:
    if not a:
        return tuple()
    return tuple(tuple(a[i][j] for i in range(len(a))) for j in range(len(a[0])))


def _gauss(a: QMatrix, rhs: Optional[list[list[Fraction]]] = None):
    """Row-reduce a copy of `a` (and optional right-hand sides); return
    (reduced rows, rhs rows, pivot columns)."""
    m = [list(row) for row in a]
    r = [list(row) for row in rhs] if rhs is not None else None
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        sel = None
        for i in range(row, nrows):
            if m[i][col] != 0:
                sel = i
                break
        if sel is None:
            continue
        m[row], m[sel] = m[sel], m[row]
        if r is not None:
            r[row], r[sel] = r[sel], r[row]
        inv = 1 / m[row][col]
        m[row] = [x * inv for x in m[row]]
        if r is not None:
            r[row] = [x * inv for x in r[row]]
        for i in range(nrows):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[row])]
                if r is not None:
                    r[i] = [x - f * y for x, y in zip(r[i], r[row])]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    return m, r, pivots


def qrank(a: QMatrix) -> int:
    if not a:
        return 0
    _, _, pivots = _gauss(a)
    return len(pivots)


def qsolve(a: QMatrix, b: Sequence[Fraction]) -> Optional[QVector]:
    """A particular solution of a*x = b over Q, or None if inconsistent.

    Deterministic: free variables are set to zero.
    """
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    m, r, pivots = _gauss(a, [[Fraction(x)] for x in b])
    x = [Fraction(0)] * ncols
    for i, col in enumerate(pivots):
        x[col] = r[i][0]
    for i in range(len(pivots), nrows):
        if r[i][0] != 0:
            return None
    return tuple(x)


def qnullspace(a: QMatrix) -> list[QVector]:
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    if nrows == 0:
        return [tuple(Fraction(1 if i == j else 0) for i in range(ncols)) for j in range(ncols)]
    m, _, pivots = _gauss(a)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for j in free:
        v = [Fraction(0)] * ncols
        v[j] = Fraction(1)
        for i, col in enumerate(pivots):
            v[col] = -m[i][j]
        basis.append(tuple(v))
    return basis


def qinverse(a: QMatrix) -> Optional[QMatrix]:
    n = len(a)
    m, r, pivots = _gauss(a, [list(row) for row in qidentity(n)])
    if len(pivots) < n:
        return None
    return tuple(tuple(row) for row in r)


def charpoly(a: QMatrix) -> list[Fraction]:
    """Coefficients [c_0, ..., c_n] of det(x*I - a) = sum c_k x^k (Faddeev-LeVerrier)."""
    n = len(a)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    m = qzeros(n, n)
    c = Fraction(1)
    for k in range(1, n + 1):
        m = qmat_mul(a, m)
        m = tuple(
            tuple(m[i][j] + (c if i == j else 0) for j in range(n)) for i in range(n)
        )
        am = qmat_mul(a, m)
        tr = sum((am[i][i] for i in range(n)), Fraction(0))
        c = -tr / k
        coeffs[n - k] = c
    return coeffs


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def rational_roots(coeffs: Sequence[Fraction]) -> Optional[list[tuple[Fraction, int]]]:
    """All roots with multiplicity of a polynomial, or None if it does not
    split over Q.  coeffs = [c_0, ..., c_n]."""
    poly = [Fraction(x) for x in coeffs]
    while poly and poly[-1] == 0:
        poly.pop()
    if not poly:
        raise ValueError("zero polynomial")
    roots: dict[Fraction, int] = {}
    # strip powers of x
    while poly[0] == 0:
        roots[Fraction(0)] = roots.get(Fraction(0), 0) + 1
        poly = poly[1:]
    while len(poly) > 1:
        # integer-clear
        denlcm = 1
        for c in poly:
            denlcm = denlcm * c.denominator // math.gcd(denlcm, c.denominator)
        ipoly = [int(c * denlcm) for c in poly]
        g = 0
        for c in ipoly:
            g = math.gcd(g, c)
        if g > 1:
            ipoly = [c // g for c in ipoly]
        lead, const = ipoly[-1], ipoly[0]
        if const == 0:
            roots[Fraction(0)] = roots.get(Fraction(0), 0) + 1
            poly = poly[1:]
            continue
        found = None
        for q in _divisors(lead):
            for p in _divisors(const):
                for sgn in (1, -1):
                    cand = Fraction(sgn * p, q)
                    val = Fraction(0)
                    for c in reversed(poly):
                        val = val * cand + c
                    if val == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            return None
        # synthetic division: p(x) = (x - r) q(x), q_k = p_{k+1} + r*q_{k+1}
        n = len(poly) - 1
        q = [Fraction(0)] * n
        q[n - 1] = poly[n]
        for k in range(n - 2, -1, -1):
            q[k] = poly[k + 1] + found * q[k + 1]
        poly = q
        roots[found] = roots.get(found, 0) + 1
    return sorted(roots.items())


def padic_valuation(x: Fraction, p: int):
    """v_p(x) as an int, or INF for x = 0."""
    if x == 0:
        return INF
    v = 0
    n = x.numerator
    d = x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def matrix_valuation(a: QMatrix, p: int):
    """min of entry valuations (so |a| = p^{-val}); INF for the zero matrix."""
    v = INF
    for row in a:
        for x in row:
            vx = padic_valuation(x, p)
            if vx < v:
                v = vx
    return v
