"""The exact linear-algebra kernels: Smith normal form, rational solves,
characteristic polynomials, simplex feasibility, Hilbert bases."""

import itertools
import random
from fractions import Fraction

from logmonoid import cone, qlin, snf

F = Fraction


def _det(m):
    n = len(m)
    if n == 0:
        return 1
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        prod = 1
        for i in range(n):
            prod *= m[i][perm[i]]
        total += sign * prod
    return total


def test_snf_randomized():
    rng = random.Random(42)
    for _ in range(30):
        rows = rng.randint(1, 4)
        cols = rng.randint(1, 4)
        a = snf.as_matrix(
            [[rng.randint(-6, 6) for _ in range(cols)] for _ in range(rows)]
        )
        d, u, v = snf.smith_normal_form(a)
        assert snf.mat_mul(snf.mat_mul(u, a), v) == d
        assert abs(_det(u)) == 1 and abs(_det(v)) == 1
        diag = [d[i][i] for i in range(min(rows, cols))]
        for i in range(rows):
            for j in range(cols):
                if i != j:
                    assert d[i][j] == 0
        for i in range(len(diag) - 1):
            if diag[i + 1] != 0:
                assert diag[i] != 0 and diag[i + 1] % diag[i] == 0


def test_integer_solve_and_kernel():
    rng = random.Random(7)
    for _ in range(30):
        rows, cols = rng.randint(1, 3), rng.randint(1, 4)
        a = snf.as_matrix(
            [[rng.randint(-5, 5) for _ in range(cols)] for _ in range(rows)]
        )
        x = tuple(rng.randint(-4, 4) for _ in range(cols))
        b = snf.mat_vec(a, x)
        sol = snf.solve_integer(a, b)
        assert sol is not None and snf.mat_vec(a, sol) == tuple(b)
        for k in snf.kernel_basis(a):
            assert all(v == 0 for v in snf.mat_vec(a, k))


def test_charpoly_and_roots():
    a = qlin.qmat(((2, 1), (0, 2)))
    # det(xI - a) = (x-2)^2 = x^2 - 4x + 4
    assert qlin.charpoly(a) == [F(4), F(-4), F(1)]
    roots = qlin.rational_roots([F(4), F(-4), F(1)])
    assert roots == [(F(2), 2)]
    assert qlin.rational_roots([F(-2), F(0), F(1)]) is None  # x^2 - 2
    roots = qlin.rational_roots([F(0), F(-1, 6), F(0), F(1)])  # x(x^2 - 1/6)
    assert roots is None
    roots = qlin.rational_roots([F(0), F(-1, 4), F(0), F(1)])  # x(x - 1/2)(x + 1/2)
    assert sorted(roots) == [(F(-1, 2), 1), (F(0), 1), (F(1, 2), 1)]


def test_qsolve_and_nullspace():
    rng = random.Random(11)
    for _ in range(25):
        rows, cols = rng.randint(1, 4), rng.randint(1, 4)
        a = qlin.qmat(
            [[F(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(cols)] for _ in range(rows)]
        )
        x = qlin.qvec([F(rng.randint(-4, 4)) for _ in range(cols)])
        b = qlin.qmat_vec(a, x)
        sol = qlin.qsolve(a, b)
        assert sol is not None and qlin.qmat_vec(a, sol) == tuple(b)
        for k in qlin.qnullspace(a):
            assert all(v == 0 for v in qlin.qmat_vec(a, k))
        assert qlin.qrank(a) + len(qlin.qnullspace(a)) == cols


def test_padic_valuation():
    assert qlin.padic_valuation(F(50), 5) == 2
    assert qlin.padic_valuation(F(3, 25), 5) == -2
    assert qlin.padic_valuation(F(0), 5) is qlin.INF


def test_simplex_soundness_randomized():
    rng = random.Random(3)
    feasible_hits = 0
    for _ in range(60):
        m, n = rng.randint(1, 3), rng.randint(1, 5)
        a = [[F(rng.randint(-4, 4)) for _ in range(n)] for _ in range(m)]
        b = [F(rng.randint(-6, 6)) for _ in range(m)]
        x = cone.simplex_feasible(a, b)
        if x is not None:
            feasible_hits += 1
            assert all(v >= 0 for v in x)
            for i in range(m):
                assert sum(a[i][j] * x[j] for j in range(n)) == b[i]
    assert feasible_hits > 5


def test_simplex_completeness_small():
    # certified-feasible instances: b built from a known nonnegative solution
    rng = random.Random(9)
    for _ in range(40):
        m, n = rng.randint(1, 3), rng.randint(1, 4)
        a = [[F(rng.randint(-3, 3)) for _ in range(n)] for _ in range(m)]
        x0 = [F(rng.randint(0, 4)) for _ in range(n)]
        b = [sum(a[i][j] * x0[j] for j in range(n)) for i in range(m)]
        assert cone.simplex_feasible(a, b) is not None


def _lattice_points_in_cone(rays, bound):
    dim = len(rays[0])
    pts = []
    for cand in itertools.product(range(-bound, bound + 1), repeat=dim):
        if all(v == 0 for v in cand):
            continue
        if cone.cone_member([qlin.qvec(r) for r in rays], qlin.qvec(cand)) is not None:
            pts.append(cand)
    return pts


def test_hilbert_basis_simplicial_rank2():
    rays = [(1, 0), (1, 3)]
    hb = cone.hilbert_basis([qlin.qvec(r) for r in rays], 2)
    assert set(hb) == {(1, 0), (1, 1), (1, 2), (1, 3)}


def test_hilbert_basis_square_cone():
    rays = [(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]
    hb = cone.hilbert_basis([qlin.qvec(r) for r in rays], 3)
    assert set(hb) == set(rays)


def test_hilbert_basis_generates_cone_points():
    rays = [(2, 1), (1, 3)]
    hb = cone.hilbert_basis([qlin.qvec(r) for r in rays], 2)
    pts = _lattice_points_in_cone(rays, 4)
    # every small cone point decomposes over the basis (greedy exhaustion)
    reachable = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        cur = frontier.pop()
        for h in hb:
            nxt = (cur[0] + h[0], cur[1] + h[1])
            if max(map(abs, nxt)) <= 4 and nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    for p in pts:
        assert p in reachable


def test_hilbert_basis_pentagon_cone():
    """Five extreme rays force the fan triangulation; the interior lattice
    point at height 1 joins the basis."""
    rays = [(0, 0, 1), (1, 0, 1), (2, 1, 1), (1, 2, 1), (0, 1, 1)]
    hb = cone.hilbert_basis([qlin.qvec(r) for r in rays], 3)
    assert set(hb) == set(rays) | {(1, 1, 1)}


def test_extreme_rays_prune_redundant():
    rays = [(1, 0), (0, 1), (1, 1), (3, 1)]
    ext = cone.extreme_rays([qlin.qvec(r) for r in rays])
    assert sorted(tuple(int(x) for x in v) for v in ext) == [(0, 1), (1, 0)]
