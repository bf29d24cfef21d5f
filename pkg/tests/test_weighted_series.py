"""Weightings, h+/h-/|h|, truncated series arithmetic, Gauss norms,
polyannulus points."""

import random
from fractions import Fraction

import pytest

from logmonoid import oracle as orc
from logmonoid import weighted_series as ws
from logmonoid.errors import NonInvertibleConstantTerm
from logmonoid.qlin import INF

from conftest import build_series

P = 5


# -- weightings ----------------------------------------------------------------

def test_default_weighting_n2(n2):
    h = ws.default_weighting(n2)
    assert h.values == (1, 1)


def test_default_weighting_m_even_is_valid(m_even):
    h = ws.default_weighting(m_even)
    assert all(v > 0 for v in h.values)
    g1, g2, g3 = m_even.generators
    # h extends to a homomorphism: h(g1) + h(g3) = 2 h(g2)
    assert h(m_even.gp.add(g1, g3)) == 2 * h(g2)


def test_default_weighting_group_is_zero(z_monoid):
    h = ws.default_weighting(z_monoid)
    assert set(h.values) == {0}


def test_weighting_rejects_nonvanishing_on_units(z_monoid):
    with pytest.raises(ValueError):
        ws.Weighting(z_monoid, (1, 1))


def test_weighting_rejects_non_homomorphism(m_even):
    # g1 + g3 = 2 g2 forces h1 + h3 = 2 h2
    with pytest.raises(ValueError):
        ws.Weighting(m_even, (1, 1, 2))


def test_coordinate_sum_weighting_m_even(m_even):
    h = ws.Weighting(m_even, (2, 2, 2))  # ambient coordinate sum restriction
    assert h(m_even.generators[0]) == 2


# -- h+, h-, |h| ----------------------------------------------------------------

def test_h_plus_n2(n2):
    h = ws.default_weighting(n2)
    g = n2.element((1, -1))
    assert ws.h_plus(n2, h, g) == 1  # y = (1, 0)
    assert ws.h_minus(n2, h, g) == 1
    assert ws.h_abs(n2, h, g) == 2


def test_h_plus_on_monoid_elements(n2, m_even):
    for m in (n2, m_even):
        h = ws.default_weighting(m)
        for g in m.generators:
            assert ws.h_minus(m, h, g) == 0
            assert ws.h_plus(m, h, g) == h(g)


def test_h_plus_m_even_coordinate_sum(m_even):
    h = ws.Weighting(m_even, (2, 2, 2))
    g1, _, g3 = m_even.generators
    diff = m_even.gp.sub(g1, g3)  # ambient (2, -2)
    assert ws.h_plus(m_even, h, diff) == 2  # y = (2, 0)
    assert ws.h_minus(m_even, h, diff) == 2


def test_h_identities_on_grid(n2, m_even):
    """h- = h+ - h everywhere; bounded search equals the oracle for |h| <= 10."""
    budget = orc.EnumerationBudget(10)
    for m in (n2, m_even):
        h = ws.default_weighting(m)
        ball = orc.enumerate_monoid(m, orc.EnumerationBudget(5))
        for x in ball:
            for y in ball:
                g = m.gp.sub(x, y)
                hp = ws.h_plus(m, h, g)
                assert ws.h_minus(m, h, g) == hp - h(g)  # h- = h+ - h
                if ws.h_abs(m, h, g) <= 10:
                    assert hp == orc.brute_h_plus(m, g, budget)


# -- series arithmetic -------------------------------------------------------------

def test_difference_of_squares(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(0,): 1, (1,): 1}, 8)
    g = build_series(n1, h, {(0,): 1, (1,): -1}, 8)
    prod = ws.series_mul(f, g)
    expected = build_series(n1, h, {(0,): 1, (2,): -1}, 8)
    assert ws.series_equal(prod, expected)


def test_geometric_series_inverse(n1):
    h = ws.default_weighting(n1)
    g = build_series(n1, h, {(0,): 1, (1,): -1}, 6)
    inv = ws.series_invert(g)
    expected = build_series(n1, h, {(k,): 1 for k in range(7)}, 6)
    assert ws.series_equal(inv, expected)
    assert ws.series_equal(ws.series_mul(inv, g), build_series(n1, h, {(0,): 1}, 6))


def test_xy_equals_z_squared(m_even):
    h = ws.default_weighting(m_even)
    g1, g2, g3 = m_even.generators
    tx = ws.monomial(m_even, h, g1, 8)
    ty = ws.monomial(m_even, h, g3, 8)
    tz = ws.monomial(m_even, h, g2, 8)
    assert ws.series_equal(ws.series_mul(tx, ty), ws.series_mul(tz, tz))


def test_invert_needs_unit_constant(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(1,): 1}, 6)
    with pytest.raises(NonInvertibleConstantTerm):
        ws.series_invert(f)


def test_disk_series_reject_negative_support(n1):
    h = ws.default_weighting(n1)
    with pytest.raises(ValueError):
        build_series(n1, h, {(-1,): 1}, 6)
    # the same support is fine on an annulus
    build_series(n1, h, {(-1,): 1}, 6, annulus=True)


# -- Gauss norms ---------------------------------------------------------------------

def test_gauss_norm_two_term_tie(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(1,): P, (2,): 1}, 8)
    nr = ws.gauss_norm(f, ws.Radius.p_power(1), P)
    assert nr.exponent == 2  # both terms give p^{-2}
    assert not nr.stale


def test_gauss_norm_constant(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(0,): Fraction(3, 5)}, 8)
    for q in (0, 1, Fraction(7, 2)):
        assert ws.gauss_norm(f, ws.Radius.p_power(q), P).exponent == -1


def test_gauss_norm_stale_at_frontier(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(4,): 1}, 4)
    assert ws.gauss_norm(f, ws.Radius.one(), P).stale


def test_log_convexity_spot(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(1,): P, (2,): 1}, 8)
    n_mid = ws.gauss_norm(f, ws.Radius.p_power(1), P).exponent
    n_0 = ws.gauss_norm(f, ws.Radius.one(), P).exponent
    n_2 = ws.gauss_norm(f, ws.Radius.p_power(2), P).exponent
    assert n_mid >= Fraction(1, 2) * n_0 + Fraction(1, 2) * n_2


def test_norm_multiplicativity_bound(n2):
    rng = random.Random(1234)
    h = ws.default_weighting(n2)
    for _ in range(15):
        def rand_series():
            coeffs = {}
            for _ in range(rng.randint(1, 5)):
                key = n2.element((rng.randint(-2, 3), rng.randint(-2, 3)))
                coeffs[key] = Fraction(rng.randint(-30, 30), rng.randint(1, 12))
            return ws.series(n2, h, coeffs, 12, annulus=True)

        f, g = rand_series(), rand_series()
        prod = ws.series_mul(f, g)
        if f.is_zero() or g.is_zero() or prod.is_zero():
            continue
        for q in (Fraction(0), Fraction(1), Fraction(3, 2)):
            a = ws.Radius(q)
            vf = ws.gauss_norm(f, a, P).exponent
            vg = ws.gauss_norm(g, a, P).exponent
            vp = ws.gauss_norm(prod, a, P).exponent
            assert vp >= vf + vg  # |fg|_a <= |f|_a |g|_a


def test_interval_norm_annulus_weights(n1):
    h = ws.default_weighting(n1)
    f = build_series(n1, h, {(-1,): 1}, 6, annulus=True)
    nr = ws.gauss_norm_interval(f, ws.Radius.p_power(2), ws.Radius.p_power(1), P)
    # |t^{-1}| weight: a^{-h^-} b^{h^+} with h+ = 0, h- = 1: p^{2}
    assert nr.exponent == -2


# -- polyannulus points ----------------------------------------------------------------

def test_vertex_membership(n2):
    h = ws.default_weighting(n2)
    vtx = ws.vertex_point(n2, h)
    assert ws.point_in_polyannulus(vtx, h, ws.Radius.zero(), ws.Radius.p_power(1))
    assert ws.point_in_polyannulus(vtx, h, ws.Radius.zero(), ws.Radius.zero())
    assert not ws.point_in_polyannulus(vtx, h, ws.Radius.p_power(3), ws.Radius.one())


def test_point_two_sided_bounds(n2):
    h = ws.default_weighting(n2)
    x = ws.valuation_point(n2, (1, 1))
    assert ws.point_in_polyannulus(x, h, ws.Radius.p_power(1), ws.Radius.one())
    assert not ws.point_in_polyannulus(x, h, ws.Radius.p_power(Fraction(1, 2)), ws.Radius.one())


def test_point_rejects_inconsistent_valuations(m_even):
    # g1 + g3 = 2 g2 forces v1 + v3 = 2 v2
    with pytest.raises(ValueError):
        ws.valuation_point(m_even, (1, 1, 3))
    ws.valuation_point(m_even, (1, 2, 3))


def _point_in_polyannulus_exhaustive(m, h, x, a, b, bound):
    """Check the defining inequalities on every monoid element of weight <= bound."""
    from logmonoid.qlin import qvec, qmat, qsolve

    ball = orc.enumerate_monoid(m, orc.EnumerationBudget(bound))
    if any(v is INF for v in x.log_values):
        lam = None
    else:
        rows = [[Fraction(c) for c in g[0]] for g in m.generators]
        lam = qsolve(qmat(rows), qvec([Fraction(v) for v in x.log_values]))
    for elt in ball:
        hv = h(elt)
        if lam is None:
            val = INF if hv > 0 else Fraction(0)
        else:
            val = sum((lam[i] * elt[0][i] for i in range(len(lam))), Fraction(0))
        if hv == 0:
            if val != 0:
                return False
            continue
        if b.is_zero:
            if val is not INF:
                return False
        elif val is not INF and val < b.value_exponent() * hv:
            return False
        if not a.is_zero and (val is INF or val > a.value_exponent() * hv):
            return False
    return True


def test_generator_check_suffices(n2, m_even):
    rng = random.Random(99)
    for m in (n2, m_even):
        h = ws.default_weighting(m)
        pts = [ws.vertex_point(m, h)]
        for _ in range(6):
            lam = [Fraction(rng.randint(0, 5), rng.randint(1, 3)) for _ in range(m.gp.free_rank)]
            vals = [
                sum((lam[i] * g[0][i] for i in range(len(lam))), Fraction(0))
                for g in m.generators
            ]
            pts.append(ws.valuation_point(m, vals))
        intervals = [
            (ws.Radius.zero(), ws.Radius.one()),
            (ws.Radius.p_power(2), ws.Radius.one()),
            (ws.Radius.p_power(3), ws.Radius.p_power(1)),
        ]
        for x in pts:
            for a, b in intervals:
                fast = ws.point_in_polyannulus(x, h, a, b)
                full = _point_in_polyannulus_exhaustive(m, h, x, a, b, 10)
                assert fast == full


# -- saturation invariance ------------------------------------------------------------------

def test_saturation_invariance_nm1(nm1):
    m, _ = nm1
    pts = [
        ws.valuation_point(m, (Fraction(2) * q, Fraction(3) * q))
        for q in (Fraction(0), Fraction(1, 3), Fraction(1), Fraction(5, 2))
    ]
    assert ws.saturation_invariance_check(m, ws.Radius.p_power(2), ws.Radius.p_power(1), pts)
    assert ws.saturation_invariance_check(m, ws.Radius.p_power(1), ws.Radius.one(), pts)


def test_saturation_invariance_saturated_case(m_even):
    h = ws.default_weighting(m_even)
    pts = [ws.valuation_point(m_even, (h(g) for g in m_even.generators))]
    assert ws.saturation_invariance_check(m_even, ws.Radius.p_power(1), ws.Radius.one(), pts)
