"""Built-in oracle-equivalence and invariant suite backing `logmonoid selftest`.

Every check is exact; the prime only enters through p-adic norms, so the
suite must pass for any prime.
"""

from __future__ import annotations

import random
from fractions import Fraction

from . import log_connection as lc
from . import monoid_core as mc
from . import oracle as orc
from . import weighted_series as ws


def _standard_monoids():
    n1 = mc.free_monoid(1)
    n2 = mc.free_monoid(2)
    nm1, _ = mc.from_embedded([[2], [3]])
    m_even = mc.from_presentation(3, [((1, 0, 1), (0, 2, 0))])
    torsion = mc.from_presentation(2, [((2, 0), (0, 2))])
    return n1, n2, nm1, m_even, torsion


def _rank2_fixture(truncation=8, corrupt=False):
    n1 = mc.free_monoid(1)
    h = ws.default_weighting(n1)
    emb = lc.facet_embedding(n1)
    one = n1.element((1,))
    a0 = ((Fraction(0), Fraction(0)), (Fraction(0), Fraction(1, 2)))
    rows = []
    for i in range(2):
        row = []
        for j in range(2):
            coeffs = {}
            if a0[i][j]:
                coeffs[n1.gp.zero()] = a0[i][j]
            if (i, j) == (0, 1):
                coeffs[one] = Fraction(1) if not corrupt else Fraction(2)
            row.append(ws.series(n1, h, coeffs, truncation))
        rows.append(tuple(row))
    return lc.LogNablaModule(2, emb, (tuple(rows),))


def run(prime: int = 5, corrupt: bool = False) -> list[tuple[str, bool, str]]:
    results: list[tuple[str, bool, str]] = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure with its message
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))

    n1, n2, nm1, m_even, torsion = _standard_monoids()

    def semi_sat():
        expected = [(n1, True), (nm1, True), (m_even, True), (torsion, False)]
        bad = [m for m, want in expected if mc.is_semi_saturated(m) != want]
        return not bad, f"{len(expected)} monoids"

    check("semi_saturated_suite", semi_sat)

    def face_census():
        faces = mc.faces(m_even)
        facets = mc.facets(m_even)
        budget = orc.EnumerationBudget(6)
        brute = orc.brute_faces(m_even, budget)
        if len(faces) != 4 or len(facets) != 2 or len(brute) != 4:
            return False, f"faces={len(faces)} facets={len(facets)} brute={len(brute)}"
        ball = set(orc.enumerate_monoid(m_even, budget))
        fast_sets = {
            frozenset(orc._closure_in_ball(m_even, f.generators(), ball)) for f in faces
        }
        return fast_sets == set(brute), "census"

    check("face_census_m_even", face_census)

    def membership_oracle():
        budget = orc.EnumerationBudget(6)
        for m in (n1, n2, nm1, m_even):
            h = ws.default_weighting(m)
            ball = set(orc.enumerate_monoid(m, budget))
            probes = set(ball)
            sample = sorted(ball)[:12]
            for x in sample:
                for y in sample:
                    probes.add(m.gp.sub(x, y))
            for g in probes:
                if h(g) > 6:
                    continue  # outside the oracle's certified range
                if mc.membership(m, g) != (g in ball):
                    return False, f"disagree at {g}"
        return True, "grid"

    check("membership_oracle", membership_oracle)

    def h_plus_oracle():
        budget = orc.EnumerationBudget(6)
        for m in (n2, m_even):
            h = ws.default_weighting(m)
            ball = orc.enumerate_monoid(m, orc.EnumerationBudget(3))
            for x in ball:
                for y in ball:
                    g = m.gp.sub(x, y)
                    if ws.h_abs(m, h, g) > 6:
                        continue
                    if ws.h_plus(m, h, g) != orc.brute_h_plus(m, g, budget):
                        return False, f"h+ mismatch at {g}"
        return True, "grid"

    check("h_plus_oracle", h_plus_oracle)

    def sections():
        n3 = mc.free_monoid(3)
        fixtures = [
            mc.MonoidHom(n2, n1, (n1.element((1,)), n1.element((1,)))),
            mc.MonoidHom(n1, n1, (n1.element((1,)),)),
            mc.MonoidHom(n2, n1, (n1.element((1,)), n1.element((2,)))),
            mc.MonoidHom(n3, m_even, m_even.generators),
            mc.MonoidHom(
                n3, n2,
                (n2.element((1, 0)), n2.element((0, 1)), n2.element((1, 1))),
            ),
        ]
        for f in fixtures:
            mc.section(f)  # raises if any invariant fails
        return True, f"{len(fixtures)} surjections"

    check("section_invariants", sections)

    def shear_suite():
        e = _rank2_fixture(corrupt=corrupt)
        sr = lc.shear(e, p=prime)
        # frozen first-order gauge, solved by hand from the weight-1 recursion
        first = lc.smat_coefficient(sr.gauge, n1.element((1,)))
        if first != ((Fraction(0), Fraction(-2)), (Fraction(0), Fraction(0))):
            return False, f"unexpected first-order gauge {first}"
        ident = lc.smat_from_rational(
            e.monoid, e.weighting,
            tuple(tuple(Fraction(1 if i == j else 0) for j in range(2)) for i in range(2)),
            e.truncation,
        )
        if not lc.smat_equal(lc.smat_mul(sr.gauge, sr.gauge_inverse), ident):
            return False, "BB' != I"
        u = lc.apply_ui(e.embedding, e.weighting, sr.constant_model, e.truncation)
        back = lc.gauge_transform(u, sr.gauge_inverse, sr.gauge)
        if not all(lc.smat_equal(a, b) for a, b in zip(back.matrices, e.matrices)):
            return False, "round trip failed"
        if not all(r.ok for r in sr.bound_report):
            return False, "norm bound violated"
        brute = orc.brute_shear_order(e, 3)
        for key, bm in brute.items():
            if lc.smat_coefficient(sr.gauge, key) != bm:
                return False, f"brute mismatch at {key}"
        return True, f"{len(sr.bound_report)} orders"

    check("shear_suite", shear_suite)

    def counterexample():
        h = ws.default_weighting(m_even)
        emb = lc.facet_embedding(m_even)
        g1 = m_even.generators[0]
        xi = tuple(Fraction(c, 2) for c in g1[0])
        e = lc.apply_ui(emb, h, [((Fraction(0),),)] * 2, 8, xi_twist=xi, interval_kind="annulus")
        sigma0 = lc.ExponentSet(m_even, (tuple([Fraction(0)] * 2),))
        verdicts = {}
        for f in mc.faces(m_even):
            key = tuple(sorted(f.generator_indices))
            verdicts[key] = lc.is_sigma_unipotent(e, sigma0, f).verdict
        ok = (
            verdicts[()] is False
            and verdicts[(0,)] is True
            and verdicts[(2,)] is True
            and verdicts[(0, 1, 2)] is True
        )
        return ok, str(verdicts)

    check("rank1_counterexample", counterexample)

    def dl_suite():
        h = ws.default_weighting(n2)
        emb = lc.facet_embedding(n2)
        a1 = ((Fraction(0), Fraction(1)), (Fraction(0), Fraction(0)))
        a2 = ((Fraction(0), Fraction(0)), (Fraction(0), Fraction(0)))
        e = lc.apply_ui(emb, h, [a1, a2], 6)
        polys = lc.default_projection_polynomials(e)
        v = (
            ws.series(n2, h, {n2.gp.zero(): Fraction(1), n2.element((1, 0)): Fraction(2)}, 6),
            ws.series(n2, h, {n2.gp.zero(): Fraction(5)}, 6),
        )
        w = lc.dl_limit(e, v, polys)
        if w != (Fraction(5), Fraction(0)):
            return False, f"limit {w}"
        f = ws.series(n2, h, {n2.gp.zero(): Fraction(1), n2.element((1, 1)): Fraction(3)}, 6)
        out = lc.dl_constant_term(f, 2, emb)
        if dict(out.terms) != {n2.gp.zero(): Fraction(1)}:
            return False, "dl_constant_term failed"
        return True, "dl"

    check("dl_suite", dl_suite)

    def homotopy():
        emb = lc.facet_embedding(n2)
        zero = (Fraction(0), Fraction(0))
        pairs = [
            (zero, (Fraction(1, 2), Fraction(1, 3))),
            (zero, zero),
            ((Fraction(1, 5), Fraction(0)), (Fraction(0), Fraction(2, 5))),
        ]
        forms = [
            {(n2.gp.zero(), (0,)): Fraction(1)},
            {(n2.element((1, 0)), (1,)): Fraction(1)},
            {(n2.element((2, 1)), ()): Fraction(1)},
            {(n2.element((1, 1)), (0, 1)): Fraction(1)},
        ]
        for xi, xi_p in pairs:
            rep = lc.homotopy_check(emb, xi, xi_p, forms)
            if not rep.all_zero:
                return False, f"residual for {xi} -> {xi_p}"
        return True, f"{len(pairs)} pairs"

    check("homotopy_identity", homotopy)

    def log_convexity():
        rng = random.Random(20260808)
        h = ws.default_weighting(n2)
        cs = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
        for trial in range(20):
            coeffs = {}
            for _ in range(rng.randint(1, 6)):
                key = n2.element((rng.randint(-3, 3), rng.randint(-3, 3)))
                coeffs[key] = Fraction(rng.randint(-50, 50), rng.randint(1, 20))
            f = ws.series(n2, h, coeffs, 12, annulus=True)
            if f.is_zero():
                continue
            qa = Fraction(rng.randint(0, 8), rng.randint(1, 4))
            qb = Fraction(rng.randint(0, 8), rng.randint(1, 4))
            a, b = ws.Radius(qa), ws.Radius(qb)
            na = ws.gauss_norm(f, a, prime).exponent
            nb = ws.gauss_norm(f, b, prime).exponent
            for c in cs:
                mixed = ws.gauss_norm(f, a.mix(b, c), prime).exponent
                if mixed < c * na + (1 - c) * nb:
                    return False, f"trial {trial}"
        return True, "20 seeded series"

    check("gauss_log_convexity", log_convexity)

    def saturation_invariance():
        h = ws.default_weighting(nm1)
        pts = [
            ws.valuation_point(nm1, (Fraction(2) * q, Fraction(3) * q))
            for q in (Fraction(0), Fraction(1, 2), Fraction(2, 3), Fraction(1))
        ]
        rng = random.Random(7)
        for _ in range(10):
            qb = Fraction(rng.randint(0, 4), rng.randint(1, 3))
            qa = qb + Fraction(rng.randint(0, 4), rng.randint(1, 3))
            if not ws.saturation_invariance_check(nm1, ws.Radius(qa), ws.Radius(qb), pts):
                return False, f"a=p^-{qa} b=p^-{qb}"
        return True, "10 intervals"

    check("saturation_invariance", saturation_invariance)

    return results


def main(prime: int = 5, corrupt: bool = False) -> int:
    results = run(prime, corrupt)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        if not ok:
            failed += 1
    return 1 if failed else 0
