"""Shared fixtures: the standard test monoids and connection builders."""

from __future__ import annotations

from fractions import Fraction

import pytest

from logmonoid import log_connection as lc
from logmonoid import monoid_core as mc
from logmonoid import weighted_series as ws


@pytest.fixture(scope="session")
def n1():
    return mc.free_monoid(1)


@pytest.fixture(scope="session")
def n2():
    return mc.free_monoid(2)


@pytest.fixture(scope="session")
def n3():
    return mc.free_monoid(3)


@pytest.fixture(scope="session")
def nm1():
    """N \\ {1} embedded as <2, 3>, with the ambient converter."""
    return mc.from_embedded([[2], [3]])


@pytest.fixture(scope="session")
def m_even():
    """{(a1, a2) in N^2 : a1 + a2 even} via the presentation e1 + e3 = 2 e2."""
    return mc.from_presentation(3, [((1, 0, 1), (0, 2, 0))])


@pytest.fixture(scope="session")
def torsion_monoid():
    """gp = Z + Z/2 from the relation 2x = 2y."""
    return mc.from_presentation(2, [((2, 0), (0, 2))])


@pytest.fixture(scope="session")
def z_monoid():
    m, _ = mc.from_embedded([[1], [-1]])
    return m


def build_series(monoid, weighting, terms, truncation, annulus=False):
    """terms: {free-tuple or (free, torsion): rational}."""
    coeffs = {}
    for key, c in terms.items():
        if key and isinstance(key[0], tuple):
            elt = monoid.gp.element(key[0], key[1])
        else:
            elt = monoid.element(key)
        coeffs[elt] = Fraction(c)
    return ws.series(monoid, weighting, coeffs, truncation, annulus=annulus)


def build_module(monoid, matrix_terms, rank, truncation, embedding=None, kind="disk",
                 base_terms=None):
    """matrix_terms: list (per embedding coordinate) of {key: rank x rank rationals}."""
    h = ws.default_weighting(monoid)
    emb = embedding or lc.facet_embedding(monoid)
    annulus = kind == "annulus"

    def build(per_key):
        rows = []
        for i in range(rank):
            row = []
            for j in range(rank):
                coeffs = {}
                for key, mat in per_key.items():
                    elt = monoid.element(key) if not (key and isinstance(key[0], tuple)) else monoid.gp.element(*key)
                    v = Fraction(mat[i][j])
                    if v:
                        coeffs[elt] = v
                row.append(ws.series(monoid, h, coeffs, truncation, annulus=annulus))
            rows.append(tuple(row))
        return tuple(rows)

    mats = tuple(build(per_key) for per_key in matrix_terms)
    base = tuple(build(per_key) for per_key in base_terms) if base_terms else None
    return lc.LogNablaModule(rank, emb, mats, base, kind)


def smat_neumann_inverse(g):
    """Inverse of a series matrix with constant term I (by Neumann series)."""
    entry = g[0][0]
    m, h, t = entry.monoid, entry.weighting, entry.truncation
    n = len(g)
    ident = lc.smat_from_rational(
        m, h, tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)), t
    )
    nil = lc.smat_sub(ident, g)
    acc = ident
    power = ident
    for _ in range(t):
        power = lc.smat_mul(power, nil)
        if lc.smat_is_zero(power):
            break
        acc = lc.smat_add(acc, power)
    return acc


def gauge_built_module(monoid, constant_model, gauge_terms, rank, truncation,
                       base_model=None):
    """U_I(constant_model) rewritten in the basis e*G: shear must invert G."""
    h = ws.default_weighting(monoid)
    emb = lc.facet_embedding(monoid)
    u = lc.apply_ui(emb, h, constant_model, truncation,
                    base_model=base_model)
    g = _build_gauge(monoid, h, gauge_terms, rank, truncation)
    g_inv = smat_neumann_inverse(g)
    return lc.gauge_transform(u, g, g_inv), g, g_inv


def _build_gauge(monoid, h, gauge_terms, rank, truncation):
    rows = []
    for i in range(rank):
        row = []
        for j in range(rank):
            coeffs = {monoid.gp.zero(): Fraction(1)} if i == j else {}
            for key, mat in gauge_terms.items():
                v = Fraction(mat[i][j])
                if v:
                    coeffs[monoid.element(key)] = v
            row.append(ws.series(monoid, h, coeffs, truncation))
        rows.append(tuple(row))
    return tuple(rows)
