import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from germfib.algebra import ParamPoly, VarTable
from germfib.errors import DomainError, ParseError, TruncationWindowError
from germfib.normalform import random_cocycle
from germfib.series import (
    IDENTITY,
    INVERSION,
    X,
    Cocycle,
    TransversalMap,
    TransversalSeries,
    compose_all,
    conjugate_by_scaling,
    cyclic_cover,
    format_cocycle,
    map_compose,
    map_invert,
    parse_cocycle,
    series_root,
    series_table,
    zeros,
)

from helpers import random_chart, same_map, sympy_compose

T = series_table()


def line_cocycle(order, k=1):
    return Cocycle.from_coefficients({}, {}, order, k)


def identity(order):
    return TransversalMap.identity(T, order)


def linear(order, xs=None, ys=None):
    xr, yr = zeros(T, order), zeros(T, order)
    for n, c in (xs or {}).items():
        xr[n] = ParamPoly.const(T, c)
    for n, c in (ys or {}).items():
        yr[n] = ParamPoly.const(T, c)
    return TransversalMap.from_raw(IDENTITY, xr, yr)


seeds = st.integers(0, 10_000)


def test_identity_is_neutral(rng):
    c = random_cocycle(rng, 5)
    assert map_compose(identity(5), c.map).raw() == c.map.raw()
    assert map_compose(c.map, identity(5)).raw() == c.map.raw()


def test_line_cocycle_squares_to_identity():
    c = line_cocycle(6)
    assert map_compose(c, c).raw() == identity(6).raw()


@pytest.mark.parametrize("seed", range(3))
def test_compose_matches_series_oracle(seed):
    rng = random.Random(seed)
    c = random_cocycle(rng, 3, kmin=-1, kmax=3)
    ch = random_chart(rng, 3)
    got = map_compose(c, ch)
    assert same_map(got, sympy_compose(c, ch, 3))


def test_invert_examples():
    assert map_invert(identity(4)).raw() == identity(4).raw()
    assert map_invert(linear(4, ys={1: 2})).raw() == linear(4, ys={1: Fraction(1, 2)}).raw()
    assert map_invert(linear(4, xs={1: 1}, ys={1: 1})).raw() == linear(4, xs={1: -1}, ys={1: 1}).raw()


def test_invert_rejects_non_unit_lead():
    ys = zeros(T, 3)
    ys[1] = ParamPoly.var(T, X) + 1
    with pytest.raises(DomainError):
        TransversalMap.from_raw(IDENTITY, zeros(T, 3), ys)


@given(seeds)
def test_invert_is_two_sided(seed):
    rng = random.Random(seed)
    for m in (random_cocycle(rng, 4).map, random_chart(rng, 4).map):
        inv = map_invert(m)
        ident = identity(4).raw()
        assert map_compose(m, inv).raw() == ident
        assert map_compose(inv, m).raw() == ident


@given(seeds)
def test_compose_is_associative(seed):
    rng = random.Random(seed)
    a, b = random_chart(rng, 4, "inf"), random_cocycle(rng, 4)
    c = random_chart(rng, 4)
    left = map_compose(map_compose(a, b), c)
    right = map_compose(a, map_compose(b, c))
    assert left.raw() == right.raw()
    assert compose_all(a, b, c).raw() == left.raw()


@given(seeds)
def test_truncation_coherence(seed):
    rng = random.Random(seed)
    c, ch = random_cocycle(rng, 5), random_chart(rng, 5)
    assert map_compose(c, ch).truncate(3).raw() == map_compose(c.truncate(3), ch.map.truncate(3)).raw()


def test_exponent_cap_guards_window(rng):
    c = random_cocycle(rng, 4, kmin=-3, kmax=6)
    with pytest.raises(TruncationWindowError):
        map_compose(c, c, cap=2)


def test_series_root_of_one():
    one = [ParamPoly.const(T, 1)] + [ParamPoly.zero(T)] * 4
    assert all(c.is_zero() for c in series_root(one, 2).coeffs)


def test_square_root_binomial_series():
    u = [ParamPoly.const(T, 1), ParamPoly.const(T, 1)] + [ParamPoly.zero(T)] * 4
    r = series_root(u, 2)
    t = sympy.Symbol("t")
    oracle = sympy.series(sympy.sqrt(1 + t), t, 0, 6).removeO()
    for n in range(1, 6):
        want = oracle.coeff(t, n)
        assert r[n].constant_value() == Fraction(int(want.p), int(want.q))


@given(seeds, st.integers(2, 4))
def test_root_power_restores(seed, k):
    rng = random.Random(seed)
    table = series_table()
    u = [ParamPoly.const(table, 1)] + [ParamPoly.monomial(table, {X: rng.randint(-2, 2)}, rng.randint(-3, 3))
                                       for _ in range(5)]
    r = series_root(u, k).raw()
    r[0] = ParamPoly.const(table, 1)
    acc = [ParamPoly.const(table, 1)] + [ParamPoly.zero(table)] * 5
    for _ in range(k):
        acc = [sum((acc[i] * r[n - i] for i in range(n + 1)), ParamPoly.zero(table)) for n in range(6)]
    assert acc == u


def test_series_root_needs_unit_constant():
    with pytest.raises(DomainError):
        series_root([ParamPoly.const(T, 2), ParamPoly.zero(T)], 2)


def test_cover_of_linear_models():
    for k in (2, 3):
        cover = cyclic_cover(line_cocycle(4, k), 6)
        assert cover.self_intersection == 1
        assert cover.map.raw() == line_cocycle(6).map.raw()


def test_cover_rejects_bad_leading_term():
    with pytest.raises(DomainError):
        cyclic_cover(line_cocycle(4, 1), 4)
    c = Cocycle.from_coefficients({}, {}, 4, 2, lead=2)
    with pytest.raises(DomainError):
        cyclic_cover(c, 4)


@given(seeds)
def test_cover_has_deck_symmetry(seed):
    rng = random.Random(seed)
    a = {(k, n): rng.randint(-2, 2) for n in range(1, 4) for k in range(-1, 4)}
    b = {(k, n): rng.randint(-2, 2) for n in range(2, 4) for k in range(-1, 5)}
    c = Cocycle.from_coefficients(a, b, 3, 2, lead=4)
    cover = cyclic_cover(c, 6)
    assert conjugate_by_scaling(cover, -1).map.raw() == cover.map.raw()


def test_cocycle_text_round_trip(rng):
    c = random_cocycle(rng, 4)
    assert parse_cocycle(format_cocycle(c)).map.raw() == c.map.raw()
    text = "k 1\norder 4\nparams b\nunits theta\nb 2 3 b*theta^-1  # symbolic\n"
    sym = parse_cocycle(text)
    assert sym.table.is_laurent("theta")
    assert parse_cocycle(format_cocycle(sym)).map.raw() == sym.map.raw()


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("k 1\norder x\n", 2),
    ("k 1\norder 3\nq 1 2 3\n", 3),
    ("k 1\norder 3\na 1 2 3\na 1 2 4\n", 4),
    ("k 1\norder 3\na 1 2 (3\n", 3),
])
def test_cocycle_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_cocycle(text)
    assert info.value.line == line


def test_series_indexing():
    s = TransversalSeries.zero(T, 3)
    with pytest.raises(IndexError):
        s[0]
    with pytest.raises(DomainError):
        TransversalSeries((ParamPoly.zero(VarTable(["y"])),))
    assert INVERSION != IDENTITY
