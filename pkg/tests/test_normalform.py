import random

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from germfib.algebra import ParamPoly, VarTable
from germfib.errors import DomainError
from germfib.normalform import (
    IDENTITY_PARAM,
    NormalForm,
    ResidualParam,
    act,
    conjugate,
    is_normal_form,
    normalize,
    random_cocycle,
    random_normal_form,
    random_param,
    recover_parameter,
    residual_charts,
)
from germfib.series import X, Cocycle, TransversalMap, compose_all, map_invert

from helpers import poly_to_sympy

seeds = st.integers(0, 10_000)


def test_shape_examples():
    assert is_normal_form(Cocycle.from_coefficients({}, {}, 5, 1)).ok
    assert is_normal_form(Cocycle.from_coefficients({(3, 5): 1}, {}, 5, 1)).ok
    bad = is_normal_form(Cocycle.from_coefficients({(2, 3): 1}, {}, 5, 1))
    assert not bad.ok and bad.offenders == [("a", 2, 3)]


def test_shape_lists_every_offender():
    c = Cocycle.from_coefficients({(0, 1): 1, (4, 4): 2}, {(1, 2): 1, (3, 3): 1}, 4, 1, lead=2)
    offenders = set(is_normal_form(c).offenders)
    assert offenders == {("a", 0, 1), ("a", 4, 4), ("b", 1, 2), ("b", 3, 3), ("b", 1, 1)}


def test_shape_needs_self_intersection_one():
    with pytest.raises(DomainError):
        is_normal_form(Cocycle.from_coefficients({}, {}, 3, 2))


def test_normal_form_rejects_bad_shape():
    with pytest.raises(DomainError):
        NormalForm.from_coefficients({(2, 4): 1}, {}, 4)


def test_normalize_keeps_normal_input(rng):
    nf = random_normal_form(rng, 6)
    result = normalize(nf.cocycle)
    assert result.normal_form.cocycle.map.raw() == nf.cocycle.map.raw()
    ident = TransversalMap.identity(nf.table, 6).raw()
    assert result.chart0.map.raw() == ident and result.chart_inf.map.raw() == ident
    assert result.eliminated == []


def test_normalize_first_order_term():
    # a single linear solve at y-order 1 kills x^-2 y
    c = Cocycle.from_coefficients({(2, 1): 1}, {}, 4, 1)
    nf, c0, cinf = normalize(c)
    assert nf.cocycle.map.x_tail.support() == []
    assert nf.cocycle.map.y_part.support() == [(1, 1)]
    assert conjugate(c.map, c0, cinf).raw() == nf.cocycle.map.raw()
    # 1/(x + y) = 1/x - y/x^2 + ..., so the chart at 0 is (x + y, y) at this order
    assert c0.map.x_tail.support() == [(0, 1)] and c0.map.x_tail.coefficient(0, 1) == 1


@pytest.mark.parametrize("seed", range(5))
def test_normalize_dense_order_seven(seed):
    c = random_cocycle(random.Random(seed), 7)
    nf, c0, cinf = normalize(c)
    assert is_normal_form(nf.cocycle).ok
    assert conjugate(c.map, c0, cinf, 7).raw() == nf.cocycle.map.raw()


def test_normalize_report_lists_eliminations():
    c = Cocycle.from_coefficients({(2, 1): 1, (0, 3): 5}, {}, 4, 1)
    lines = normalize(c).report().splitlines()
    assert lines[0].startswith("#")
    assert "1 a 2 1 0" in lines and "3 a 0 5 0" in lines


def test_normalize_order_beyond_truncation():
    with pytest.raises(DomainError):
        normalize(Cocycle.from_coefficients({}, {}, 3, 1), 5)


def test_identity_parameter_gives_identity_charts(rng):
    nf = random_normal_form(rng, 7)
    c0, cinf = residual_charts(IDENTITY_PARAM, nf)
    ident = TransversalMap.identity(c0.map.table, 7).raw()
    assert c0.map.raw() == ident and cinf.map.raw() == ident


def _formula_oracle(N):
    """The closed-form chart coefficients, transcribed into sympy."""
    al, be, ga, th, x = sympy.symbols("alpha beta gamma theta x")

    def b(k, n):
        return sympy.Symbol(f"b_{k}_{n}") if n >= 3 and 2 <= k <= n - 1 else 0

    a0, ainf, b0, binf = {}, {}, {}, {}
    a0[1], ainf[1] = th * (al * x + be), be * x + al
    a0[2], ainf[2] = al**2 * th**2 * x + ga, be**2 * x + ga / th**2
    for n in range(3, N + 1):
        a0[n] = (al * th) ** n * x + ga * (th * al) ** (n - 2) + th**n * sum(
            sympy.binomial(n - 2, k - 1) * al**k * b(2, n - k + 1) for k in range(1, n - 1))
        ainf[n] = (be**n * x + (n - 1) * be ** (n - 2) * ga / th**2 - (n - 2) * al * be ** (n - 1)
                   - sum(k * be**k * b(n - k, n - k + 1) for k in range(1, n - 1)))
    for n in range(1, N + 1):
        b0[n], binf[n] = th**n * al ** (n - 1), be ** (n - 1) / th
    return a0, ainf, b0, binf


def test_residual_charts_match_closed_forms():
    N = 7
    names = ["alpha", "beta", "gamma", "theta"]
    bnames = [f"b_{k}_{n}" for n in range(3, N + 1) for k in range(2, n)]
    table = VarTable(names + bnames + [X], ["theta", X])
    b = {(k, n): ParamPoly.var(table, f"b_{k}_{n}") for n in range(3, N + 1) for k in range(2, n)}
    nf = NormalForm.from_coefficients({}, b, N, table)
    A = ResidualParam(*(ParamPoly.var(table, n) for n in names))
    c0, cinf = residual_charts(A, nf)
    a0, ainf, b0, binf = _formula_oracle(N)
    for n in range(1, N + 1):
        for got, want in ((c0.map.x_tail[n], a0[n]), (cinf.map.x_tail[n], ainf[n]),
                          (c0.map.y_part[n], b0[n]), (cinf.map.y_part[n], binf[n])):
            assert sympy.simplify(poly_to_sympy(got) - want) == 0, n


def _symbolic_table(extra=()):
    return VarTable(["alpha", "beta", "gamma", "theta", *extra, X], ["theta", X])


def test_act_example_one():
    table = _symbolic_table()
    al, be, ga, th = (ParamPoly.var(table, n) for n in ("alpha", "beta", "gamma", "theta"))
    nf = NormalForm.from_coefficients({(3, 5): 1}, {}, 5, table)
    assert act(ResidualParam(al, be, ga, th), nf).a(3, 4) == -(ga - al * be * th**2) ** 2
    on_curve = act(ResidualParam(al, be, al * be * th**2, th), nf)
    assert on_curve.a(3, 4).is_zero() and on_curve.a(3, 5) == th**5


def test_act_example_two():
    table = _symbolic_table(["b_2_5", "b_3_5", "b_4_5"])
    al, be, b25, b35, b45 = (ParamPoly.var(table, n) for n in ("alpha", "beta", "b_2_5", "b_3_5", "b_4_5"))
    nf = NormalForm.from_coefficients({}, {(2, 5): b25, (3, 5): b35, (4, 5): b45}, 5, table)
    out = act(ResidualParam(al, be, al * be, 1), nf)
    assert out.a(3, 5) == al * b35 + be * b25
    assert out.a(4, 5) == al * b45 + be * b35


@given(seeds)
def test_act_preserves_normal_form(seed):
    rng = random.Random(seed)
    nf = random_normal_form(rng, 6, density=0.6)
    assert is_normal_form(act(random_param(rng), nf).cocycle).ok


@given(seeds)
def test_act_is_undone_by_inverse_charts(seed):
    rng = random.Random(seed)
    nf = random_normal_form(rng, 6, density=0.6)
    A = random_param(rng)
    c0, cinf = residual_charts(A, nf)
    image = act(A, nf)
    back = compose_all(map_invert(cinf.map), image.cocycle.map, map_invert(c0.map), order=6)
    assert back.raw() == nf.cocycle.map.raw()


@given(seeds)
def test_recover_parameter_reads_chart(seed):
    rng = random.Random(seed)
    A = random_param(rng)
    c0, _ = residual_charts(A, random_normal_form(rng, 4))
    assert recover_parameter(c0).as_rationals() == A.as_rationals()


def test_residual_param_needs_unit_theta():
    with pytest.raises(DomainError):
        ResidualParam(1, 2, 3, 0)
    table = VarTable(["t"])
    with pytest.raises(DomainError):
        ResidualParam(0, 0, 0, ParamPoly.var(table, "t"))
    sym = ResidualParam.symbolic("1")
    assert sym.theta.table.is_laurent("theta1")
