"""The eight acceptance criteria, each timed against its budget.

Run ``pytest tests/test_acceptance.py -s`` (or ``-v``) to see one PASS/FAIL line per criterion.
"""

import random
import time
from contextlib import contextmanager

import pytest

from germfib.algebra import ParamPoly, VarTable, parse_poly
from germfib.fibrations import (
    FAMILY,
    NO_FIBRATION,
    SLICE1,
    UNIQUE,
    detect_fibrations,
    model_double_cover_diagonal,
    model_p2_line,
    obstruction_ideal,
    verify_three_fibrations,
)
from germfib.groebner import Ideal, MonomialOrder, buchberger, clear_laurent, eliminate, reduce
from germfib.normalform import (
    NormalForm,
    ResidualParam,
    act,
    conjugate,
    is_normal_form,
    normalize,
    random_cocycle,
    random_normal_form,
    random_param,
    residual_charts,
)
from germfib.series import X


@contextmanager
def criterion(capsys, number, title, budget):
    """Time the body; print one verdict line; fail on assertion or overrun."""
    start = time.perf_counter()
    error = None
    try:
        yield
    except AssertionError as exc:
        error = exc
    elapsed = time.perf_counter() - start
    ok = error is None and elapsed < budget
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({elapsed:.2f}s, budget {budget:.0f}s)")
    if error is not None:
        raise error
    assert elapsed < budget, f"criterion {number} took {elapsed:.1f}s, over {budget}s"


def symbols(*names, extra=()):
    table = VarTable([*names, *extra, X], ["theta", X])
    return table, [ParamPoly.var(table, n) for n in names]


def test_criterion_1_residual_formulas(capsys):
    with criterion(capsys, 1, "residual-action chart formulas", 1):
        table, (al, be, ga, th) = symbols("alpha", "beta", "gamma", "theta")
        xv = ParamPoly.var(table, X)
        c0, cinf = residual_charts(ResidualParam(al, be, ga, th), NormalForm.from_coefficients({}, {}, 7, table))
        assert c0.map.x_tail[1] == th * (al * xv + be)
        assert cinf.map.x_tail[2] == be**2 * xv + ga * th**-2
        for n in range(1, 8):
            assert c0.map.y_part[n] == th**n * al ** (n - 1)
            assert cinf.map.y_part[n] == be ** (n - 1) * th**-1


def test_criterion_2_closure(capsys):
    rng = random.Random(2)
    with criterion(capsys, 2, "500 random actions stay in normal form", 120):
        for _ in range(500):
            nf = random_normal_form(rng, 7, density=rng.choice([0.3, 0.6, 1.0]))
            assert is_normal_form(act(random_param(rng), nf).cocycle).ok


def test_criterion_3_example_one(capsys):
    with criterion(capsys, 3, "first order-5 example has no fibration", 10):
        table, (al, be, ga, th) = symbols("alpha", "beta", "gamma", "theta")
        nf = NormalForm.from_coefficients({(3, 5): 1}, {}, 5, table)
        acted = act(ResidualParam(al, be, ga, th), nf)
        assert acted.a(3, 4) == -(ga - al * be * th**2) ** 2
        ring = table.without([X]).pure()
        order = MonomialOrder.lex(["gamma", "alpha", "beta", "theta"])
        line = clear_laurent(ga - al * be * th**2, ring)
        assert reduce(clear_laurent(acted.a(3, 5), ring), [line], order) == parse_poly("theta^5", ring)
        numeric = NormalForm.from_coefficients({(3, 5): 1}, {}, 5)
        assert obstruction_ideal(numeric, 5).is_unit()
        assert detect_fibrations(numeric, 5).classification == NO_FIBRATION


def test_criterion_4_example_two(capsys):
    with criterion(capsys, 4, "second order-5 example has the unique witness (0,0,0,1)", 10):
        nf = NormalForm.from_coefficients({}, {(2, 5): 1, (3, 5): 0, (4, 5): 1}, 5)
        r = detect_fibrations(nf, 5, SLICE1)
        assert r.classification == UNIQUE
        assert [w.param.as_rationals() for w in r.witnesses] == [(0, 0, 0, 1)]


def test_criterion_5_three_fibrations(capsys):
    with criterion(capsys, 5, "three-fibration argument through order 7", 600):
        report = verify_three_fibrations(7)
        assert report.ok, report.format()


def test_criterion_6_order_four(capsys):
    rng = random.Random(6)
    with criterion(capsys, 6, "200 random order-4 normal forms all admit a witness", 120):
        for _ in range(200):
            nf = random_normal_form(rng, 4, height=rng.choice([1, 5, 20]))
            r = detect_fibrations(nf, 4, tangencies=False)
            assert r.classification != NO_FIBRATION


def test_criterion_7_models(capsys):
    with criterion(capsys, 7, "line model is a family, double cover has fibrations tangent along C", 60):
        assert detect_fibrations(model_p2_line(5), 5).classification == FAMILY
        r = detect_fibrations(model_double_cover_diagonal(5), 5)
        assert r.count >= 2
        assert r.tangencies and all(str(t.locus) == "all-of-C" for t in r.tangencies)


def test_criterion_8_engine_cross_checks(capsys):
    rng = random.Random(8)
    with criterion(capsys, 8, "normalization recomposition, basis determinism, twisted cubic", 300):
        for _ in range(100):
            c = random_cocycle(rng, rng.randint(3, 7))
            nf, c0, cinf = normalize(c)
            assert conjugate(c.map, c0, cinf).raw() == nf.cocycle.map.raw()
        R = VarTable(["a", "b", "c", "d"])
        gens = [parse_poly(t, R) for t in
                ("a^2*b - c*d + 1", "b^2 - a*d", "c^2*a - b + d^2", "a*b*c*d - 2")]
        ref = buchberger(Ideal(tuple(gens), R))
        for _ in range(10):
            rng.shuffle(gens)
            for sel in ("normal", "first", "last"):
                assert buchberger(Ideal(tuple(gens), R), selection=sel) == ref
        T = VarTable(["x", "y", "z"])
        cubic = Ideal((parse_poly("y - x^2", T), parse_poly("z - x^3", T)), T)
        assert buchberger(eliminate(cubic, ["x"])) == [parse_poly("y^3 - z^2", T)]
