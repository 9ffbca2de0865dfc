"""Shared builders and a sympy oracle for truncated maps."""

import sympy

from germfib.algebra import ParamPoly, as_rational
from germfib.series import IDENTITY, INVERSION, X, ChartChange, TransversalMap, series_table, zeros

xs_, ys_ = sympy.symbols("x y")


def random_chart(rng, order, chart="0", table=None, height=3, degree=2):
    table = table or series_table()
    xs, ys = zeros(table, order), zeros(table, order)
    for n in range(1, order + 1):
        xs[n] = sum((ParamPoly.monomial(table, {X: e}, rng.randint(-height, height)) for e in range(degree + 1)),
                    ParamPoly.zero(table))
        if n > 1:
            ys[n] = sum((ParamPoly.monomial(table, {X: e}, rng.randint(-height, height)) for e in range(degree + 1)),
                        ParamPoly.zero(table))
    ys[1] = ParamPoly.const(table, rng.choice([1, -1, 2, as_rational("1/3")]))
    return ChartChange(chart, TransversalMap.from_raw(IDENTITY, xs, ys))


def to_sympy(p):
    """A ParamPoly in x only, as a sympy expression."""
    i = p.table.index(X)
    return sum(sympy.Rational(int(c.numerator), int(c.denominator)) * xs_ ** exp[i] for exp, c in p)


def map_to_sympy(m):
    m = getattr(m, "map", m)
    base = xs_ if m.base == IDENTITY else 1 / xs_
    X_ = base + sum(to_sympy(m.x_tail[n]) * ys_ ** n for n in range(1, m.order + 1))
    Y_ = sum(to_sympy(m.y_part[n]) * ys_ ** n for n in range(1, m.order + 1))
    return X_, Y_


def sympy_compose(outer, inner, order):
    """Oracle for ``outer o inner``: substitute and expand in y."""
    ox, oy = map_to_sympy(outer)
    ix, iy = map_to_sympy(inner)
    out = []
    for expr in (ox, oy):
        e = expr.subs({xs_: sympy.Symbol("u"), ys_: sympy.Symbol("v")}).subs(
            {sympy.Symbol("u"): ix, sympy.Symbol("v"): iy})
        ser = sympy.series(e, ys_, 0, order + 1).removeO()
        out.append(sympy.expand(ser))
    return out


def same_map(m, exprs):
    mx, my = map_to_sympy(m)
    return sympy.expand(mx - exprs[0]) == 0 and sympy.expand(my - exprs[1]) == 0


def base_of(m):
    return getattr(m, "map", m).base


__all__ = ["INVERSION", "IDENTITY", "random_chart", "sympy_compose", "same_map", "map_to_sympy", "base_of"]


def poly_to_sympy(p):
    """Any ParamPoly (Laurent exponents allowed) as a sympy expression."""
    syms = [sympy.Symbol(n) for n in p.table.names]
    total = sympy.Integer(0)
    for exp, c in p:
        term = sympy.Rational(int(c.numerator), int(c.denominator))
        for s, e in zip(syms, exp):
            term *= s ** e
        total += term
    return total
