"""Normal form of cocycles with self-intersection 1 and its residual action.

A cocycle is in normal form when it reads

    x_inf = 1/x + sum_{n>=4} sum_{k=3}^{n-1} a_{k,n} x^-k y^n
    y_inf = y/x + sum_{n>=3} sum_{k=2}^{n-1} b_{k,n} x^-k y^n

:func:`normalize` reaches this shape one y-order at a time. At order ``n`` the
chart changes ``(x + p y^n, y + q y^n)`` at 0 and ``(x + r y^n, y + s y^n)`` at
infinity shift the order-n coefficients by

    a_n -> a_n - p(x)/x^2 + r(1/x)/x^n
    b_n -> b_n + q(x)/x   + s(1/x)/x^n

so every monomial outside the window is removed by exactly one chart
monomial. Where both charts reach (orders 1 and 2 of the x-part) chart 0 is
used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .algebra import ParamPoly, VarTable, as_rational, binomial
from .errors import DomainError, EngineDefect
from .series import (
    IDENTITY,
    INVERSION,
    X,
    CancelToken,
    ChartChange,
    Cocycle,
    TransversalMap,
    compose_all,
    ensure_x,
    invert_x,
    map_compose,
    series_table,
    shift_x,
    x_coefficient,
    zeros,
)

PARAM_NAMES = ("alpha", "beta", "gamma", "theta")


class ShapeCheck(NamedTuple):
    ok: bool
    offenders: list


def _a_allowed(k: int, n: int) -> bool:
    return n >= 4 and 3 <= k <= n - 1


def _b_allowed(k: int, n: int) -> bool:
    return n >= 3 and 2 <= k <= n - 1


def is_normal_form(c: Cocycle) -> ShapeCheck:
    """Shape predicate; offenders are ``(part, k, n)`` for coefficients of ``x^-k y^n``."""
    if c.self_intersection != 1:
        raise DomainError("the normal form is defined for self-intersection 1")
    offenders = []
    for k, n in c.map.x_tail.support():
        if not _a_allowed(k, n):
            offenders.append(("a", k, n))
    for k, n in c.map.y_part.support():
        if n == 1:
            if k != 1 or c.b(1, 1) != 1:
                offenders.append(("b", k, n))
        elif not _b_allowed(k, n):
            offenders.append(("b", k, n))
    return ShapeCheck(not offenders, offenders)


@dataclass(frozen=True)
class NormalForm:
    cocycle: Cocycle
    order: int = None

    def __post_init__(self):
        if self.order is None:
            object.__setattr__(self, "order", self.cocycle.order)
        if self.cocycle.order != self.order:
            object.__setattr__(self, "cocycle", self.cocycle.truncate(self.order))
        ok, offenders = is_normal_form(self.cocycle)
        if not ok:
            raise DomainError(f"cocycle is not in normal form; offending (part, k, n): {offenders}")

    @classmethod
    def from_coefficients(cls, a: dict, b: dict, order: int, table: VarTable | None = None) -> "NormalForm":
        return cls(Cocycle.from_coefficients(a, b, order, 1, table), order)

    @property
    def table(self) -> VarTable:
        return self.cocycle.table

    def a(self, k: int, n: int) -> ParamPoly:
        return self.cocycle.a(k, n) if n <= self.order else ParamPoly.zero(self.table)

    def b(self, k: int, n: int) -> ParamPoly:
        return self.cocycle.b(k, n) if n <= self.order else ParamPoly.zero(self.table)

    def a_coefficients(self) -> dict:
        return {(k, n): self.a(k, n) for n in range(4, self.order + 1) for k in range(3, n)}

    def b_coefficients(self) -> dict:
        return {(k, n): self.b(k, n) for n in range(3, self.order + 1) for k in range(2, n)}

    def truncate(self, order: int) -> "NormalForm":
        return NormalForm(self.cocycle.truncate(order), order)

    def lift(self, table: VarTable) -> "NormalForm":
        return NormalForm(self.cocycle.lift(table), self.order)


@dataclass(frozen=True)
class ResidualParam:
    """Parameters ``(alpha, beta, gamma, theta)`` of a normal-form preserving chart pair."""

    alpha: object = 0
    beta: object = 0
    gamma: object = 0
    theta: object = 1

    def __post_init__(self):
        th = self.theta
        if isinstance(th, ParamPoly):
            if not th.is_unit():
                raise DomainError(f"theta = {th} is not invertible")
        elif as_rational(th) == 0:
            raise DomainError("theta must be nonzero")

    @classmethod
    def symbolic(cls, suffix: str = "", table: VarTable | None = None) -> "ResidualParam":
        names = [p + suffix for p in PARAM_NAMES]
        table = table or VarTable(names, [names[3]])
        return cls(*(ParamPoly.var(table, n) for n in names))

    def values(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.theta)

    def tables(self) -> list:
        return [v.table for v in self.values() if isinstance(v, ParamPoly)]

    def polys(self, table: VarTable) -> tuple:
        return tuple(v.lift(table) if isinstance(v, ParamPoly) else ParamPoly.const(table, v)
                     for v in self.values())

    def is_rational(self) -> bool:
        return all(not isinstance(v, ParamPoly) or v.is_constant() for v in self.values())

    def as_rationals(self) -> tuple:
        return tuple(v.constant_value() if isinstance(v, ParamPoly) else as_rational(v)
                     for v in self.values())

    def __str__(self):
        return "(" + ", ".join(str(v) for v in self.values()) + ")"


IDENTITY_PARAM = ResidualParam(0, 0, 0, 1)


@dataclass
class Normalization:
    """Result of :func:`normalize`; unpacks as ``(normal_form, chart0, chart_inf)``."""

    normal_form: NormalForm
    chart0: ChartChange
    chart_inf: ChartChange
    eliminated: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.normal_form, self.chart0, self.chart_inf))

    def report(self) -> str:
        lines = ["# eliminated monomials: order part k coefficient chart"]
        for n, part, k, coef, chart in self.eliminated:
            lines.append(f"{n} {part} {k} {coef} {chart}")
        return "\n".join(lines) + "\n"


def _chart(chart: str, table: VarTable, order: int, xs=None, ys=None) -> ChartChange:
    xs = xs or zeros(table, order)
    if ys is None:
        ys = zeros(table, order)
        ys[1] = ParamPoly.const(table, 1)
    return ChartChange(chart, TransversalMap.from_raw(IDENTITY, xs, ys))


def normalize(c: Cocycle, order: int | None = None, *, cancel: CancelToken | None = None) -> Normalization:
    """Reduce a cocycle with ``C^2 = 1`` to normal form.

    Returns the normal form and charts with
    ``chart_inf o c o chart0 == normal_form`` through ``y**order``.
    """
    if c.self_intersection != 1:
        raise DomainError("normalize needs self-intersection 1; take cyclic_cover first")
    order = c.order if order is None else order
    if order > c.order:
        raise DomainError(f"order {order} exceeds cocycle truncation {c.order}")
    table = c.table
    current = c.map.truncate(order)
    steps0, steps_inf, eliminated = [], [], []

    unit = x_coefficient(current.y_part[1], -1)
    if unit != 1:
        ys = zeros(table, order)
        ys[1] = unit.unit_inverse()
        scale = _chart("0", table, order, ys=ys)
        current = map_compose(current, scale.map, order)
        steps0.append(scale.map)
        eliminated.append((1, "b", 1, unit, "0"))

    for n in range(1, order + 1):
        if cancel:
            cancel.check()
        p = q = r = s = ParamPoly.zero(table)
        for e, coef in current.x_tail[n].by_var(X).items():
            k = -e
            if e >= -2:
                p = p + shift_x(coef, e + 2)
                eliminated.append((n, "a", k, coef, "0"))
            elif e <= -n:
                r = r - shift_x(coef, -(e + n))
                eliminated.append((n, "a", k, coef, "inf"))
        if n >= 2:
            for e, coef in current.y_part[n].by_var(X).items():
                k = -e
                if e >= -1:
                    q = q - shift_x(coef, e + 1)
                    eliminated.append((n, "b", k, coef, "0"))
                elif e <= -n:
                    s = s - shift_x(coef, -(e + n))
                    eliminated.append((n, "b", k, coef, "inf"))
        if p.is_zero() and q.is_zero() and r.is_zero() and s.is_zero():
            continue
        pieces = []
        for tail, lin in ((p, q), (r, s)):
            xs, ys = zeros(table, order), zeros(table, order)
            ys[1] = ParamPoly.const(table, 1)
            xs[n] = xs[n] + tail
            ys[n] = ys[n] + lin
            pieces.append(TransversalMap.from_raw(IDENTITY, xs, ys))
        step0, step_inf = pieces
        current = compose_all(step_inf, current, step0, order=order, cancel=cancel)
        steps0.append(step0)
        steps_inf.append(step_inf)

    result = Cocycle(current, 1)
    check = is_normal_form(result)
    if not check.ok:
        raise EngineDefect(f"normalization left out-of-window monomials {check.offenders}")
    identity = TransversalMap.identity(table, order)
    chart0 = compose_all(*steps0, order=order) if steps0 else identity
    chart_inf = compose_all(*reversed(steps_inf), order=order) if steps_inf else identity
    return Normalization(NormalForm(result, order), ChartChange("0", chart0),
                         ChartChange("inf", chart_inf), eliminated)


def residual_charts(A: ResidualParam, nf: NormalForm, order: int | None = None):
    """Chart pair ``(chart0, chart_inf)`` attached to ``A``, in closed form.

    The coefficients follow the classical formulas; they read ``b_{2,m}`` and
    ``b_{m-1,m}`` from ``nf``.
    """
    order = nf.order if order is None else order
    table = ensure_x(VarTable.merge(nf.table, *A.tables()))
    nf = nf.lift(table)
    al, be, ga, th = A.polys(table)
    th_inv = th.unit_inverse()
    xv = ParamPoly.var(table, X)

    def b(k, n):
        return nf.b(k, n)

    a0, ainf = zeros(table, order), zeros(table, order)
    b0, binf = zeros(table, order), zeros(table, order)
    for n in range(1, order + 1):
        if n == 1:
            a0[1] = th * (al * xv + be)
            ainf[1] = be * xv + al
        elif n == 2:
            a0[2] = al ** 2 * th ** 2 * xv + ga
            ainf[2] = be ** 2 * xv + ga * th_inv ** 2
        else:
            tail = ga * (th * al) ** (n - 2)
            tail = tail + th ** n * sum(
                (al ** k * b(2, n - k + 1) * binomial(n - 2, k - 1) for k in range(1, n - 1)),
                ParamPoly.zero(table))
            a0[n] = (al * th) ** n * xv + tail
            tail_inf = (be ** (n - 2) * ga * th_inv ** 2 * (n - 1)
                        - al * be ** (n - 1) * (n - 2)
                        - sum((be ** k * b(n - k, n - k + 1) * k for k in range(1, n - 1)),
                              ParamPoly.zero(table)))
            ainf[n] = be ** n * xv + tail_inf
        b0[n] = th ** n * al ** (n - 1)
        binf[n] = be ** (n - 1) * th_inv
    return (ChartChange("0", TransversalMap.from_raw(IDENTITY, a0, b0)),
            ChartChange("inf", TransversalMap.from_raw(IDENTITY, ainf, binf)))


def act(A: ResidualParam, nf: NormalForm, *, cancel: CancelToken | None = None) -> NormalForm:
    """Apply the residual chart pair of ``A``: ``chart_inf o nf o chart0``.

    The result is asserted to be in normal form; a failure is an engine defect.
    """
    chart0, chart_inf = residual_charts(A, nf)
    table = chart0.map.table
    m = compose_all(chart_inf, nf.cocycle.lift(table), chart0, order=nf.order, cancel=cancel)
    c = Cocycle(m, 1)
    check = is_normal_form(c)
    if not check.ok:
        raise EngineDefect(f"residual action left normal form at {check.offenders} for A = {A}")
    return NormalForm(c, nf.order)


def conjugate(c, chart0, chart_inf, order: int | None = None) -> TransversalMap:
    """``chart_inf o c o chart0``."""
    return compose_all(chart_inf, c, chart0, order=order)


def recover_parameter(chart0: ChartChange) -> ResidualParam:
    """Read ``(alpha, beta, gamma, theta)`` off the order-1 and order-2 data of a chart at 0."""
    m = chart0.map
    theta = x_coefficient(m.y_part[1], 0)
    if not theta.is_unit():
        raise DomainError("chart has no invertible linear part")
    inv = theta.unit_inverse()
    a1 = m.x_tail[1]
    alpha = x_coefficient(a1, 1) * inv
    beta = x_coefficient(a1, 0) * inv
    gamma = x_coefficient(m.x_tail[2], 0) if m.order >= 2 else ParamPoly.zero(m.table)
    return ResidualParam(_simplify(alpha), _simplify(beta), _simplify(gamma), _simplify(theta))


def _simplify(p: ParamPoly):
    return p.constant_value() if p.is_constant() else p


def random_normal_form(rng, order: int = 7, *, height: int = 5, density: float = 1.0,
                       with_a: bool = True) -> NormalForm:
    """Random rational normal form (coefficients p/q with |p| <= height, 1 <= q <= 3)."""
    def coef():
        if rng.random() > density:
            return 0
        return as_rational(rng.randint(-height, height)) / rng.randint(1, 3)

    a = {(k, n): coef() for n in range(4, order + 1) for k in range(3, n)} if with_a else {}
    b = {(k, n): coef() for n in range(3, order + 1) for k in range(2, n)}
    return NormalForm.from_coefficients(a, b, order)


def random_cocycle(rng, order: int = 7, *, height: int = 3, kmin: int = -2, kmax: int | None = None) -> Cocycle:
    """Random rational cocycle with ``C^2 = 1`` and arbitrary Laurent supports."""
    table = series_table()
    a, b = {}, {}
    for n in range(1, order + 1):
        top = n + 2 if kmax is None else kmax
        for k in range(kmin, top + 1):
            if rng.random() < 0.5:
                a[(k, n)] = rng.randint(-height, height)
            if n >= 2 and rng.random() < 0.5:
                b[(k, n)] = rng.randint(-height, height)
    lead = as_rational(rng.choice([1, -1, 2, -3])) / rng.choice([1, 2])
    return Cocycle.from_coefficients(a, b, order, 1, table, lead=lead)


def random_param(rng, height: int = 3) -> ResidualParam:
    def r():
        return as_rational(rng.randint(-height, height)) / rng.randint(1, 2)

    theta = 0
    while theta == 0:
        theta = r()
    return ResidualParam(r(), r(), r(), theta)
