"""Truncated transversal series and the formal maps built from them.

A series in ``y`` is stored as a list of :class:`ParamPoly` coefficients
``c_0(x), ..., c_N(x)`` where every coefficient is a Laurent polynomial in the
curve coordinate ``x`` (the table variable named ``x``) with symbolic
parameters. Maps fix the curve ``{y = 0}``: the x-component is
``x`` or ``1/x`` plus a y-dependent tail, and the y-component starts at ``y``.

Composition substitutes ``X = x + h(y)`` (or ``1/x + h(y)``) into Laurent
coefficients through their Taylor expansion, which terminates at the
truncation order because ``h = O(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .algebra import (
    ParamPoly,
    VarTable,
    as_rational,
    binomial,
    format_poly,
    identifiers,
    parse_poly,
    rational_root,
)
from .errors import Cancelled, DomainError, ParseError, TruncationWindowError

X = "x"
IDENTITY = "identity"
INVERSION = "inversion"
DEFAULT_ORDER = 7
EXPONENT_CAP = 64


class CancelToken:
    """Cooperative cancellation flag checked between truncation orders."""

    def __init__(self):
        self._cancelled = False

    def cancel(self):
        self._cancelled = True

    @property
    def cancelled(self) -> bool:
        return self._cancelled

    def check(self):
        if self._cancelled:
            raise Cancelled("computation cancelled by caller")


def series_table(params: Sequence[str] = (), units: Sequence[str] = ()) -> VarTable:
    """Variable table for series coefficients: parameters followed by ``x``."""
    names = [p for p in params if p != X] + [u for u in units if u not in params and u != X]
    return VarTable(names + [X], set(units) | {X})


def ensure_x(table: VarTable) -> VarTable:
    if X not in table:
        return table.extend(laurent=[X])
    if not table.is_laurent(X):
        raise DomainError("the curve coordinate x must be a Laurent variable")
    return table


@lru_cache(maxsize=4096)
def xpow(table: VarTable, e: int) -> ParamPoly:
    return ParamPoly.monomial(table, {X: e})


def shift_x(p: ParamPoly, k: int) -> ParamPoly:
    """Multiply by ``x**k``."""
    if not k or p.is_zero():
        return p
    i = p.table.index(X)
    terms = {exp[:i] + (exp[i] + k,) + exp[i + 1:]: c for exp, c in p}
    return ParamPoly(p.table, terms, _trusted=True)


def invert_x(p: ParamPoly) -> ParamPoly:
    """Substitute ``x -> 1/x``."""
    if p.is_zero():
        return p
    i = p.table.index(X)
    terms = {exp[:i] + (-exp[i],) + exp[i + 1:]: c for exp, c in p}
    return ParamPoly(p.table, terms, _trusted=True)


def x_coefficient(p: ParamPoly, e: int) -> ParamPoly:
    """Coefficient of ``x**e`` (a polynomial in the parameters only)."""
    return p.coefficient(X, e)


# raw series kernels ------------------------------------------------------

def zeros(table: VarTable, n: int) -> list:
    z = ParamPoly.zero(table)
    return [z] * (n + 1)


def one_series(table: VarTable, n: int) -> list:
    s = zeros(table, n)
    s[0] = ParamPoly.const(table, 1)
    return s


def smul(a: Sequence[ParamPoly], b: Sequence[ParamPoly], n: int) -> list:
    """Product of two raw series truncated at ``y**n``."""
    table = a[0].table
    out = zeros(table, n)
    nz_a = [(i, c) for i, c in enumerate(a[: n + 1]) if not c.is_zero()]
    nz_b = [(j, c) for j, c in enumerate(b[: n + 1]) if not c.is_zero()]
    for i, ca in nz_a:
        for j, cb in nz_b:
            if i + j > n:
                break
            out[i + j] = out[i + j] + ca * cb
    return out


def sadd(a, b, n: int) -> list:
    return [a[i] + b[i] for i in range(n + 1)]


def spowers(s: Sequence[ParamPoly], m: int, n: int) -> list:
    """``[s**0, ..., s**m]`` truncated at ``y**n``."""
    table = s[0].table
    out = [one_series(table, n)]
    for _ in range(m):
        out.append(smul(out[-1], s, n))
    return out


def _taylor_substitute(f: ParamPoly, base: str, hpow: list, n: int) -> list:
    """Raw series of ``f(base(x) + h)`` truncated at ``y**n``; ``hpow[j] = h**j``."""
    table = f.table
    out = zeros(table, n)
    parts = f.by_var(X)
    for j in range(n + 1):
        h_j = hpow[j]
        if all(c.is_zero() for c in h_j[: n + 1]):
            continue
        tj = ParamPoly.zero(table)
        for e, c in parts.items():
            coef = binomial(e, j)
            if coef:
                shift = e - j if base == IDENTITY else j - e
                tj = tj + shift_x(c, shift) * coef
        if tj.is_zero():
            continue
        for i in range(j, n + 1):
            if not h_j[i].is_zero():
                out[i] = out[i] + tj * h_j[i]
    return out


def _base_poly(table: VarTable, base: str) -> ParamPoly:
    return xpow(table, 1 if base == IDENTITY else -1)


def _check_window(series_list, cap: int):
    for s in series_list:
        for c in s:
            for exp, _ in c:
                e = exp[c.table.index(X)]
                if abs(e) > cap:
                    raise TruncationWindowError(
                        f"x-exponent {e} exceeds the window cap {cap}; raise the cap or lower the order")


def compose_raw(outer, inner, n: int, cap: int = EXPONENT_CAP, cancel: CancelToken | None = None):
    """Compose raw maps ``(base, xs, ys)``; returns ``(base, xs, ys)`` truncated at ``y**n``.

    ``xs`` holds the x-tail with ``xs[0]`` ignored, ``ys[0]`` must vanish.
    """
    out_base, out_x, out_y = outer
    in_base, in_x, in_y = inner
    table = out_x[0].table
    z = ParamPoly.zero(table)
    h = [z] + list(in_x[1: n + 1])
    yy = [z] + list(in_y[1: n + 1])
    hpow = spowers(h, n, n)
    ypow = spowers(yy, n, n)
    rx = zeros(table, n)
    ry = zeros(table, n)
    x_terms = [(0, _base_poly(table, out_base))] + [(m, out_x[m]) for m in range(1, n + 1)]
    for m, f in x_terms:
        if cancel:
            cancel.check()
        if f.is_zero():
            continue
        fs = _taylor_substitute(f, in_base, hpow, n - m)
        rx = sadd(rx, smul(fs + [z] * m, ypow[m], n), n)
    for m in range(1, n + 1):
        if cancel:
            cancel.check()
        g = out_y[m]
        if g.is_zero():
            continue
        gs = _taylor_substitute(g, in_base, hpow, n - m)
        ry = sadd(ry, smul(gs + [z] * m, ypow[m], n), n)
    base = IDENTITY if out_base == in_base else INVERSION
    expected0 = _base_poly(table, base)
    if rx[0] != expected0 or not ry[0].is_zero():
        raise TruncationWindowError("composite does not restrict to the expected base map")
    _check_window((rx, ry), cap)
    return base, rx, ry


# typed objects -----------------------------------------------------------

@dataclass(frozen=True)
class TransversalSeries:
    """Coefficients ``c_1(x), ..., c_N(x)`` of a series truncated at ``y**N``."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs:
            raise DomainError("a transversal series needs order N >= 1")
        table = coeffs[0].table
        if any(c.table != table for c in coeffs):
            raise DomainError("series coefficients must share one variable table")
        if X not in table or not table.is_laurent(X):
            raise DomainError("series coefficients need a Laurent variable named x")

    @classmethod
    def from_raw(cls, raw: Sequence[ParamPoly], order: int | None = None) -> "TransversalSeries":
        order = len(raw) - 1 if order is None else order
        return cls(tuple(raw[1: order + 1]))

    @classmethod
    def zero(cls, table: VarTable, order: int) -> "TransversalSeries":
        return cls((ParamPoly.zero(table),) * order)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def table(self) -> VarTable:
        return self.coeffs[0].table

    def __getitem__(self, n: int) -> ParamPoly:
        if n < 1:
            raise IndexError("transversal series are indexed from y**1")
        if n > self.order:
            raise IndexError(f"y-order {n} beyond truncation {self.order}")
        return self.coeffs[n - 1]

    def raw(self, order: int | None = None) -> list:
        order = self.order if order is None else order
        if order > self.order:
            raise DomainError(f"requested order {order} exceeds truncation {self.order}")
        return [ParamPoly.zero(self.table)] + list(self.coeffs[:order])

    def truncate(self, order: int) -> "TransversalSeries":
        return TransversalSeries.from_raw(self.raw(order))

    def lift(self, table: VarTable) -> "TransversalSeries":
        return TransversalSeries(tuple(c.lift(table) for c in self.coeffs))

    def coefficient(self, k: int, n: int) -> ParamPoly:
        """Coefficient of ``x**(-k) * y**n``."""
        return x_coefficient(self[n], -k)

    def support(self) -> list:
        """Nonzero ``(k, n)`` pairs, sorted by ``(n, k)``."""
        out = []
        for n, c in enumerate(self.coeffs, start=1):
            for e in c.by_var(X):
                out.append((-e, n))
        return sorted(out, key=lambda kn: (kn[1], kn[0]))


@dataclass(frozen=True)
class TransversalMap:
    """``(base(x) + sum a_n(x) y^n, sum b_n(x) y^n)`` with ``base`` identity or inversion."""

    base: str
    x_tail: TransversalSeries
    y_part: TransversalSeries

    def __post_init__(self):
        if self.base not in (IDENTITY, INVERSION):
            raise DomainError(f"unknown base map {self.base!r}")
        if self.x_tail.order != self.y_part.order:
            raise DomainError("x-tail and y-part must share the truncation order")
        if self.x_tail.table != self.y_part.table:
            raise DomainError("x-tail and y-part must share one variable table")
        lead = self.y_part[1]
        if not lead.is_unit():
            raise DomainError(f"leading y-coefficient {lead} is not a unit monomial: the map is not transverse")

    @classmethod
    def from_raw(cls, base, xs, ys, order: int | None = None) -> "TransversalMap":
        return cls(base, TransversalSeries.from_raw(xs, order), TransversalSeries.from_raw(ys, order))

    @classmethod
    def identity(cls, table: VarTable, order: int) -> "TransversalMap":
        table = ensure_x(table)
        ys = zeros(table, order)
        ys[1] = ParamPoly.const(table, 1)
        return cls.from_raw(IDENTITY, zeros(table, order), ys)

    @property
    def order(self) -> int:
        return self.x_tail.order

    @property
    def table(self) -> VarTable:
        return self.x_tail.table

    def raw(self, order: int | None = None):
        return self.base, self.x_tail.raw(order), self.y_part.raw(order)

    def truncate(self, order: int) -> "TransversalMap":
        return TransversalMap(self.base, self.x_tail.truncate(order), self.y_part.truncate(order))

    def lift(self, table: VarTable) -> "TransversalMap":
        if table == self.table:
            return self
        return TransversalMap(self.base, self.x_tail.lift(table), self.y_part.lift(table))


@dataclass(frozen=True)
class Cocycle:
    """Gluing map of a germ ``(U, C)`` with ``C**2 = self_intersection``."""

    map: TransversalMap
    self_intersection: int = 1

    def __post_init__(self):
        k = self.self_intersection
        if not isinstance(k, int) or k < 1:
            raise DomainError("self-intersection must be an integer >= 1")
        if self.map.base != INVERSION:
            raise DomainError("a cocycle's x-component must start with 1/x")
        lead = self.map.y_part[1]
        parts = lead.by_var(X)
        if list(parts) != [-k]:
            raise DomainError(f"leading y-coefficient {lead} is not a unit times x^-{k}")

    @classmethod
    def from_coefficients(cls, a: dict, b: dict, order: int, k: int = 1, table: VarTable | None = None,
                          lead=1) -> "Cocycle":
        """Build from ``{(k, n): coeff}`` dictionaries (coefficients of ``x^-k y^n``)."""
        table = ensure_x(table or series_table())
        xs, ys = zeros(table, order), zeros(table, order)
        lead = lead if isinstance(lead, ParamPoly) else ParamPoly.const(table, lead)
        ys[1] = shift_x(lead, -k)
        for part, dest in ((a, xs), (b, ys)):
            for (kk, n), c in part.items():
                if n > order:
                    continue
                if n < 1:
                    raise DomainError("coefficients start at y**1")
                c = c if isinstance(c, ParamPoly) else ParamPoly.const(table, c)
                dest[n] = dest[n] + shift_x(c, -kk)
        return cls(TransversalMap.from_raw(INVERSION, xs, ys), k)

    @property
    def order(self) -> int:
        return self.map.order

    @property
    def table(self) -> VarTable:
        return self.map.table

    def a(self, k: int, n: int) -> ParamPoly:
        return self.map.x_tail.coefficient(k, n)

    def b(self, k: int, n: int) -> ParamPoly:
        return self.map.y_part.coefficient(k, n)

    def truncate(self, order: int) -> "Cocycle":
        return Cocycle(self.map.truncate(order), self.self_intersection)

    def lift(self, table: VarTable) -> "Cocycle":
        return Cocycle(self.map.lift(table), self.self_intersection)


@dataclass(frozen=True)
class ChartChange:
    """Coordinate change in chart ``0`` or ``inf`` fixing the curve pointwise."""

    chart: str
    map: TransversalMap

    def __post_init__(self):
        if self.chart not in ("0", "inf"):
            raise DomainError(f"chart must be '0' or 'inf', got {self.chart!r}")
        m = self.map
        if m.base != IDENTITY:
            raise DomainError("a chart change restricts to the identity on the curve")
        lead = m.y_part[1]
        if lead.degree(X) != 0 or lead.min_degree(X) != 0:
            raise DomainError("the leading y-coefficient of a chart change may not depend on x")
        for s in (m.x_tail, m.y_part):
            for c in s.coeffs:
                if c.min_degree(X) < 0:
                    raise DomainError("chart-change coefficients must be polynomial in x")

    @property
    def order(self) -> int:
        return self.map.order


def _unwrap(m):
    return m.map if isinstance(m, (Cocycle, ChartChange)) else m


def _common(*maps):
    table = VarTable.merge(*(m.table for m in maps))
    return table, [m.lift(table) for m in maps]


def map_compose(outer, inner, order: int | None = None, *, cap: int = EXPONENT_CAP,
                cancel: CancelToken | None = None) -> TransversalMap:
    """``outer o inner`` truncated at ``y**order``."""
    outer, inner = _unwrap(outer), _unwrap(inner)
    order = min(outer.order, inner.order) if order is None else order
    if order > outer.order or order > inner.order:
        raise DomainError(f"order {order} exceeds operand truncation ({outer.order}, {inner.order})")
    _, (outer, inner) = _common(outer, inner)
    base, xs, ys = compose_raw(outer.raw(order), inner.raw(order), order, cap, cancel)
    return TransversalMap.from_raw(base, xs, ys)


def compose_all(*maps, order: int | None = None, cancel: CancelToken | None = None) -> TransversalMap:
    """``maps[0] o maps[1] o ... o maps[-1]``."""
    maps = [_unwrap(m) for m in maps]
    order = min(m.order for m in maps) if order is None else order
    result = maps[-1]
    for m in reversed(maps[:-1]):
        result = map_compose(m, result, order, cancel=cancel)
    return result


def map_invert(m, order: int | None = None) -> TransversalMap:
    """Two-sided inverse, refined one y-order at a time."""
    m = _unwrap(m)
    order = m.order if order is None else order
    table = m.table
    lead = m.y_part[1]
    if not lead.is_unit():
        raise DomainError("leading y-coefficient is not a unit")
    base = m.base
    flip = invert_x if base == INVERSION else (lambda p: p)
    outer = m.raw(order)
    # at y = 0 the inverse's x-component is base(x); base is an involution
    lead_at = flip(lead)
    lead_inv = lead_at.unit_inverse()
    f1_at = flip(m.x_tail[1])
    xs, ys = zeros(table, order), zeros(table, order)
    ys[1] = lead_inv
    for n in range(1, order + 1):
        _, ex, ey = compose_raw(outer, (base, xs, ys), n)
        ex_n = ex[n]
        ey_n = ey[n] - (1 if n == 1 else 0)
        dy = -ey_n * lead_inv
        rhs = ex_n + f1_at * dy
        if base == IDENTITY:
            dx = -rhs
        else:
            # derivative of 1/X at X = 1/x is -x**2
            dx = shift_x(rhs, -2)
        xs[n] = xs[n] + dx
        ys[n] = ys[n] + dy
    return TransversalMap.from_raw(base, xs, ys)


def series_root(u, k: int, order: int | None = None) -> TransversalSeries:
    """``(1 + sum c_n y^n) ** (1/k)`` truncated at ``y**order``.

    ``u`` is a :class:`TransversalSeries` (constant term 1 implied) or a raw
    sequence ``[c_0, c_1, ...]`` whose constant term must equal 1.
    """
    if not isinstance(k, int) or k < 2:
        raise DomainError("root index must be an integer >= 2")
    if isinstance(u, TransversalSeries):
        raw = u.raw()
    else:
        raw = list(u)
        if not raw or raw[0] != 1:
            raise DomainError("series_root needs constant term 1")
    order = len(raw) - 1 if order is None else order
    if order > len(raw) - 1:
        raise DomainError("requested order exceeds the input truncation")
    table = raw[0].table
    w = [ParamPoly.zero(table)] + list(raw[1: order + 1])
    wpow = spowers(w, order, order)
    out = zeros(table, order)
    exponent = as_rational(1) / k
    for j in range(order + 1):
        coef = binomial(exponent, j)
        for i in range(order + 1):
            if not wpow[j][i].is_zero():
                out[i] = out[i] + wpow[j][i] * coef
    return TransversalSeries.from_raw(out)


def cyclic_cover(c: Cocycle, order: int) -> Cocycle:
    """Cocycle of the cyclic cover branched along the curve, via ``y = t**k``."""
    k = c.self_intersection
    if k < 2:
        raise DomainError("cyclic_cover needs self-intersection k >= 2")
    need = max(order // k, (order - 1) // k + 1)
    if c.order < need:
        raise DomainError(f"cover of order {order} needs the cocycle through y**{need}")
    table = c.table
    lead = c.map.y_part[1]
    unit = x_coefficient(lead, -k)
    if not unit.is_constant():
        raise DomainError("leading y-coefficient must be a constant times x^-k")
    root = rational_root(unit.constant_value(), k)
    if root is None:
        raise DomainError(f"leading constant {unit} has no rational {k}-th root")
    inv_lead = lead.unit_inverse()
    m = (order - 1) // k
    w = [ParamPoly.const(table, 1)] + [c.map.y_part[n + 1] * inv_lead for n in range(1, m + 1)]
    r = series_root(w, k, m).raw() if m >= 1 else [ParamPoly.zero(table)]
    xs, ys = zeros(table, order), zeros(table, order)
    for n in range(1, order // k + 1):
        xs[k * n] = c.map.x_tail[n]
    scale = xpow(table, -1) * root
    ys[1] = scale
    for j in range(1, m + 1):
        ys[1 + k * j] = r[j] * scale
    return Cocycle(TransversalMap.from_raw(INVERSION, xs, ys), 1)


def conjugate_by_scaling(c: Cocycle, zeta) -> Cocycle:
    """Conjugate by ``(x, t) -> (x, zeta*t)`` in both charts (deck action for rational ``zeta``)."""
    table = c.table
    zeta = as_rational(zeta)
    n = c.order
    s = zeros(table, n)
    s[1] = ParamPoly.const(table, zeta)
    si = zeros(table, n)
    si[1] = ParamPoly.const(table, 1 / zeta)
    fwd = TransversalMap.from_raw(IDENTITY, zeros(table, n), s)
    back = TransversalMap.from_raw(IDENTITY, zeros(table, n), si)
    m = compose_all(back, c.map, fwd)
    return Cocycle(m, c.self_intersection)


# text format -------------------------------------------------------------

def parse_cocycle(text: str) -> Cocycle:
    """Read the line-oriented cocycle format (see README)."""
    k = order = None
    params, units = [], []
    entries = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col0 = len(body) - len(body.lstrip()) + 1
        fields = stripped.split(None, 1)
        key = fields[0]
        rest = fields[1] if len(fields) > 1 else ""
        if key in ("k", "order"):
            try:
                value = int(rest.strip())
            except ValueError:
                raise ParseError(f"'{key}' expects an integer", lineno, col0 + len(key) + 1) from None
            if value < 1:
                raise ParseError(f"'{key}' must be >= 1", lineno, col0 + len(key) + 1)
            if key == "k":
                k = value
            else:
                order = value
        elif key in ("params", "units"):
            (params if key == "params" else units).extend(rest.split())
        elif key in ("a", "b"):
            parts = rest.split(None, 2)
            if len(parts) < 3:
                raise ParseError(f"'{key}' lines need: {key} <k> <n> <coefficient>", lineno, col0)
            try:
                kk, n = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("k and n must be integers", lineno, col0 + 2) from None
            if n < 1:
                raise ParseError("n must be >= 1", lineno, col0 + 2)
            if (key, kk, n) in seen:
                raise ParseError(f"duplicate entry {key} {kk} {n}", lineno, col0)
            seen.add((key, kk, n))
            coef_col = col0 + body.strip().index(parts[2], len(key) + len(parts[0]) + len(parts[1]))
            entries.append((key, kk, n, parts[2], lineno, coef_col))
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, col0)
    if k is None:
        raise ParseError("missing 'k <self-intersection>' line", 1, 1)
    if order is None:
        raise ParseError("missing 'order <N>' line", 1, 1)
    for entry in entries:
        for name in identifiers(entry[3]):
            if name != X and name not in params and name not in units:
                params.append(name)
    table = series_table(params, units)
    a, b = {}, {}
    lead = ParamPoly.const(table, 1)
    for key, kk, n, coef, lineno, col in entries:
        p = parse_poly(coef, table, line=lineno, column=col)
        if X in p.variables():
            raise ParseError("coefficients may not contain x", lineno, col)
        if key == "b" and n == 1:
            if kk != k:
                raise ParseError(f"the y**1 term of the y-part must be x^-{k}", lineno, col)
            lead = p
            continue
        (a if key == "a" else b)[(kk, n)] = p
    try:
        return Cocycle.from_coefficients(a, b, order, k, table, lead=lead)
    except DomainError as exc:
        raise ParseError(str(exc), 1, 1) from None


def format_cocycle(c: Cocycle) -> str:
    table = c.table
    params = [n for n in table.names if n != X and not table.is_laurent(n)]
    units = [n for n in table.names if n != X and table.is_laurent(n)]
    lines = [f"k {c.self_intersection}", f"order {c.order}"]
    if params:
        lines.append("params " + " ".join(params))
    if units:
        lines.append("units " + " ".join(units))
    for key, s in (("a", c.map.x_tail), ("b", c.map.y_part)):
        for kk, n in s.support():
            coef = s.coefficient(kk, n)
            if key == "b" and n == 1 and coef == 1:
                continue
            lines.append(f"{key} {kk} {n} {format_poly(coef)}")
    return "\n".join(lines) + "\n"
