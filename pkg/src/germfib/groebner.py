"""Polynomial ideals over the rationals: Buchberger, elimination, saturation, solving.

Internally a polynomial is a dict from *order keys* to integers. A key is a
linear image of the exponent vector whose lexicographic tuple order is the
monomial order, so multiplying by a monomial adds keys. Basis elements
are kept monic with exact rational coefficients.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import sympy

from .algebra import ParamPoly, VarTable, as_rational, format_poly, identifiers, parse_poly
from .errors import CapacityError, DomainError, ParseError

DEFAULT_STEP_LIMIT = 200_000


class MonomialOrder:
    """``lex``, ``degrevlex`` or a two-block elimination order.

    ``variables`` lists names from largest to smallest. For ``elim`` the
    first ``block`` variables are eliminated (each block is degrevlex).
    """

    def __init__(self, kind: str, variables: Sequence[str], block: int = 0):
        if kind not in ("lex", "degrevlex", "elim"):
            raise ValueError(f"unknown monomial order {kind!r}")
        self.kind = kind
        self.variables = tuple(variables)
        self.block = block if kind == "elim" else 0
        if kind == "elim" and not 0 < block <= len(self.variables):
            raise ValueError("elimination block must be a nonempty prefix")

    @classmethod
    def lex(cls, variables):
        return cls("lex", variables)

    @classmethod
    def degrevlex(cls, variables):
        return cls("degrevlex", variables)

    @classmethod
    def elimination(cls, eliminate, keep):
        return cls("elim", list(eliminate) + list(keep), len(list(eliminate)))

    def __eq__(self, other):
        return (isinstance(other, MonomialOrder) and self.kind == other.kind
                and self.variables == other.variables and self.block == other.block)

    def __hash__(self):
        return hash((self.kind, self.variables, self.block))

    def __repr__(self):
        if self.kind == "elim":
            return f"elim({', '.join(self.variables[:self.block])})"
        return self.kind

    def bind(self, table: VarTable) -> "_BoundOrder":
        return _BoundOrder(self, table)


def _blocks(order: MonomialOrder):
    n = len(order.variables)
    if order.kind == "lex":
        return None
    if order.kind == "degrevlex":
        return [range(0, n)]
    return [range(0, order.block), range(order.block, n)]


class _BoundOrder:
    """A monomial order fixed to a table: key/unkey, divisibility and lcm on keys."""

    def __init__(self, order: MonomialOrder, table: VarTable):
        missing = [v for v in order.variables if v not in table]
        if missing:
            raise DomainError(f"order mentions unknown variables {missing}")
        extra = [v for v in table.names if v not in order.variables]
        if extra:
            order = MonomialOrder(order.kind, list(order.variables) + extra, order.block)
        self.order = order
        self.table = table
        self.perm = [table.index(v) for v in order.variables]
        self.n = len(self.perm)
        blocks = _blocks(order)
        # layout: list of (kind, payload); 'w' = weight over block, 'e' = (+/-1, var position)
        layout = []
        if blocks is None:
            layout = [("e", 1, i) for i in range(self.n)]
        else:
            for blk in blocks:
                layout.append(("w", tuple(blk)))
                layout.extend(("e", -1, i) for i in reversed(blk))
        self.layout = layout
        self.pos_idx = [j for j, item in enumerate(layout) if item[0] == "e" and item[1] == 1]
        self.neg_idx = [j for j, item in enumerate(layout) if item[0] == "e" and item[1] == -1]
        self.evar = {item[2]: j for j, item in enumerate(layout) if item[0] == "e"}

    def key(self, exp) -> tuple:
        e = [exp[p] for p in self.perm]
        out = []
        for item in self.layout:
            if item[0] == "w":
                out.append(sum(e[i] for i in item[1]))
            else:
                out.append(item[1] * e[item[2]])
        return tuple(out)

    def unkey(self, key) -> tuple:
        exp = [0] * self.table.arity
        for i, p in enumerate(self.perm):
            j = self.evar[i]
            exp[p] = self.layout[j][1] * key[j]
        return tuple(exp)

    def divides(self, a, b) -> bool:
        """Does monomial ``a`` divide monomial ``b``?"""
        for j in self.pos_idx:
            if a[j] > b[j]:
                return False
        for j in self.neg_idx:
            if a[j] < b[j]:
                return False
        return True

    def lcm(self, a, b) -> tuple:
        ea, eb = self.unkey(a), self.unkey(b)
        return self.key(tuple(max(x, y) for x, y in zip(ea, eb)))

    def coprime(self, a, b) -> bool:
        ea, eb = self.unkey(a), self.unkey(b)
        return all(not (x and y) for x, y in zip(ea, eb))

    def degree(self, a) -> int:
        return sum(self.unkey(a))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _neg(a):
    return tuple(-x for x in a)


class _Poly:
    """Monic polynomial in key space with rational coefficients, terms sorted descending."""

    __slots__ = ("terms", "lead")

    def __init__(self, terms: dict):
        items = sorted(terms.items(), reverse=True)
        lc = items[0][1]
        self.terms = [(k, c / lc) for k, c in items] if lc != 1 else items
        self.lead = self.terms[0][0]


def _key_terms(p: ParamPoly, bo: _BoundOrder) -> dict:
    return {bo.key(exp): c for exp, c in p}


def _from_key_poly(poly: _Poly, bo: _BoundOrder, table: VarTable) -> ParamPoly:
    return ParamPoly(table, {bo.unkey(k): c for k, c in poly.terms})


class _Reducer:
    def __init__(self, bo: _BoundOrder, step_limit: int):
        self.bo = bo
        self.steps = 0
        self.step_limit = step_limit

    def reduce(self, f: dict, G: Sequence[_Poly]) -> dict:
        """Full remainder of ``f`` (key -> rational) modulo monic ``G``; possibly empty."""
        f = dict(f)
        heap = [_neg(k) for k in f]
        heapq.heapify(heap)
        rem = {}
        divides = self.bo.divides
        while heap:
            k = _neg(heapq.heappop(heap))
            c = f.pop(k, 0)
            if not c:
                continue
            g = None
            for cand in G:
                if divides(cand.lead, k):
                    g = cand
                    break
            if g is None:
                rem[k] = c
                continue
            self.steps += 1
            if self.steps > self.step_limit:
                raise CapacityError(f"reduction step limit {self.step_limit} exceeded",
                                    {"steps": self.steps, "basis_size": len(G)})
            shift = _sub(k, g.lead)
            for gk, gc in g.terms[1:]:
                nk = _add(shift, gk)
                old = f.get(nk)
                if old is None:
                    heapq.heappush(heap, _neg(nk))
                    f[nk] = -c * gc
                else:
                    val = old - c * gc
                    if val:
                        f[nk] = val
                    else:
                        del f[nk]
        return rem


def _spoly(f: _Poly, g: _Poly, bo: _BoundOrder) -> dict:
    lcm = bo.lcm(f.lead, g.lead)
    sf, sg = _sub(lcm, f.lead), _sub(lcm, g.lead)
    out = {}
    for k, c in f.terms[1:]:
        nk = _add(sf, k)
        out[nk] = out.get(nk, 0) + c
    for k, c in g.terms[1:]:
        nk = _add(sg, k)
        out[nk] = out.get(nk, 0) - c
    return {k: v for k, v in out.items() if v}


def _update(G, alive, P, h_index, bo):
    """Gebauer-Moeller installation of basis element ``h_index`` (indices refer to ``G``)."""
    h = G[h_index].lead
    active = [i for i in range(h_index) if alive[i]]
    lcm = bo.lcm
    divides = bo.divides
    # chain criterion on old pairs
    kept = set()
    for (i, j) in P:
        lij = lcm(G[i].lead, G[j].lead)
        if (divides(h, lij) and lcm(G[i].lead, h) != lij and lcm(G[j].lead, h) != lij):
            continue
        kept.add((i, j))
    # new pairs
    by_lcm = {}
    for i in active:
        by_lcm.setdefault(lcm(G[i].lead, h), []).append(i)
    candidates = sorted(by_lcm)
    minimal = []
    for L in candidates:
        if any(divides(M, L) and M != L for M in candidates):
            continue
        minimal.append(L)
    for L in minimal:
        group = by_lcm[L]
        if any(bo.coprime(G[i].lead, h) for i in group):
            continue
        kept.add((min(group), h_index))
    # retire basis elements whose lead is divisible by the new one; their pairs stay
    for i in active:
        if divides(h, G[i].lead):
            alive[i] = False
    return kept


@dataclass(frozen=True)
class Ideal:
    """Finitely generated ideal in a pure polynomial ring."""

    generators: tuple
    ring: VarTable

    def __post_init__(self):
        gens = tuple(g for g in self.generators if not g.is_zero())
        object.__setattr__(self, "generators", gens)
        ring = self.ring
        for g in gens:
            if g.table != ring:
                raise DomainError("ideal generators must live in the ideal's ring")
            if any(e < 0 for exp, _ in g for e in exp):
                raise DomainError("ideal generators must be polynomial; clear Laurent denominators first")

    @classmethod
    def of(cls, polys: Iterable[ParamPoly], ring: VarTable | None = None) -> "Ideal":
        """Build from polynomials, moving them into a pure ring (Laurent flags dropped)."""
        polys = list(polys)
        if ring is None:
            if not polys:
                raise DomainError("give a ring for an ideal without generators")
            ring = polys[0].table.pure()
        out = []
        for p in polys:
            if p.table.pure() != ring:
                p = p.lift(VarTable.merge(p.table, ring))
                p = ParamPoly(ring, {_project(exp, p.table, ring): c for exp, c in p})
            else:
                p = ParamPoly(ring, dict(p.terms))
            out.append(p)
        return cls(tuple(out), ring)

    def is_unit_ideal(self, order: MonomialOrder | None = None) -> bool:
        return buchberger(self, order) == [ParamPoly.const(self.ring, 1)]


def _project(exp, src: VarTable, dst: VarTable):
    out = [0] * dst.arity
    for name, e in zip(src.names, exp):
        if e:
            if name not in dst:
                raise DomainError(f"variable {name} is not in the target ring")
            out[dst.index(name)] = e
    return tuple(out)


def _default_order(ring: VarTable) -> MonomialOrder:
    return MonomialOrder.degrevlex(ring.names)


def buchberger(I: Ideal, order: MonomialOrder | None = None, *,
               step_limit: int = DEFAULT_STEP_LIMIT, selection: str = "normal") -> list:
    """Reduced Groebner basis of ``I``, monic, sorted by decreasing leading monomial."""
    order = order or _default_order(I.ring)
    bo = order.bind(I.ring)
    red = _Reducer(bo, step_limit)
    G: list = []
    alive: list = []
    P: set = set()

    def install(r):
        nonlocal P
        G.append(_Poly(r))
        alive.append(True)
        P = _update(G, alive, P, len(G) - 1, bo)

    for g in I.generators:
        r = red.reduce(_key_terms(g, bo), G)
        if r:
            install(r)
    pairs_done = 0
    while P:
        if selection == "normal":
            # smallest lcm in the monomial order itself
            pair = min(P, key=lambda ij: (bo.lcm(G[ij[0]].lead, G[ij[1]].lead), ij))
        elif selection == "first":
            pair = min(P)
        elif selection == "last":
            pair = max(P)
        else:
            raise ValueError(f"unknown selection strategy {selection!r}")
        P.discard(pair)
        i, j = pair
        s = _spoly(G[i], G[j], bo)
        pairs_done += 1
        if not s:
            continue
        # retired elements stay useful as reducers
        r = red.reduce(s, G)
        if r:
            install(r)
    basis = _interreduce([h for h, a in zip(G, alive) if a], red, bo)
    return [_from_key_poly(g, bo, I.ring) for g in basis]


def _interreduce(G: list, red: _Reducer, bo: _BoundOrder) -> list:
    minimal = []
    for g in sorted(G, key=lambda p: p.lead):
        if not any(bo.divides(h.lead, g.lead) for h in minimal):
            minimal.append(g)
    out = []
    for idx, g in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1:]
        # the lead survives: no other leading monomial divides it
        out.append(_Poly(red.reduce(dict(g.terms), others)))
    return sorted(out, key=lambda p: p.lead, reverse=True)


def reduce(p: ParamPoly, G: Sequence[ParamPoly], order: MonomialOrder | None = None) -> ParamPoly:
    """Remainder of ``p`` on division by ``G`` (exact, rational coefficients)."""
    order = order or _default_order(p.table)
    bo = order.bind(p.table)
    if p.is_zero():
        return p
    basis = [_Poly(_key_terms(g, bo)) for g in G if not g.is_zero()]
    rem = _Reducer(bo, DEFAULT_STEP_LIMIT * 50).reduce(_key_terms(p, bo), basis)
    return ParamPoly(p.table, {bo.unkey(k): c for k, c in rem.items()})


def is_groebner(G: Sequence[ParamPoly], order: MonomialOrder | None = None) -> bool:
    """Buchberger criterion: every S-polynomial reduces to zero."""
    G = [g for g in G if not g.is_zero()]
    if not G:
        return True
    table = G[0].table
    order = order or _default_order(table)
    bo = order.bind(table)
    polys = [_Poly(_key_terms(g, bo)) for g in G]
    red = _Reducer(bo, DEFAULT_STEP_LIMIT * 50)
    for i, j in itertools.combinations(range(len(polys)), 2):
        s = _spoly(polys[i], polys[j], bo)
        if s and red.reduce(s, polys):
            return False
    return True


def ideal_equal(I: Ideal, J: Ideal, order: MonomialOrder | None = None, **kw) -> bool:
    if I.ring != J.ring:
        raise DomainError("ideals live in different rings")
    return buchberger(I, order, **kw) == buchberger(J, order, **kw)


def contains(I: Ideal, p: ParamPoly, order: MonomialOrder | None = None) -> bool:
    G = buchberger(I, order)
    return reduce(p.lift(I.ring) if p.table != I.ring else p, G, order).is_zero()


def eliminate(I: Ideal, variables: Sequence[str], **kw) -> Ideal:
    """``I`` intersected with the subring without ``variables``; the ring is kept."""
    keep = [v for v in I.ring.names if v not in variables]
    order = MonomialOrder.elimination(variables, keep)
    G = buchberger(I, order, **kw)
    gone = {I.ring.index(v) for v in variables}
    return Ideal(tuple(g for g in G if all(exp[i] == 0 for exp, _ in g for i in gone)), I.ring)


def _fresh_name(table: VarTable, stem: str = "u_sat") -> str:
    name, i = stem, 0
    while name in table:
        i += 1
        name = f"{stem}{i}"
    return name


def saturate(I: Ideal, f: ParamPoly, **kw) -> Ideal:
    """``I : f^oo`` via a fresh variable ``u`` with ``u*f - 1`` and elimination of ``u``."""
    ring = I.ring
    u = _fresh_name(ring)
    big = ring.extend([u])
    gens = [g.lift(big) for g in I.generators]
    fb = ParamPoly(big, {_project(exp, f.table, big): c for exp, c in f})
    gens.append(ParamPoly.var(big, u) * fb - 1)
    J = eliminate(Ideal(tuple(gens), big), [u], **kw)
    return Ideal(tuple(ParamPoly(ring, {exp[:-1]: c for exp, c in g}) for g in J.generators), ring)


def clear_laurent(p: ParamPoly, ring: VarTable) -> ParamPoly:
    """Multiply by the smallest monomial in Laurent variables that makes ``p`` polynomial."""
    shift = {}
    for i, name in enumerate(p.table.names):
        if p.table.laurent_mask[i]:
            low = p.min_degree(name)
            if low < 0:
                shift[name] = -low
    if shift:
        p = p * ParamPoly.monomial(p.table, shift)
    return ParamPoly(ring, {_project(exp, p.table, ring): c for exp, c in p})


def saturate_unit(polys, unit: str = "theta", ring: VarTable | None = None, **kw) -> Ideal:
    """Clear ``unit`` denominators and saturate by it; ``unit`` must be the only Laurent variable used.

    ``ring`` defaults to the generators' table with Laurent flags dropped.
    """
    if isinstance(polys, Ideal):
        polys = list(polys.generators)
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        if ring is None:
            raise DomainError("give a ring when saturating the zero ideal")
        return Ideal((), ring)
    for p in polys:
        for i, name in enumerate(p.table.names):
            if p.table.laurent_mask[i] and name != unit and name in p.variables():
                raise DomainError(f"Laurent variable {name} present besides {unit}")
    ring = polys[0].table.pure() if ring is None else ring
    cleared = [clear_laurent(p, ring) for p in polys]
    I = Ideal(tuple(cleared), ring)
    if unit not in ring:
        return I
    return saturate(I, ParamPoly.var(ring, unit), **kw)


# solving -----------------------------------------------------------------

@dataclass
class Solution:
    """Outcome of :func:`solve_zero_dim`."""

    status: str  # "inconsistent" | "zero-dimensional" | "positive-dimensional"
    variables: tuple
    points: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    free: tuple = ()
    basis: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.points)


def independent_set(G: Sequence[ParamPoly], ring: VarTable, order: MonomialOrder | None = None) -> tuple:
    """A maximal-size set of variables no leading monomial lives in (dimension witness)."""
    order = order or _default_order(ring)
    bo = order.bind(ring)
    leads = []
    for g in G:
        lead = max((bo.key(exp) for exp, _ in g))
        leads.append({ring.names[i] for i, e in enumerate(bo.unkey(lead)) if e})
    names = ring.names
    for size in range(len(names), -1, -1):
        for combo in itertools.combinations(names, size):
            s = set(combo)
            if all(not lead <= s for lead in leads):
                return combo
    return ()


def _univariate_roots(p: ParamPoly, var: str):
    """Rational roots with multiplicity and the non-rational cofactor of a univariate polynomial."""
    t = sympy.Symbol(var)
    i = p.table.index(var)
    coeffs = {}
    for exp, c in p:
        coeffs[exp[i]] = sympy.Rational(int(c.numerator), int(c.denominator))
    poly = sympy.Poly(sum(c * t ** e for e, c in coeffs.items()), t, domain="QQ")
    roots = poly.ground_roots()
    rest = poly
    for r, mult in roots.items():
        rest = sympy.div(rest, sympy.Poly((t - r) ** mult, t, domain="QQ"))[0]
    out = sorted((as_rational(f"{r.p}/{r.q}"), m) for r, m in roots.items())
    rest_poly = None
    if rest.degree() > 0:
        rest_poly = ParamPoly(p.table, {
            tuple(e[0] if j == i else 0 for j in range(p.table.arity)):
                as_rational(f"{sympy.Rational(c).p}/{sympy.Rational(c).q}")
            for e, c in zip(rest.monoms(), rest.coeffs())})
    return out, rest_poly


def solve_zero_dim(I: Ideal, **kw) -> Solution:
    """Decide consistency and dimension; enumerate rational points of zero-dimensional ideals."""
    ring = I.ring
    names = ring.names
    if not I.generators:
        return Solution("positive-dimensional", names, free=names)
    G = buchberger(I, **kw)
    if G == [ParamPoly.const(ring, 1)]:
        return Solution("inconsistent", names, basis=G)
    free = independent_set(G, ring)
    if free:
        return Solution("positive-dimensional", names, free=free, basis=G)
    points, residual = [], []
    _solve_lex(I.generators, ring, list(names), {}, points, residual, kw)
    points.sort(key=lambda pt: tuple(pt[n] for n in names))
    return Solution("zero-dimensional", names, points, residual, (), G)


def _solve_lex(gens, ring, remaining, assignment, points, residual, kw):
    if not remaining:
        points.append(dict(assignment))
        return
    order = MonomialOrder.lex(remaining + [n for n in ring.names if n not in remaining])
    G = buchberger(Ideal(tuple(gens), ring), order, **kw)
    if G == [ParamPoly.const(ring, 1)]:
        return
    last = remaining[-1]
    uni = [g for g in G if g.variables() <= {last}]
    if not uni:
        raise DomainError(f"ideal is not zero-dimensional in {last}")
    roots, rest = _univariate_roots(uni[-1], last)
    if rest is not None:
        residual.append({"assignment": dict(assignment), "variable": last, "polynomial": rest,
                         "system": [g for g in G]})
    for value, _ in roots:
        sub = [g.substitute({last: value}) for g in G]
        sub = [g for g in sub if not g.is_zero()]
        assignment[last] = value
        _solve_lex(sub, ring, remaining[:-1], assignment, points, residual, kw)
        del assignment[last]


def jacobian_rank(polys: Sequence[ParamPoly], point: dict, variables: Sequence[str]) -> int:
    """Rank over the rationals of the Jacobian at a rational point."""
    rows = []
    for p in polys:
        row = []
        for v in variables:
            i = p.table.index(v)
            d = {}
            for exp, c in p:
                if exp[i]:
                    e = exp[:i] + (exp[i] - 1,) + exp[i + 1:]
                    d[e] = d.get(e, 0) + c * exp[i]
            row.append(ParamPoly(p.table, d).evaluate(point))
        rows.append(row)
    if not rows:
        return 0
    M = sympy.Matrix([[sympy.Rational(int(c.numerator), int(c.denominator)) for c in r] for r in rows])
    return M.rank()


# text format -------------------------------------------------------------

def parse_ideal(text: str, ring: VarTable | None = None):
    """Parse ``order ...`` header plus one polynomial per line; returns ``(Ideal, MonomialOrder)``."""
    lines = []
    header = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if body.strip().startswith("order") and header is None and not lines:
            header = (body.strip()[5:].strip(), lineno)
            continue
        lines.append((body, lineno))
    if ring is None:
        names = []
        for body, _ in lines:
            for n in identifiers(body):
                if n not in names:
                    names.append(n)
        ring = VarTable(names)
    polys = [parse_poly(body, ring, line=lineno) for body, lineno in lines]
    order = _default_order(ring)
    if header is not None:
        wanted, lineno = header
        if wanted == "lex":
            order = MonomialOrder.lex(ring.names)
        elif wanted == "degrevlex":
            order = MonomialOrder.degrevlex(ring.names)
        elif wanted.startswith("elim(") and wanted.endswith(")"):
            elim = [v.strip() for v in wanted[5:-1].split(",") if v.strip()]
            for v in elim:
                if v not in ring:
                    raise ParseError(f"unknown variable {v!r} in order header", lineno, 1)
            order = MonomialOrder.elimination(elim, [n for n in ring.names if n not in elim])
        else:
            raise ParseError(f"unknown order {wanted!r}", lineno, 1)
    return Ideal(tuple(polys), ring), order


def format_ideal(polys: Sequence[ParamPoly], order: MonomialOrder | None = None) -> str:
    lines = []
    if order is not None:
        lines.append(f"order {order!r}")
    lines.extend(format_poly(p) for p in polys)
    return "\n".join(lines) + "\n"
