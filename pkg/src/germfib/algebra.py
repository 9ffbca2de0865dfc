"""Exact coefficient arithmetic.

Rationals are ``gmpy2.mpq`` values. :class:`ParamPoly` is a sparse polynomial
over the rationals in the variables of a :class:`VarTable`; variables flagged
as Laurent (units such as ``theta`` and the curve coordinate ``x``) may carry
negative exponents.

The textual syntax is a sum of terms such as ``-3/2*a^2*t^-1*x``. Products,
parentheses, ``/`` by units and ``^`` by integers are accepted on input;
:func:`format_poly` always prints the flat sum-of-terms form and
``parse_poly(format_poly(p), p.table) == p``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from operator import add
from types import MappingProxyType
from typing import Iterable, Mapping

import gmpy2
from gmpy2 import mpq

from .errors import DomainError, ParseError, StructuralError

Rational = type(mpq(0))

_ZERO = mpq(0)
_ONE = mpq(1)


def as_rational(value) -> Rational:
    """Coerce ints, Fractions, mpq and ``"p/q"`` strings to an exact rational."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", text):
            raise ParseError(f"not a rational literal: {value!r}")
        num, _, den = text.partition("/")
        if den and int(den) == 0:
            raise DomainError("zero denominator")
        return mpq(int(num), int(den) if den else 1)
    if type(value).__name__ == "mpz":
        return mpq(value)
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def rational_root(value, k: int):
    """Exact k-th root of a rational, or ``None`` when it is not a perfect power."""
    value = as_rational(value)
    if value == 0:
        return _ZERO
    sign = 1
    if value < 0:
        if k % 2 == 0:
            return None
        sign = -1
        value = -value
    num, exact_n = gmpy2.iroot(value.numerator, k)
    den, exact_d = gmpy2.iroot(value.denominator, k)
    if not (exact_n and exact_d):
        return None
    return sign * mpq(num, den)


def binomial(top, j: int) -> Rational:
    """Generalized binomial coefficient C(top, j) for rational ``top``."""
    top = as_rational(top)
    out = _ONE
    for i in range(j):
        out = out * (top - i) / (i + 1)
    return out


class VarTable:
    """Ordered variable names; ``laurent`` names may take negative exponents."""

    __slots__ = ("names", "laurent", "_index", "_mask", "_hash")

    def __init__(self, names: Iterable[str], laurent: Iterable[str] = ()):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise StructuralError(f"duplicate variable names in {names}")
        for name in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise StructuralError(f"invalid variable name {name!r}")
        laurent = frozenset(laurent)
        unknown = laurent - set(names)
        if unknown:
            raise StructuralError(f"Laurent flags on unknown variables {sorted(unknown)}")
        self.names = names
        self.laurent = laurent
        self._index = {n: i for i, n in enumerate(names)}
        self._mask = tuple(n in laurent for n in names)
        self._hash = hash((names, self._mask))

    @property
    def arity(self) -> int:
        return len(self.names)

    @property
    def laurent_mask(self) -> tuple:
        return self._mask

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise StructuralError(f"variable {name!r} not in table {self.names}") from None

    def __contains__(self, name) -> bool:
        return name in self._index

    def is_laurent(self, name: str) -> bool:
        return self._mask[self.index(name)]

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, VarTable):
            return NotImplemented
        return self.names == other.names and self._mask == other._mask

    def __hash__(self):
        return self._hash

    def __repr__(self):
        marked = [n + ("*" if m else "") for n, m in zip(self.names, self._mask)]
        return f"VarTable({', '.join(marked)})"

    def extend(self, names: Iterable[str] = (), laurent: Iterable[str] = ()) -> "VarTable":
        """Append new names (existing ones are kept as they are)."""
        new = list(self.names)
        for n in list(names) + list(laurent):
            if n not in self._index and n not in new:
                new.append(n)
        return VarTable(new, set(self.laurent) | set(laurent))

    def without(self, names: Iterable[str]) -> "VarTable":
        drop = set(names)
        return VarTable([n for n in self.names if n not in drop],
                        [n for n in self.laurent if n not in drop])

    def pure(self) -> "VarTable":
        """Same names with every Laurent flag cleared."""
        return VarTable(self.names)

    @staticmethod
    def merge(*tables: "VarTable") -> "VarTable":
        names, laurent = [], set()
        for t in tables:
            for n in t.names:
                if n not in names:
                    names.append(n)
            laurent |= t.laurent
        return VarTable(names, laurent)


def _check_table(p: "ParamPoly", q: "ParamPoly"):
    if p.table != q.table:
        raise StructuralError(f"mismatched variable tables: {p.table!r} vs {q.table!r}")


class ParamPoly:
    """Immutable sparse Laurent polynomial over the rationals.

    Terms map exponent tuples to nonzero rationals. Arithmetic with plain
    numbers is allowed; arithmetic between polynomials requires identical
    tables (use :meth:`lift` to re-embed).
    """

    __slots__ = ("table", "_terms", "_hash")

    def __init__(self, table: VarTable, terms: Mapping | None = None, *, _trusted=False):
        self.table = table
        if _trusted:
            self._terms = terms
        else:
            clean = {}
            arity = table.arity
            mask = table.laurent_mask
            for exp, c in (terms or {}).items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != arity:
                    raise StructuralError(f"exponent {exp} does not match arity {arity}")
                for e, lau, name in zip(exp, mask, table.names):
                    if e < 0 and not lau:
                        raise DomainError(f"negative exponent on non-Laurent variable {name}")
                c = as_rational(c)
                if c:
                    clean[exp] = clean.get(exp, _ZERO) + c
                    if not clean[exp]:
                        del clean[exp]
            self._terms = clean
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, table):
        return cls(table, {}, _trusted=True)

    @classmethod
    def const(cls, table, c):
        c = as_rational(c)
        return cls(table, {(0,) * table.arity: c} if c else {}, _trusted=True)

    @classmethod
    def var(cls, table, name, power=1):
        exp = [0] * table.arity
        exp[table.index(name)] = power
        return cls(table, {tuple(exp): _ONE})

    @classmethod
    def monomial(cls, table, exps: Mapping[str, int], coeff=1):
        exp = [0] * table.arity
        for name, e in exps.items():
            exp[table.index(name)] = e
        return cls(table, {tuple(exp): coeff})

    def _coerce(self, other):
        if isinstance(other, ParamPoly):
            _check_table(self, other)
            return other
        try:
            return ParamPoly.const(self.table, other)
        except TypeError:
            return NotImplemented

    # inspection ---------------------------------------------------------
    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        zero = (0,) * self.table.arity
        return not self._terms or (len(self._terms) == 1 and zero in self._terms)

    def constant_value(self) -> Rational:
        if not self.is_constant():
            raise DomainError(f"{self} is not constant")
        return self._terms.get((0,) * self.table.arity, _ZERO)

    def is_unit(self) -> bool:
        """True for a nonzero constant times a monomial in Laurent variables."""
        if len(self._terms) != 1:
            return False
        (exp,) = self._terms
        return all(e == 0 or lau for e, lau in zip(exp, self.table.laurent_mask))

    def unit_inverse(self) -> "ParamPoly":
        if not self.is_unit():
            raise DomainError(f"{self} is not a unit")
        ((exp, c),) = self._terms.items()
        return ParamPoly(self.table, {tuple(-e for e in exp): 1 / c}, _trusted=True)

    def variables(self) -> set:
        used = set()
        for exp in self._terms:
            for name, e in zip(self.table.names, exp):
                if e:
                    used.add(name)
        return used

    def degree(self, name: str | None = None) -> int:
        """Total degree, or degree in one variable. The zero polynomial has degree -1."""
        if not self._terms:
            return -1
        if name is None:
            return max(sum(e) for e in self._terms)
        i = self.table.index(name)
        return max(e[i] for e in self._terms)

    def min_degree(self, name: str) -> int:
        i = self.table.index(name)
        return min(e[i] for e in self._terms) if self._terms else 0

    def by_var(self, name: str) -> dict:
        """Split as ``sum(c_e * name**e)``; returns ``{e: c_e}`` with ``name`` removed from c_e."""
        i = self.table.index(name)
        out: dict = {}
        for exp, c in self._terms.items():
            e = exp[i]
            stripped = exp[:i] + (0,) + exp[i + 1:]
            out.setdefault(e, {})[stripped] = c
        return {e: ParamPoly(self.table, t, _trusted=True) for e, t in sorted(out.items())}

    def coefficient(self, name: str, power: int) -> "ParamPoly":
        """Coefficient of ``name**power`` as a polynomial without ``name``."""
        i = self.table.index(name)
        t = {exp[:i] + (0,) + exp[i + 1:]: c for exp, c in self._terms.items() if exp[i] == power}
        return ParamPoly(self.table, t, _trusted=True)

    def content_denominator(self) -> int:
        d = 1
        for c in self._terms.values():
            d = d * int(c.denominator) // gmpy2.gcd(d, int(c.denominator))
        return int(d)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        t = dict(self._terms)
        for exp, c in other._terms.items():
            s = t.get(exp, _ZERO) + c
            if s:
                t[exp] = s
            else:
                t.pop(exp, None)
        return ParamPoly(self.table, t, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly(self.table, {e: -c for e, c in self._terms.items()}, _trusted=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            try:
                c = as_rational(other)
            except TypeError:
                return NotImplemented
            if not c:
                return ParamPoly.zero(self.table)
            return ParamPoly(self.table, {e: v * c for e, v in self._terms.items()}, _trusted=True)
        _check_table(self, other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        t: dict = {}
        get = t.get
        for e2, c2 in b.items():
            for e1, c1 in a.items():
                e = tuple(map(add, e1, e2))
                t[e] = get(e, _ZERO) + c1 * c2
        return ParamPoly(self.table, {e: c for e, c in t.items() if c}, _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            _check_table(self, other)
            return self * other.unit_inverse()
        c = as_rational(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self * (1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.unit_inverse() ** (-n)
        result = ParamPoly.const(self.table, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.table == other.table and self._terms == other._terms
        try:
            c = as_rational(other)
        except TypeError:
            return NotImplemented
        return self.is_constant() and self.constant_value() == c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.table, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"ParamPoly({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    # re-embedding -------------------------------------------------------
    def lift(self, table: VarTable) -> "ParamPoly":
        """Re-express in a table that contains every variable used here."""
        if table == self.table:
            return self
        src = self.table
        used = self.variables()
        for name in used:
            table.index(name)
        pos = [(src.index(n), table.index(n)) for n in src.names if n in table]
        t = {}
        for exp, c in self._terms.items():
            new = [0] * table.arity
            for i, j in pos:
                new[j] = exp[i]
            t[tuple(new)] = c
        return ParamPoly(table, t)

    # substitution and evaluation ----------------------------------------
    def substitute(self, bindings: Mapping[str, object]) -> "ParamPoly":
        """Replace variables by polynomials of the same table (or by numbers)."""
        if not bindings:
            return self
        table = self.table
        subs = {}
        for name, value in bindings.items():
            i = table.index(name)
            value = value if isinstance(value, ParamPoly) else ParamPoly.const(table, value)
            _check_table(self, value)
            if table.laurent_mask[i] and not value.is_unit():
                if any(exp[i] < 0 for exp in self._terms):
                    raise DomainError(f"non-unit value substituted for Laurent variable {name}")
            subs[i] = value
        cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = subs[i] ** e
            return cache[key]

        result: dict = {}
        for exp, c in self._terms.items():
            kept = tuple(0 if i in subs else e for i, e in enumerate(exp))
            term = ParamPoly(table, {kept: c}, _trusted=True)
            for i, e in enumerate(exp):
                if i in subs and e:
                    term = term * power(i, e)
            for k, v in term._terms.items():
                s = result.get(k, _ZERO) + v
                if s:
                    result[k] = s
                else:
                    result.pop(k, None)
        return ParamPoly(table, result, _trusted=True)

    def evaluate(self, point: Mapping[str, object]) -> Rational:
        """Exact value with every used variable bound to a rational."""
        table = self.table
        values = []
        for i, name in enumerate(table.names):
            if name in point:
                v = as_rational(point[name])
                if v == 0 and table.laurent_mask[i]:
                    raise DomainError(f"Laurent variable {name} bound to zero")
                values.append(v)
            else:
                values.append(None)
        total = _ZERO
        for exp, c in self._terms.items():
            term = c
            for v, e, name in zip(values, exp, table.names):
                if e:
                    if v is None:
                        raise DomainError(f"variable {name} is unbound")
                    term *= v ** e
            total += term
        return total

    def map_exponents(self, name: str, fn) -> "ParamPoly":
        """Apply ``fn`` to the exponent of one (Laurent) variable in every term."""
        i = self.table.index(name)
        t = {}
        for exp, c in self._terms.items():
            new = exp[:i] + (fn(exp[i]),) + exp[i + 1:]
            t[new] = t.get(new, _ZERO) + c
        return ParamPoly(self.table, t)


def poly_arith(p: ParamPoly, q: ParamPoly, op: str) -> ParamPoly:
    """Functional form of ``+``, ``-`` and ``*``."""
    if not (isinstance(p, ParamPoly) and isinstance(q, ParamPoly)):
        raise TypeError("poly_arith expects two ParamPoly operands")
    _check_table(p, q)
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}")


def poly_substitute(p: ParamPoly, bindings) -> ParamPoly:
    return p.substitute(bindings)


def poly_eval(p: ParamPoly, point) -> Rational:
    return p.evaluate(point)


# text syntax -------------------------------------------------------------

def _format_rational(c: Rational) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _term_sort_key(exp):
    return (sum(exp), exp)


def format_poly(p: ParamPoly) -> str:
    if not p._terms:
        return "0"
    parts = []
    for exp in sorted(p._terms, key=_term_sort_key, reverse=True):
        c = p._terms[exp]
        factors = []
        for name, e in zip(p.table.names, exp):
            if e == 1:
                factors.append(name)
            elif e:
                factors.append(f"{name}^{e}")
        mag = abs(c)
        if not factors:
            body = _format_rational(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_rational(mag) + "*" + "*".join(factors)
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str, line: int, col0: int):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            j = pos
            while j < len(text) and text[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {text[j]!r}", line, col0 + j)
        col = col0 + m.start(m.lastindex)
        if m.group(1):
            tokens.append(("num", int(m.group(1)), col))
        elif m.group(2):
            tokens.append(("id", m.group(2), col))
        else:
            op = "^" if m.group(3) == "**" else m.group(3)
            tokens.append(("op", op, col))
        pos = m.end()
    tokens.append(("end", None, col0 + len(text)))
    return tokens


class _Parser:
    def __init__(self, text, table, line, col0):
        self.toks = _tokenize(text, line, col0)
        self.i = 0
        self.table = table
        self.line = line

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.line, tok[2])

    def parse(self):
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op_tok = self.take()
            q = self.unary()
            if op_tok[1] == "*":
                p = p * q
            else:
                try:
                    p = p / q
                except (DomainError, ZeroDivisionError):
                    self.fail("division by a non-unit", op_tok)
        return p

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            op_tok = self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num":
                self.fail("expected an integer exponent", tok)
            try:
                return base ** (sign * tok[1])
            except DomainError:
                self.fail("negative power of a non-unit", op_tok)
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return ParamPoly.const(self.table, val)
        if kind == "id":
            if val not in self.table:
                self.fail(f"unknown variable {val!r}", tok)
            return ParamPoly.var(self.table, val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            if self.take()[:2] != ("op", ")"):
                self.fail("expected ')'", self.toks[self.i - 1])
            return p
        self.fail(f"unexpected token {val!r}" if val else "unexpected end of input", tok)


def parse_poly(text: str, table: VarTable, *, line: int = 1, column: int = 1) -> ParamPoly:
    """Parse the polynomial syntax; ``line``/``column`` locate ``text`` in a larger file."""
    return _Parser(text, table, line, column).parse()


def identifiers(text: str) -> list:
    """Variable names occurring in ``text``, in first-appearance order."""
    seen = []
    for name in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", text):
        if name not in seen:
            seen.append(name)
    return seen
