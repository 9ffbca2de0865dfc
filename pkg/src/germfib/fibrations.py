"""Transverse fibrations: obstruction ideals, detection, tangency and models.

A fibration transverse to the curve is ``{x = const}`` in some normal form
reachable by the residual action. Acting on ``nf`` with symbolic
``A = (alpha, beta, gamma, theta)`` and collecting the a-part coefficients
gives polynomials in the parameters whose common zeros are the fibrations
up to the truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .algebra import ParamPoly, VarTable, as_rational, format_poly
from .errors import DomainError, EngineDefect, VerificationMismatch
from .groebner import (
    Ideal,
    MonomialOrder,
    buchberger,
    clear_laurent,
    ideal_equal,
    jacobian_rank,
    reduce,
    saturate,
    saturate_unit,
    solve_zero_dim,
)
from .normalform import (
    PARAM_NAMES,
    NormalForm,
    ResidualParam,
    act,
    normalize,
    recover_parameter,
    residual_charts,
)
from .series import (
    INVERSION,
    X,
    ChartChange,
    Cocycle,
    TransversalMap,
    cyclic_cover,
    map_compose,
    map_invert,
    series_table,
    zeros,
)

SATURATE = "saturate"
SLICE1 = "slice1"

NO_FIBRATION = "no-fibration-up-to-order-N"
UNIQUE = "unique"
FINITE = "finitely-many"
FAMILY = "positive-dimensional-family"


def obstruction_window(N: int):
    """Indices ``(k, n)`` of the a-part coefficients through order ``N``."""
    return [(k, n) for n in range(4, N + 1) for k in range(3, n)]


def _param_table(nf: NormalForm, theta: str) -> VarTable:
    names = list(PARAM_NAMES) if theta == SATURATE else list(PARAM_NAMES[:3])
    clash = [n for n in names if n in nf.table]
    if clash:
        raise DomainError(f"normal form already uses parameter names {clash}")
    extra = [n for n in nf.table.names if n != X]
    laurent = ["theta"] if theta == SATURATE else []
    laurent += [n for n in extra if nf.table.is_laurent(n)]
    return VarTable(names + extra + [X], laurent + [X])


def obstruction_generators(nf: NormalForm, N: int, theta: str = SATURATE) -> dict:
    """``{(k, n): a^A_{k,n}}`` for symbolic ``A`` (``theta = 1`` in slice mode)."""
    if theta not in (SATURATE, SLICE1):
        raise DomainError(f"unknown theta mode {theta!r}")
    if N > nf.order:
        raise DomainError(f"order {N} exceeds the normal form's truncation {nf.order}")
    table = _param_table(nf, theta)
    nf = nf.truncate(N).lift(table)
    al, be, ga = (ParamPoly.var(table, n) for n in PARAM_NAMES[:3])
    th = ParamPoly.var(table, "theta") if theta == SATURATE else 1
    acted = act(ResidualParam(al, be, ga, th), nf)
    return {kn: acted.a(*kn) for kn in obstruction_window(N)}


@dataclass
class ObstructionIdeal:
    """Obstruction generators of ``source`` through ``order`` and the ideal they span."""

    source: NormalForm
    order: int
    generators: dict
    ideal: Ideal
    theta_mode: str

    @property
    def ring(self) -> VarTable:
        return self.ideal.ring

    def is_unit(self) -> bool:
        return self.ideal.is_unit_ideal()


def obstruction_ideal(nf: NormalForm, N: int, theta: str = SATURATE) -> ObstructionIdeal:
    gens = obstruction_generators(nf, N, theta)
    nonzero = [g for g in gens.values() if not g.is_zero()]
    table = _param_table(nf, theta)
    ring = table.without([X]).pure()
    if theta == SATURATE:
        ideal = saturate_unit(nonzero, "theta", ring)
    else:
        ideal = Ideal(tuple(clear_laurent(g, ring) for g in nonzero), ring)
    return ObstructionIdeal(nf, N, gens, ideal, theta)


# tangency ----------------------------------------------------------------

@dataclass(frozen=True)
class Locus:
    """Zero locus on the curve of ``alpha*x + beta``."""

    kind: str  # "point" | "infinity" | "all"
    point: object = None

    def __str__(self):
        if self.kind == "point":
            return f"x={self.point}"
        return "infinity" if self.kind == "infinity" else "all-of-C"


def tangency_on_C(A_rel: ResidualParam) -> Locus:
    alpha, beta, _, _ = A_rel.as_rationals()
    if alpha != 0:
        return Locus("point", -beta / alpha)
    if beta != 0:
        return Locus("infinity")
    return Locus("all")


@dataclass
class TangencyDatum:
    pair: tuple
    relative: ResidualParam
    locus: Locus
    consistent: bool
    same_fibration: bool


def relative_parameter(nf: NormalForm, A1: ResidualParam, A2: ResidualParam):
    """Parameter taking ``act(A1, nf)`` to ``act(A2, nf)`` and whether its charts reproduce that move.

    The chart at 0 between the two normal forms is ``chart0(A1)^-1 o chart0(A2)``;
    its low-order data determine the parameter.
    """
    c1, _ = residual_charts(A1, nf)
    c2, _ = residual_charts(A2, nf)
    rel = map_compose(map_invert(c1.map), c2.map, nf.order)
    A = recover_parameter(ChartChange("0", rel))
    nf1 = act(A1, nf)
    r0, _ = residual_charts(A, nf1)
    return A, r0.map.lift(rel.table).raw() == rel.raw()


def tangency(nf: NormalForm, A1: ResidualParam, A2: ResidualParam) -> TangencyDatum:
    A, ok = relative_parameter(nf, A1, A2)
    alpha, beta, gamma, _ = A.as_rationals()
    same = alpha == beta == gamma == 0
    return TangencyDatum((A1, A2), A, tangency_on_C(A), ok, same)


# detection ---------------------------------------------------------------

@dataclass
class Witness:
    param: ResidualParam
    multiplicity: str  # "simple" | "multiple"


@dataclass
class FibrationReport:
    classification: str
    order: int
    theta_mode: str
    ideal: ObstructionIdeal
    basis: list
    witnesses: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    free: tuple = ()
    tangencies: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.witnesses)

    def format(self, style: str = "machine") -> str:
        return format_report(self, style)


def _slice_point(point: dict) -> ResidualParam:
    vals = [point.get(n, 0) for n in PARAM_NAMES[:3]]
    return ResidualParam(*vals, point.get("theta", 1))


def detect_fibrations(nf: NormalForm, N: int | None = None, theta: str = SATURATE,
                      *, tangencies: bool = True, **gb_options) -> FibrationReport:
    """Classify the fibrations of ``nf`` up to order ``N``.

    Consistency is decided on the ideal in the chosen theta mode. Witnesses
    are counted on the ``theta = 1`` slice: scaling by ``(0, 0, 0, theta)``
    does not move a fibration.
    """
    N = nf.order if N is None else N
    if nf.table.names != (X,):
        raise DomainError("detect_fibrations needs a numeric normal form")
    main = obstruction_ideal(nf, N, theta)
    basis = buchberger(main.ideal, **gb_options)
    if basis == [ParamPoly.const(main.ring, 1)]:
        return FibrationReport(NO_FIBRATION, N, theta, main, basis)
    sliced = main if theta == SLICE1 else obstruction_ideal(nf, N, SLICE1)
    sol = solve_zero_dim(sliced.ideal, **gb_options)
    report = FibrationReport(FAMILY, N, theta, main, basis)
    if sol.status == "positive-dimensional":
        report.free = sol.free
        return report
    if sol.status == "inconsistent":
        # every fibration needs theta != 1; fall back to the full ideal
        sol = solve_zero_dim(main.ideal, **gb_options)
        if sol.status != "zero-dimensional":
            report.free = sol.free
            return report
    gens = list(sliced.ideal.generators)
    names = sliced.ring.names
    for point in sol.points:
        for g in main.generators.values():
            if not g.is_zero() and not _vanishes(g, point):
                raise EngineDefect(f"witness {point} does not annihilate the obstruction generators")
        rank = jacobian_rank(gens, point, names)
        report.witnesses.append(Witness(_slice_point(point), "simple" if rank == len(names) else "multiple"))
    report.residual = sol.residual
    total = len(report.witnesses) + len(report.residual)
    report.classification = UNIQUE if total == 1 and not report.residual else FINITE
    if tangencies:
        nf_n = nf.truncate(N)
        for w1, w2 in combinations(report.witnesses, 2):
            report.tangencies.append(tangency(nf_n, w1.param, w2.param))
    return report


def _vanishes(g: ParamPoly, point: dict) -> bool:
    binding = {n: point.get(n, 1 if n == "theta" else 0) for n in g.table.names if n != X}
    return g.evaluate(binding) == 0


def _value(v) -> str:
    return str(as_rational(v)) if not isinstance(v, ParamPoly) else format_poly(v)


def _param_text(A: ResidualParam) -> str:
    return " ".join(f"{n}={_value(v)}" for n, v in zip(PARAM_NAMES, A.values()))


def format_report(r: FibrationReport, style: str = "machine") -> str:
    """Sectioned key-value text; ``human`` adds alignment and a short verdict line."""
    sections = []
    sections.append(("order", [("N", str(r.order)), ("theta_mode", r.theta_mode),
                               ("scope", "formal, truncated at y^N")]))
    cls = [("verdict", r.classification), ("count", str(r.count))]
    if r.free:
        cls.append(("free", ",".join(r.free)))
    if r.residual:
        cls.append(("non_rational_components", str(len(r.residual))))
    sections.append(("classification", cls))
    sections.append(("witnesses", [(f"w{i}", f"{_param_text(w.param)} multiplicity={w.multiplicity}")
                                   for i, w in enumerate(r.witnesses, 1)]))
    ideal = [("ring", ",".join(r.ideal.ring.names)), ("basis_size", str(len(r.basis)))]
    ideal += [(f"g{i}", format_poly(g)) for i, g in enumerate(r.basis, 1)]
    sections.append(("ideal", ideal))
    tang = []
    index = {id(w.param): i for i, w in enumerate(r.witnesses, 1)}
    for t in r.tangencies:
        a, b = (index[id(p)] for p in t.pair)
        note = "same-fibration" if t.same_fibration else str(t.locus)
        tang.append((f"w{a},w{b}", f"{note} relative=({_param_text(t.relative)})"
                     + ("" if t.consistent else " unverified")))
    sections.append(("tangency", tang))
    lines = []
    if style == "human":
        lines.append(f"# {r.classification} (order {r.order}, {r.count} rational witness(es))")
        for name, items in sections:
            lines.append(f"{name}:")
            width = max((len(k) for k, _ in items), default=0)
            lines.extend(f"  {k.ljust(width)}  {v}" for k, v in items)
    else:
        for name, items in sections:
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {v}" for k, v in items)
    return "\n".join(lines) + "\n"


# models ------------------------------------------------------------------

def model_p2_line(N: int) -> NormalForm:
    """Neighborhood of a line in the projective plane: ``(1/x, y/x)``."""
    if N < 1:
        raise DomainError("order must be >= 1")
    return NormalForm.from_coefficients({}, {}, N)


def model_diagonal(N: int) -> Cocycle:
    """Diagonal of P^1 x P^1: ``x_inf = 1/x``, ``y_inf = sum (-1)^(n-1) y^n / x^(n+1)``."""
    if N < 1:
        raise DomainError("order must be >= 1")
    table = series_table()
    xs, ys = zeros(table, N), zeros(table, N)
    for n in range(1, N + 1):
        ys[n] = ParamPoly.monomial(table, {X: -(n + 1)}, (-1) ** (n - 1))
    return Cocycle(TransversalMap.from_raw(INVERSION, xs, ys), 2)


def model_double_cover_diagonal(N: int) -> NormalForm:
    """Double cover of the diagonal model branched along the curve, normalized."""
    cover = cyclic_cover(model_diagonal(N), N)
    return normalize(cover, N).normal_form


# verification of the three-fibration argument -----------------------------

@dataclass
class Check:
    name: str
    ok: bool
    expected: str = ""
    actual: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name, ok, expected="", actual=""):
        self.checks.append(Check(name, bool(ok), str(expected), str(actual)))

    def raise_on_failure(self):
        bad = [c for c in self.checks if not c.ok]
        if bad:
            c = bad[0]
            raise VerificationMismatch(f"{c.name}: expected {c.expected}, got {c.actual}", c.expected, c.actual)

    def format(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"{'PASS' if c.ok else 'FAIL'} {c.name}")
            if not c.ok:
                lines.append(f"  expected: {c.expected}")
                lines.append(f"  actual:   {c.actual}")
        return "\n".join(lines) + "\n"


def _generic_b_names(N: int):
    return [(k, n) for n in range(3, N + 1) for k in range(2, n) if (k, n) != (2, 3)]


def _pivot_solve(eqs, pivots, table):
    """Solve equations linear in their pivot variable with a unit coefficient, in order."""
    sol = {}
    for eq, var in zip(eqs, pivots):
        if sol:
            eq = eq.substitute(sol)
        parts = eq.by_var(var)
        if set(parts) - {0, 1} or 1 not in parts or not parts[1].is_unit():
            raise VerificationMismatch(f"equation for {var} is not linear with a unit pivot",
                                       "unit pivot", format_poly(eq))
        val = -parts.get(0, ParamPoly.zero(table)) * parts[1].unit_inverse()
        sol = {k: v.substitute({var: val}) for k, v in sol.items()}
        sol[var] = val
    return sol


def _three_fibration_setup(N: int, b23: int, generic_gamma: bool):
    bkeys = _generic_b_names(N)
    bnames = [f"b_{k}_{n}" for k, n in bkeys]
    params = ["alpha1", "gamma1", "beta2", "gamma2"] if generic_gamma else ["alpha1", "beta2"]
    table = VarTable(params + bnames + [X], ["alpha1", "beta2", X])
    V = lambda n: ParamPoly.var(table, n)  # noqa: E731
    b = {kn: V(name) for kn, name in zip(bkeys, bnames)}
    b[(2, 3)] = ParamPoly.const(table, b23)
    nf = NormalForm.from_coefficients({}, b, N, table)
    g1 = V("gamma1") if generic_gamma else 0
    g2 = V("gamma2") if generic_gamma else 0
    nf1 = act(ResidualParam(V("alpha1"), 0, g1, 1), nf)
    nf2 = act(ResidualParam(0, V("beta2"), g2, 1), nf)
    a1 = {kn: nf1.a(*kn) for kn in obstruction_window(N)}
    a2 = {kn: nf2.a(*kn) for kn in obstruction_window(N)}
    eqs, pivots = [], []
    for n in range(4, N + 1):
        eqs.append(a2[(3, n)])
        pivots.append(f"b_2_{n}")
        for k in range(3, n):
            eqs.append(a1[(k, n)])
            pivots.append(f"b_{k}_{n}")
    sol = _pivot_solve(eqs, pivots, table)
    remaining = [kn for kn in obstruction_window(N) if kn[0] >= 4]
    return table, params, a1, a2, sol, remaining


def verify_three_fibrations(N: int = 7, **gb_options) -> VerificationReport:
    """Re-run both branches of the three-fibration argument through order ``N``.

    Branch ``b_{2,3} = 1``: solve the a^1 equations and a^2_{3,n} for the
    b-coefficients, substitute into the remaining a^2 generators and compare
    their ideal with ``<gamma2, alpha1*beta2>``.
    Branch ``b_{2,3} = 0`` with ``gamma1 = gamma2 = 0``: every b_{k,n} must lie
    in the obstruction ideal saturated by ``alpha1*beta2``.
    """
    if N < 7:
        raise DomainError("the argument needs order >= 7")
    report = VerificationReport()

    table, params, a1, a2, sol, remaining = _three_fibration_setup(N, 1, True)
    ring = VarTable(params)
    gens = []
    for kn in remaining:
        p = a2[kn].substitute(sol)
        stray = p.variables() - set(params)
        if stray:
            report.add(f"branch b23=1: a2{kn} free of b after substitution", False, "no b", sorted(stray))
            continue
        if not p.is_zero():
            gens.append(clear_laurent(p, table.pure()))
    I = Ideal.of(gens, ring)
    J = Ideal((ParamPoly.var(ring, "gamma2"), ParamPoly.var(ring, "alpha1") * ParamPoly.var(ring, "beta2")), ring)
    got = buchberger(I, **gb_options)
    want = buchberger(J, **gb_options)
    report.add("branch b23=1: ideal of remaining a2 generators equals <gamma2, alpha1*beta2>",
               ideal_equal(I, J, **gb_options),
               [format_poly(g) for g in want], [format_poly(g) for g in got])
    sat = buchberger(saturate(I, ParamPoly.var(ring, "alpha1") * ParamPoly.var(ring, "beta2"), **gb_options))
    report.add("branch b23=1: alpha1*beta2 != 0 is inconsistent", sat == [ParamPoly.const(ring, 1)],
               ["1"], [format_poly(g) for g in sat])

    table, params, a1, a2, sol, remaining = _three_fibration_setup(N, 0, False)
    nonzero = {v: format_poly(p) for v, p in sol.items() if not p.is_zero()}
    report.add("branch b23=0: pivot equations force every solved b to vanish", not nonzero, "{}", nonzero)
    pure = table.without([X]).pure()
    allgens = [clear_laurent(g, pure) for g in list(a1.values()) + list(a2.values()) if not g.is_zero()]
    K = saturate(Ideal(tuple(allgens), pure),
                 ParamPoly.var(pure, "alpha1") * ParamPoly.var(pure, "beta2"), **gb_options)
    G = buchberger(K, **gb_options)
    bvars = [f"b_{k}_{n}" for k, n in _generic_b_names(N)]
    outside = [v for v in bvars if not reduce(ParamPoly.var(pure, v), G).is_zero()]
    report.add("branch b23=0: every b_{k,n} lies in the saturated obstruction ideal", not outside,
               "all b in ideal", outside)
    report.add("consequence: three fibrations force the linear model", report.ok,
               "three fibrations impossible unless linear model",
               "three fibrations impossible unless linear model" if report.ok else "argument incomplete")
    return report


def _expect(report, name, actual, expected):
    report.add(name, actual == expected, format_poly(expected) if isinstance(expected, ParamPoly) else expected,
               format_poly(actual) if isinstance(actual, ParamPoly) else actual)


def verify_examples(**gb_options) -> VerificationReport:
    """Golden checks: chart formulas, the two worked order-5 examples and the double-cover model."""
    report = VerificationReport()
    table = VarTable(["alpha", "beta", "gamma", "theta", "b_2_5", "b_3_5", "b_4_5", X], ["theta", X])
    al, be, ga, th, b25, b35, b45, xv = (ParamPoly.var(table, n) for n in table.names)
    A = ResidualParam(al, be, ga, th)

    bare = NormalForm.from_coefficients({}, {}, 7, table)
    c0, cinf = residual_charts(A, bare)
    _expect(report, "chart formula a_1 at 0", c0.map.x_tail[1], th * (al * xv + be))
    _expect(report, "chart formula a_2 at infinity", cinf.map.x_tail[2], be ** 2 * xv + ga * th ** -2)
    for n in range(1, 8):
        _expect(report, f"chart formula b_{n} at 0", c0.map.y_part[n], th ** n * al ** (n - 1))
        _expect(report, f"chart formula b_{n} at infinity", cinf.map.y_part[n], be ** (n - 1) * th ** -1)

    ex1 = NormalForm.from_coefficients({(3, 5): 1}, {}, 5, table)
    acted = act(A, ex1)
    _expect(report, "example 1: a_{3,4}", acted.a(3, 4), -(ga - al * be * th ** 2) ** 2)
    on_curve = act(ResidualParam(al, be, al * be * th ** 2, th), ex1)
    _expect(report, "example 1: a_{3,5} on gamma = alpha*beta*theta^2", on_curve.a(3, 5), th ** 5)
    numeric1 = NormalForm.from_coefficients({(3, 5): 1}, {}, 5)
    verdict = detect_fibrations(numeric1, 5, tangencies=False, **gb_options).classification
    _expect(report, "example 1: verdict", verdict, NO_FIBRATION)

    ex2 = NormalForm.from_coefficients({}, {(2, 5): b25, (3, 5): b35, (4, 5): b45}, 5, table)
    acted = act(ResidualParam(al, be, al * be, 1), ex2)
    _expect(report, "example 2: a_{3,5}", acted.a(3, 5), al * b35 + be * b25)
    _expect(report, "example 2: a_{4,5}", acted.a(4, 5), al * b45 + be * b35)
    numeric2 = NormalForm.from_coefficients({}, {(2, 5): 1, (4, 5): 1}, 5)
    r = detect_fibrations(numeric2, 5, SLICE1, tangencies=False, **gb_options)
    got = (r.classification, [tuple(str(v) for v in w.param.as_rationals()) for w in r.witnesses])
    _expect(report, "example 2: unique witness (0,0,0,1)", got, (UNIQUE, [("0", "0", "0", "1")]))

    r = detect_fibrations(model_p2_line(5), 5, **gb_options)
    _expect(report, "line model: verdict", r.classification, FAMILY)
    r = detect_fibrations(model_double_cover_diagonal(5), 5, **gb_options)
    loci = sorted(str(t.locus) for t in r.tangencies)
    report.add("double cover: at least two witnesses with tangency along the curve",
               r.count >= 2 and loci and all(x == "all-of-C" for x in loci),
               ">= 2 witnesses, all-of-C", f"{r.count} witnesses, {loci}")
    return report
