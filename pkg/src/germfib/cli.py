"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 parse error, 3 capacity exceeded,
4 verification mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .algebra import VarTable, format_poly, parse_poly
from .errors import CapacityError, DomainError, GermfibError, ParseError, VerificationMismatch
from .fibrations import (
    SATURATE,
    SLICE1,
    detect_fibrations,
    model_diagonal,
    model_double_cover_diagonal,
    model_p2_line,
    verify_examples,
    verify_three_fibrations,
)
from .groebner import DEFAULT_STEP_LIMIT
from .normalform import NormalForm, ResidualParam, act, is_normal_form, normalize
from .series import Cocycle, TransversalSeries, cyclic_cover, format_cocycle, parse_cocycle

EXIT_OK, EXIT_DOMAIN, EXIT_PARSE, EXIT_CAPACITY, EXIT_MISMATCH = 0, 1, 2, 3, 4

COMMANDS = ("normalize", "act", "detect", "cover", "models", "verify-paper")


@dataclass
class CommandConfig:
    command: str
    inputs: list = field(default_factory=list)
    order: int | None = None
    theta: str = SATURATE
    output: str = "human"
    parallel: int = 1
    param: str | None = None
    out_dir: str = "."
    step_limit: int = DEFAULT_STEP_LIMIT

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if self.order is not None and self.order < 1:
            raise DomainError("--order must be >= 1")


def _format_series(tag: str, s: TransversalSeries) -> list:
    return [f"{tag} {k} {n} {format_poly(s.coefficient(k, n))}" for k, n in s.support()]


def _format_chart(name: str, chart) -> str:
    m = chart.map
    lines = [f"# chart {name}: (x, y) -> (x + sum a_n(x) y^n, sum b_n(x) y^n)"]
    lines += _format_series(f"{name} a", m.x_tail) + _format_series(f"{name} b", m.y_part)
    return "\n".join(lines) + "\n"


def _to_normal_form(c: Cocycle, order: int | None) -> NormalForm:
    """Cover (if C^2 >= 2), then normalize unless already normal."""
    order = c.order if order is None else order
    if c.self_intersection >= 2:
        c = cyclic_cover(c, order)
    if order > c.order:
        raise DomainError(f"--order {order} exceeds the input truncation {c.order}")
    c = c.truncate(order)
    if is_normal_form(c).ok:
        return NormalForm(c, order)
    return normalize(c, order).normal_form


def _parse_param(text: str) -> ResidualParam:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ParseError("--param needs four comma-separated values alpha,beta,gamma,theta", 1, 1)
    table = VarTable([])
    vals = [parse_poly(p, table, column=1).constant_value() for p in parts]
    return ResidualParam(*vals)


def _detect_one(args):
    text, order, theta, style, step_limit = args
    nf = _to_normal_form(parse_cocycle(text), order)
    report = detect_fibrations(nf, order if order is not None else nf.order, theta, step_limit=step_limit)
    return report.format(style)


def run(config: CommandConfig, texts: list | None = None) -> tuple:
    """Execute ``config``; returns ``(exit_code, output_text)``.

    ``texts`` holds the contents of the input files (read from disk when omitted).
    """
    try:
        if texts is None:
            texts = []
            for path in config.inputs:
                with open(path, encoding="utf-8") as fh:
                    texts.append(fh.read())
        return EXIT_OK, _dispatch(config, texts)
    except ParseError as exc:
        return EXIT_PARSE, f"parse error: {exc}\n"
    except CapacityError as exc:
        diag = ", ".join(f"{k}={v}" for k, v in sorted(exc.diagnostics.items()))
        return EXIT_CAPACITY, f"capacity exceeded in {config.command}: {exc} ({diag})\n"
    except VerificationMismatch as exc:
        return EXIT_MISMATCH, f"verification mismatch: {exc}\n"
    except (GermfibError, OSError) as exc:
        return EXIT_DOMAIN, f"error: {exc}\n"


def _need_inputs(config, texts, exactly_one=True):
    if not texts or (exactly_one and len(texts) != 1):
        raise DomainError(f"{config.command} takes {'one input file' if exactly_one else 'input files'}")


def _dispatch(config: CommandConfig, texts: list) -> str:
    cmd = config.command
    if cmd == "normalize":
        _need_inputs(config, texts)
        c = parse_cocycle(texts[0])
        result = normalize(c, config.order)
        out = format_cocycle(result.normal_form.cocycle)
        out += _format_chart("chart0", result.chart0) + _format_chart("chart_inf", result.chart_inf)
        # the elimination log is commentary, so machine output stays lean
        return out + result.report() if config.output == "human" else out
    if cmd == "act":
        _need_inputs(config, texts)
        if config.param is None:
            raise DomainError("act needs --param alpha,beta,gamma,theta")
        c = parse_cocycle(texts[0])
        if config.order is not None:
            c = c.truncate(config.order)
        check = is_normal_form(c)
        if not check.ok:
            raise DomainError(f"input is not in normal form: offenders {check.offenders}")
        return format_cocycle(act(_parse_param(config.param), NormalForm(c, c.order)).cocycle)
    if cmd == "cover":
        _need_inputs(config, texts)
        c = parse_cocycle(texts[0])
        return format_cocycle(cyclic_cover(c, config.order or c.order))
    if cmd == "detect":
        _need_inputs(config, texts, exactly_one=False)
        jobs = [(t, config.order, config.theta, config.output, config.step_limit) for t in texts]
        if config.parallel > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=config.parallel) as pool:
                reports = list(pool.map(_detect_one, jobs))
        else:
            reports = [_detect_one(j) for j in jobs]
        if len(reports) == 1:
            return reports[0]
        names = config.inputs or [f"input{i}" for i in range(1, len(reports) + 1)]
        return "".join(f"# file {name}\n{rep}" for name, rep in zip(names, reports))
    if cmd == "models":
        order = config.order or 7
        models = {
            "p2_line.cocycle": model_p2_line(order).cocycle,
            "diagonal.cocycle": model_diagonal(order),
            "double_cover_diagonal.cocycle": model_double_cover_diagonal(order).cocycle,
        }
        os.makedirs(config.out_dir, exist_ok=True)
        lines = []
        for name, c in models.items():
            path = os.path.join(config.out_dir, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(format_cocycle(c))
            lines.append(f"wrote {path}")
        return "\n".join(lines) + "\n"
    if cmd == "verify-paper":
        opts = {"step_limit": config.step_limit}
        examples = verify_examples(**opts)
        three = verify_three_fibrations(max(config.order or 7, 7), **opts)
        text = examples.format() + three.format()
        if not (examples.ok and three.ok):
            bad = [c for c in examples.checks + three.checks if not c.ok]
            raise VerificationMismatch(text + f"{len(bad)} check(s) failed", bad[0].expected, bad[0].actual)
        return text + "all checks passed\n"
    raise DomainError(f"unknown command {cmd!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="germfib",
        description="Normal forms and transverse fibrations of rational curve neighborhoods.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=None, help="truncation order N")
    common.add_argument("--format", dest="output", choices=("human", "machine"), default="human")
    common.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT,
                        help="reduction step cap for Groebner computations")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("normalize", parents=[common], help="reduce a C^2 = 1 cocycle to normal form")
    p.add_argument("input")
    p = sub.add_parser("act", parents=[common], help="apply the residual action to a normal form")
    p.add_argument("input")
    p.add_argument("--param", required=True, help="alpha,beta,gamma,theta (rationals, theta != 0)")
    p = sub.add_parser("detect", parents=[common], help="classify transverse fibrations")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--theta", choices=(SATURATE, SLICE1), default=SATURATE)
    p.add_argument("--parallel", type=int, default=1, help="worker processes across input files")
    p = sub.add_parser("cover", parents=[common], help="cyclic cover branched along the curve")
    p.add_argument("input")
    p = sub.add_parser("models", parents=[common], help="write the built-in model cocycles")
    p.add_argument("--out", dest="out_dir", default=".")
    sub.add_parser("verify-paper", parents=[common], help="re-run every golden computation")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    inputs = getattr(args, "inputs", None) or ([args.input] if hasattr(args, "input") else [])
    try:
        config = CommandConfig(
            command=args.command, inputs=inputs, order=args.order, output=args.output,
            theta=getattr(args, "theta", SATURATE), parallel=getattr(args, "parallel", 1),
            param=getattr(args, "param", None), out_dir=getattr(args, "out_dir", "."),
            step_limit=args.step_limit)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    code, text = run(config)
    (sys.stdout if code == EXIT_OK else sys.stderr).write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
