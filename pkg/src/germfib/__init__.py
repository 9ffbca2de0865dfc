"""Normal forms of neighborhoods of rational curves and their transverse fibrations."""

from .algebra import ParamPoly, VarTable, format_poly, parse_poly
from .errors import (
    CapacityError,
    DomainError,
    EngineDefect,
    GermfibError,
    ParseError,
    StructuralError,
    TruncationWindowError,
    VerificationMismatch,
)
from .fibrations import (
    FibrationReport,
    detect_fibrations,
    model_diagonal,
    model_double_cover_diagonal,
    model_p2_line,
    obstruction_ideal,
    tangency_on_C,
    verify_three_fibrations,
)
from .groebner import Ideal, MonomialOrder, buchberger, ideal_equal, reduce, saturate_unit, solve_zero_dim
from .normalform import NormalForm, ResidualParam, act, is_normal_form, normalize, residual_charts
from .series import Cocycle, ChartChange, TransversalMap, cyclic_cover, map_compose, map_invert

__all__ = [
    "CapacityError", "ChartChange", "Cocycle", "DomainError", "EngineDefect", "FibrationReport",
    "GermfibError", "Ideal", "MonomialOrder", "NormalForm", "ParamPoly", "ParseError",
    "ResidualParam", "StructuralError", "TransversalMap", "TruncationWindowError", "VarTable",
    "VerificationMismatch", "act", "buchberger", "cyclic_cover", "detect_fibrations",
    "format_poly", "ideal_equal", "is_normal_form", "map_compose", "map_invert",
    "model_diagonal", "model_double_cover_diagonal", "model_p2_line", "normalize",
    "obstruction_ideal", "parse_poly", "reduce", "residual_charts", "saturate_unit",
    "solve_zero_dim", "tangency_on_C", "verify_three_fibrations",
]
