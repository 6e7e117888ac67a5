"""
Small expression grammar used by spec files.

Formulas are parsed with sympy and compiled to numpy functions, so a family
value like "(-1)^n*2^(-n0)/(n1+1)" is evaluated on whole index arrays at once.
"""
import logging
import re

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .exceptions import SpecError

logger = logging.getLogger(__name__)

_TRANSFORMATIONS = standard_transformations + (convert_xor,)

_FUNCTIONS = {
    'pi': sympy.pi,
    'E': sympy.E,
    'floor': sympy.floor,
    'ceil': sympy.ceiling,
    # least integer m with m - 1 < x <= m
    'ufloor': sympy.ceiling,
    'sin': sympy.sin,
    'cos': sympy.cos,
    'tan': sympy.tan,
    'atan': sympy.atan,
    'exp': sympy.exp,
    'log': sympy.log,
    'sqrt': sympy.sqrt,
    'abs': sympy.Abs,
    'Abs': sympy.Abs,
    'sign': sympy.sign,
    'Min': sympy.Min,
    'Max': sympy.Max,
}

_FORBIDDEN = re.compile(r'__|;|\blambda\b|\bimport\b|[\[\]{}]')

INDEX_VARIABLES = ('n',) + tuple(f'n{k}' for k in range(10)) + ('i',)


class Expression:
    """Compiled formula in a fixed list of variables"""

    def __init__(self, text, variables):
        if not isinstance(text, str) or not text.strip():
            raise SpecError("expression must be a non-empty string")
        if _FORBIDDEN.search(text):
            raise SpecError(f"expression '{text}' contains forbidden syntax")
        self.text = text
        self.variables = tuple(variables)
        symbols = {name: sympy.Symbol(name, real=True) for name in self.variables}
        try:
            expr = parse_expr(
                text,
                local_dict={**_FUNCTIONS, **symbols},
                transformations=_TRANSFORMATIONS,
            )
        except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as exc:
            raise SpecError(f"could not parse expression '{text}': {exc}") from exc
        if not isinstance(expr, sympy.Expr):
            raise SpecError(f"expression '{text}' is not arithmetic")
        unknown = sorted(s.name for s in expr.free_symbols if s.name not in symbols)
        if unknown:
            raise SpecError(f"expression '{text}' uses unknown names: {', '.join(unknown)}")
        self.expr = expr
        self._fn = sympy.lambdify([symbols[v] for v in self.variables], expr, modules='numpy')

    @property
    def used(self):
        return {s.name for s in self.expr.free_symbols}

    def __call__(self, **values):
        arrays = {name: np.asarray(values.get(name, 0.0), dtype=float) for name in self.variables}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        with np.errstate(all='ignore'):
            result = self._fn(*(arrays[name] for name in self.variables))
        result = np.broadcast_to(np.asarray(result, dtype=float), shape)
        return result if shape else float(result)

    def __repr__(self):
        return f"Expression({self.text!r})"


def compile_optional(text, variables):
    return Expression(text, variables) if text is not None else None
