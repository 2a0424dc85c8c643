"""Expression trees for problem functions.

A function row is a small AST over named variables.  Evaluation is
generic over the scalar type: feeding plain floats gives values, feeding
dual scalars from the AD engine gives values plus tangents in one sweep.
Both paths run the identical operation sequence, so the value component
of a dual sweep is bit-for-bit the same as a plain evaluation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

__all__ = [
    "Const", "Var", "Unary", "Binary", "Power",
    "EvalFault", "FunctionSet", "CallbackFunctions",
    "eval_expr", "free_variables", "format_expr", "int_power",
]

UNARY_OPS = ("neg", "sqrt", "exp", "log", "sin", "cos", "tan", "abs")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    """Reference to variable number `index` (0-based)."""
    index: int


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Power:
    """Integer power, expanded by repeated squaring so that small
    exponents stay exact in floating point."""
    base: object
    exponent: int


class EvalFault(Exception):
    """A function row could not be evaluated (domain error, overflow,
    division by zero).  `row` is the 0-based row index, or None when the
    fault cannot be attributed to a single row."""

    def __init__(self, row: Optional[int], reason: str):
        self.row = row
        self.reason = reason
        where = f"row {row + 1}" if row is not None else "function evaluation"
        super().__init__(f"{where}: {reason}")


def int_power(u, k: int):
    """u**k by repeated squaring.  Works for any scalar with * and /."""
    if k == 0:
        return 1.0
    if k < 0:
        return 1.0 / int_power(u, -k)
    acc = None
    sq = u
    while k:
        if k & 1:
            acc = sq if acc is None else acc * sq
        sq = sq * sq
        k >>= 1
    return acc


def _exp(u):
    return math.exp(u) if isinstance(u, (int, float)) else u.exp()


def _log(u):
    return math.log(u) if isinstance(u, (int, float)) else u.log()


def _sqrt(u):
    return math.sqrt(u) if isinstance(u, (int, float)) else u.sqrt()


def _sin(u):
    return math.sin(u) if isinstance(u, (int, float)) else u.sin()


def _cos(u):
    return math.cos(u) if isinstance(u, (int, float)) else u.cos()


def _tan(u):
    return math.tan(u) if isinstance(u, (int, float)) else u.tan()


def eval_expr(e, xs: Sequence, kink_tol: float = 0.0):
    """Evaluate one expression over the scalars in `xs`.

    `kink_tol` controls the nonsmoothness warning for abs(): when the
    argument lands within kink_tol of zero a RuntimeWarning is emitted,
    since the derivative there is one-sided.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return xs[e.index]
    if isinstance(e, Unary):
        v = eval_expr(e.arg, xs, kink_tol)
        op = e.op
        if op == "neg":
            return -v
        if op == "abs":
            val = v if isinstance(v, (int, float)) else v.val
            if abs(val) <= kink_tol:
                warnings.warn(
                    "abs() evaluated within %g of its kink; derivative is "
                    "one-sided there" % kink_tol, RuntimeWarning, stacklevel=2)
            return abs(v)
        if op == "sqrt":
            return _sqrt(v)
        if op == "exp":
            return _exp(v)
        if op == "log":
            return _log(v)
        if op == "sin":
            return _sin(v)
        if op == "cos":
            return _cos(v)
        if op == "tan":
            return _tan(v)
        raise ValueError(f"unknown unary op {op!r}")
    if isinstance(e, Binary):
        a = eval_expr(e.lhs, xs, kink_tol)
        b = eval_expr(e.rhs, xs, kink_tol)
        op = e.op
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            return a / b
        if op == "pow":
            # real power via exp/log, defined for positive base
            return _exp(b * _log(a))
        raise ValueError(f"unknown binary op {op!r}")
    if isinstance(e, Power):
        return int_power(eval_expr(e.base, xs, kink_tol), e.exponent)
    raise TypeError(f"not an expression node: {e!r}")


def free_variables(e) -> set:
    """Set of 0-based variable indices appearing in the expression."""
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Unary):
        return free_variables(e.arg)
    if isinstance(e, Binary):
        return free_variables(e.lhs) | free_variables(e.rhs)
    if isinstance(e, Power):
        return free_variables(e.base)
    raise TypeError(f"not an expression node: {e!r}")


def _contains_abs(e) -> bool:
    if isinstance(e, Unary):
        return e.op == "abs" or _contains_abs(e.arg)
    if isinstance(e, Binary):
        return _contains_abs(e.lhs) or _contains_abs(e.rhs)
    if isinstance(e, Power):
        return _contains_abs(e.base)
    return False


# Precedence levels used by the printer; must agree with the parser.
# addition 1 < multiplication 2 < power 3 < unary minus 4 < atoms 5.
_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_NEG, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e) -> int:
    if isinstance(e, (Const, Var)):
        if isinstance(e, Const) and e.value < 0:
            return _PREC_NEG
        return _PREC_ATOM
    if isinstance(e, Unary):
        return _PREC_NEG if e.op == "neg" else _PREC_ATOM
    if isinstance(e, Binary):
        return {"add": _PREC_ADD, "sub": _PREC_ADD,
                "mul": _PREC_MUL, "div": _PREC_MUL,
                "pow": _PREC_POW}[e.op]
    if isinstance(e, Power):
        return _PREC_POW
    raise TypeError(f"not an expression node: {e!r}")


def _fmt(e, names, need: int) -> str:
    s = _fmt_bare(e, names)
    return f"({s})" if _prec(e) < need else s


def _const_text(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_bare(e, names) -> str:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _fmt(e.arg, names, _PREC_NEG)
        return f"{e.op}({_fmt_bare(e.arg, names)})"
    if isinstance(e, Power):
        return f"{_fmt(e.base, names, _PREC_NEG)}^{e.exponent}"
    if isinstance(e, Binary):
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}[e.op]
        p = _prec(e)
        if e.op == "pow":
            # right associative
            return _fmt(e.lhs, names, _PREC_NEG) + "^" + _fmt(e.rhs, names, p)
        return _fmt(e.lhs, names, p) + sym + _fmt(e.rhs, names, p + 1)
    raise TypeError(f"not an expression node: {e!r}")


def format_expr(e, names: Sequence[str]) -> str:
    """Render an expression with minimal parentheses.

    Parsing the result reproduces the same tree, which makes the
    problem-file writer a faithful round trip.
    """
    return _fmt_bare(e, names)


class FunctionSet:
    """A vector function stored as one expression per row.

    Attributes
    ----------
    n : number of variables
    neF : number of rows
    rows : the expression trees
    var_names : names used for printing and error messages
    """

    def __init__(self, n: int, rows: Sequence, var_names: Optional[Sequence[str]] = None):
        self.n = int(n)
        self.rows = list(rows)
        self.neF = len(self.rows)
        self.var_names = list(var_names) if var_names is not None else [
            f"x{j+1}" for j in range(self.n)]
        for i, r in enumerate(self.rows):
            bad = [j for j in free_variables(r) if j >= self.n or j < 0]
            if bad:
                raise ValueError(f"row {i+1} references undefined variable index {bad[0]}")

    def eval_scalars(self, xs: Sequence, kink_tol: float = 0.0) -> list:
        """Evaluate every row over the given scalars.

        Faults are wrapped in EvalFault identifying the offending row.
        """
        out = []
        for i, r in enumerate(self.rows):
            try:
                out.append(eval_expr(r, xs, kink_tol))
            except (ZeroDivisionError, ValueError, OverflowError) as exc:
                raise EvalFault(i, str(exc)) from exc
        return out

    def eval_with_status(self, x, status: int):
        """Value evaluation under the solver's call protocol.

        Plain expression rows have no veto over trial points, so the
        returned mode is always 0.  Subclasses may override to request a
        shorter step (mode -1) or to abort the solve (mode < -1).
        """
        return self.eval_scalars([float(v) for v in x]), 0

    def free_variables(self) -> list:
        return [free_variables(r) for r in self.rows]

    def nonsmooth_rows(self) -> list:
        """0-based indices of rows containing abs()."""
        return [i for i, r in enumerate(self.rows) if _contains_abs(r)]


class CallbackFunctions:
    """FunctionSet-shaped adapter around a host callback.

    The callback receives a list of scalars (floats or duals) and must
    return one scalar per row, using only arithmetic the scalars
    support.  Useful for functions that are awkward to write as a single
    expression, e.g. piecewise definitions.
    """

    def __init__(self, n: int, neF: int, fn: Callable, var_names=None):
        self.n = int(n)
        self.neF = int(neF)
        self.fn = fn
        self.var_names = list(var_names) if var_names is not None else [
            f"x{j+1}" for j in range(self.n)]

    def eval_scalars(self, xs: Sequence, kink_tol: float = 0.0) -> list:
        try:
            out = list(self.fn(list(xs)))
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise EvalFault(None, str(exc)) from exc
        if len(out) != self.neF:
            raise ValueError(f"callback returned {len(out)} rows, expected {self.neF}")
        return out

    def eval_with_status(self, x, status: int):
        return self.eval_scalars([float(v) for v in x]), 0

    def nonsmooth_rows(self) -> list:
        return []
