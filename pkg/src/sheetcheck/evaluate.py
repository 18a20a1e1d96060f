"""Workbook evaluation and tolerant value comparison.

Cells evaluate in dependency order; reference cycles produce the CYCLE
error value and error values propagate through every operator and function
that consumes them.  Blank coerces to 0 inside scalar arithmetic but is
skipped by aggregate functions; text never coerces to a number, booleans
count as 1 and 0.  Numbers are finite 64-bit floats: any operation that
would produce NaN or infinity yields the BAD_VALUE error instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .formulas import (
    Binary,
    BinOp,
    BoolLit,
    CellRef,
    FormulaAst,
    NumberLit,
    RangeRef,
    TextLit,
    Unary,
    UnaryOp,
    parse_formula,
    range_addresses,
)
from .grid import (
    BLANK,
    VALUE_TYPES,
    Blank,
    Boolean,
    CellAddress,
    CellError,
    ErrorKind,
    Formula,
    Number,
    Text,
    Value,
    Workbook,
    format_value,
)

DIV_ZERO = CellError(ErrorKind.DIV_ZERO)
BAD_REF = CellError(ErrorKind.BAD_REF)
CYCLE = CellError(ErrorKind.CYCLE)
BAD_VALUE = CellError(ErrorKind.BAD_VALUE)


@dataclass(frozen=True)
class Tolerance:
    """Absolute and relative slack for numeric comparison."""

    abs: float = 1e-9
    rel: float = 1e-9

    def __post_init__(self) -> None:
        if self.abs < 0 or self.rel < 0:
            raise ValueError("tolerances must be non-negative")


DEFAULT_TOLERANCE = Tolerance()


def values_equal(a: Value, b: Value, tolerance: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Compare two cell values under a tolerance.

    Numbers are equal when their difference is within the larger of the
    absolute and relative bounds; text compares case-sensitively after
    trimming surrounding whitespace; error values compare by kind; values
    of different variants are never equal (Blank is not 0).  The relation
    is reflexive and symmetric but, by the nature of tolerances, not
    transitive.
    """
    if isinstance(a, Number) and isinstance(b, Number):
        bound = max(tolerance.abs, tolerance.rel * max(abs(a.value), abs(b.value)))
        return abs(a.value - b.value) <= bound
    if isinstance(a, Text) and isinstance(b, Text):
        return a.value.strip() == b.value.strip()
    if isinstance(a, Boolean) and isinstance(b, Boolean):
        return a.value is b.value
    if isinstance(a, CellError) and isinstance(b, CellError):
        return a.kind is b.kind
    if isinstance(a, Blank) and isinstance(b, Blank):
        return True
    return False


# --------------------------------------------------------------------------
# Coercions
# --------------------------------------------------------------------------


def _as_number(value: Value) -> float | CellError:
    if isinstance(value, Number):
        return value.value
    if isinstance(value, Blank):
        return 0.0
    if isinstance(value, Boolean):
        return 1.0 if value.value else 0.0
    if isinstance(value, CellError):
        return value
    return BAD_VALUE


def _number_value(x: float) -> Value:
    if isinstance(x, complex) or not math.isfinite(x):
        return BAD_VALUE
    return Number(x)


def _first_error(values: list[Value]) -> CellError | None:
    for value in values:
        if isinstance(value, CellError):
            return value
    return None


# --------------------------------------------------------------------------
# Function semantics
# --------------------------------------------------------------------------


def _numeric_operands(args: list[Value]) -> list[float] | CellError:
    """Aggregate view of arguments: blanks and text are skipped."""
    numbers = []
    for value in args:
        if isinstance(value, CellError):
            return value
        if isinstance(value, (Blank, Text)):
            continue
        numbers.append(1.0 if isinstance(value, Boolean) else value.value)
    return numbers


def _round_half_away(x: float, digits: int) -> float:
    if digits >= 0:
        scale = 10 ** digits
        return math.copysign(math.floor(abs(x) * scale + 0.5) / scale, x)
    scale = 10 ** (-digits)
    return math.copysign(math.floor(abs(x) / scale + 0.5) * scale, x)


def apply_function(name: str, args: list[Value]) -> Value:
    """Apply a supported function to already-evaluated argument values.

    Range arguments must be expanded to individual cell values beforehand.
    Arity violations yield BAD_VALUE; AVG of zero numeric operands yields
    DIV_ZERO, MIN and MAX of zero numeric operands yield BAD_VALUE.
    """
    if name in ("SUM", "AVG", "COUNT", "MIN", "MAX"):
        numbers = _numeric_operands(args)
        if isinstance(numbers, CellError):
            return numbers
        if name == "SUM":
            return _number_value(math.fsum(numbers))
        if name == "COUNT":
            return Number(float(len(numbers)))
        if name == "AVG":
            if not numbers:
                return DIV_ZERO
            return _number_value(math.fsum(numbers) / len(numbers))
        if not numbers:
            return BAD_VALUE
        return _number_value(min(numbers) if name == "MIN" else max(numbers))

    # IF included: all arguments are consumed, so an error in either branch
    # propagates and a structural cycle always surfaces as CYCLE.
    error = _first_error(args)
    if error is not None:
        return error

    if name == "IF":
        if len(args) not in (2, 3):
            return BAD_VALUE
        cond = args[0]
        if isinstance(cond, Boolean):
            taken = cond.value
        elif isinstance(cond, Number):
            taken = cond.value != 0.0
        else:
            return BAD_VALUE
        if taken:
            return args[1]
        return args[2] if len(args) == 3 else Boolean(False)

    if name == "ROUND":
        if len(args) != 2:
            return BAD_VALUE
        x = _as_number(args[0])
        digits = _as_number(args[1])
        if isinstance(x, CellError):
            return x
        if isinstance(digits, CellError):
            return digits
        return _number_value(_round_half_away(x, int(digits)))

    if name == "ABS":
        if len(args) != 1:
            return BAD_VALUE
        x = _as_number(args[0])
        if isinstance(x, CellError):
            return x
        return _number_value(abs(x))

    raise ValueError(f"unsupported function {name!r}")


# --------------------------------------------------------------------------
# Operator semantics
# --------------------------------------------------------------------------


def _as_text(value: Value) -> str | CellError:
    if isinstance(value, CellError):
        return value
    return format_value(value)


def _arithmetic(op: BinOp, left: Value, right: Value) -> Value:
    a = _as_number(left)
    if isinstance(a, CellError):
        return a
    b = _as_number(right)
    if isinstance(b, CellError):
        return b
    if op is BinOp.ADD:
        return _number_value(a + b)
    if op is BinOp.SUB:
        return _number_value(a - b)
    if op is BinOp.MUL:
        return _number_value(a * b)
    if op is BinOp.DIV:
        if b == 0.0:
            return DIV_ZERO
        return _number_value(a / b)
    try:
        return _number_value(a ** b)
    except ZeroDivisionError:
        return DIV_ZERO
    except (OverflowError, ValueError):
        return BAD_VALUE


def _promote_blank(a: Value, b: Value) -> tuple[Value, Value]:
    if isinstance(a, Blank) and isinstance(b, Number):
        return Number(0.0), b
    if isinstance(b, Blank) and isinstance(a, Number):
        return a, Number(0.0)
    if isinstance(a, Blank) and isinstance(b, Text):
        return Text(""), b
    if isinstance(b, Blank) and isinstance(a, Text):
        return a, Text("")
    return a, b


def _comparison(op: BinOp, left: Value, right: Value) -> Value:
    if isinstance(left, CellError):
        return left
    if isinstance(right, CellError):
        return right
    a, b = _promote_blank(left, right)
    same_variant = type(a) is type(b)
    if op in (BinOp.EQ, BinOp.NE):
        if isinstance(a, Blank) and isinstance(b, Blank):
            equal = True
        elif not same_variant:
            equal = False
        elif isinstance(a, Number):
            equal = a.value == b.value  # type: ignore[union-attr]
        elif isinstance(a, Text):
            equal = a.value == b.value  # type: ignore[union-attr]
        else:
            equal = a.value is b.value  # type: ignore[union-attr]
        return Boolean(equal if op is BinOp.EQ else not equal)
    if not same_variant or not isinstance(a, (Number, Text)):
        return BAD_VALUE
    x, y = a.value, b.value  # type: ignore[union-attr]
    if op is BinOp.LT:
        return Boolean(x < y)
    if op is BinOp.LE:
        return Boolean(x <= y)
    if op is BinOp.GT:
        return Boolean(x > y)
    return Boolean(x >= y)


_Resolver = Callable[[CellAddress], Value]


def _eval(node: FormulaAst, resolve: _Resolver) -> Value:
    if isinstance(node, NumberLit):
        return Number(node.value)
    if isinstance(node, TextLit):
        return Text(node.text)
    if isinstance(node, BoolLit):
        return Boolean(node.value)
    if isinstance(node, CellRef):
        return resolve(node.address)
    if isinstance(node, RangeRef):
        return BAD_VALUE  # a bare range is not a scalar
    if isinstance(node, Unary):
        operand = _as_number(_eval(node.operand, resolve))
        if isinstance(operand, CellError):
            return operand
        return _number_value(-operand if node.op is UnaryOp.NEG else operand)
    if isinstance(node, Binary):
        left = _eval(node.left, resolve)
        right = _eval(node.right, resolve)
        if node.op in (BinOp.ADD, BinOp.SUB, BinOp.MUL, BinOp.DIV, BinOp.POW):
            return _arithmetic(node.op, left, right)
        if node.op is BinOp.CONCAT:
            a = _as_text(left)
            if isinstance(a, CellError):
                return a
            b = _as_text(right)
            if isinstance(b, CellError):
                return b
            return Text(a + b)
        return _comparison(node.op, left, right)
    values: list[Value] = []
    for arg in node.args:
        if isinstance(arg, RangeRef):
            values.extend(resolve(address) for address in range_addresses(arg))
        else:
            values.append(_eval(arg, resolve))
    return apply_function(node.name, values)


def evaluate_ast(ast: FormulaAst, values: Mapping[CellAddress, Value]) -> Value:
    """Evaluate a formula AST over a fixed grid of cell values.

    Addresses missing from `values` read as Blank; no sheet-existence
    checks apply.
    """
    return _eval(ast, lambda address: values.get(address, BLANK))


# --------------------------------------------------------------------------
# Whole-workbook evaluation
# --------------------------------------------------------------------------

Contents = dict[CellAddress, "Value | FormulaAst"]


def workbook_contents(workbook: Workbook) -> Contents:
    """Flatten a workbook into an address map of values and parsed formulas."""
    contents: Contents = {}
    for cell in workbook.iter_cells():
        if isinstance(cell.content, Formula):
            contents[cell.address] = parse_formula(cell.content.source, cell.address.sheet)
        else:
            contents[cell.address] = cell.content
    return contents


def cell_value(
    contents: Contents,
    sheets: frozenset[str] | set[str],
    address: CellAddress,
    memo: dict[CellAddress, Value],
    _visiting: set[CellAddress] | None = None,
) -> Value:
    """Evaluate one cell on demand, memoizing into `memo`.

    References to sheets outside `sheets` read as BAD_REF; a reference back
    into a cell currently being evaluated reads as CYCLE, which then
    propagates to every cell on the cycle.
    """
    visiting = _visiting if _visiting is not None else set()

    def resolve(target: CellAddress) -> Value:
        cached = memo.get(target)
        if cached is not None:
            return cached
        if target.sheet not in sheets:
            return BAD_REF
        if target in visiting:
            return CYCLE
        content = contents.get(target, BLANK)
        if isinstance(content, VALUE_TYPES):
            memo[target] = content
            return content
        visiting.add(target)
        value = _eval(content, resolve)
        visiting.discard(target)
        memo[target] = value
        return value

    return resolve(address)


def evaluate(workbook: Workbook) -> dict[CellAddress, Value]:
    """Evaluate every cell of a workbook.

    The result covers every constant cell, every formula cell and every
    cell referenced by a formula (blank when absent); referenced addresses
    on nonexistent sheets are not part of the grid, the referring formula
    simply evaluates to BAD_REF.  The workbook must have passed the syntax
    check.
    """
    contents = workbook_contents(workbook)
    sheets = frozenset(workbook.sheet_names())
    memo: dict[CellAddress, Value] = {}
    for address in contents:
        cell_value(contents, sheets, address, memo)
    return {address: value for address, value in memo.items() if address.sheet in sheets}
