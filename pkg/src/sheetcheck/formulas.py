"""Formula language: lexing, parsing, reference extraction, canonical forms.

Operator precedence, loosest first: comparisons, text concatenation "&",
additive "+ -", multiplicative "* /", unary sign, exponentiation "^".
All binary operators are left-associative except "^", which is
right-associative and binds tighter than unary sign.  Function names are
case-insensitive, AVERAGE is an alias for AVG, and both "," and ";" are
accepted as argument separators.  The full grammar ships in the README.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator

from .grid import (
    DEFAULT_SHEET,
    CellAddress,
    Formula,
    Workbook,
    column_index,
    column_letters,
    format_number,
    row_major,
)

SUPPORTED_FUNCTIONS = frozenset({"SUM", "AVG", "COUNT", "MIN", "MAX", "IF", "ROUND", "ABS"})
FUNCTION_ALIASES = {"AVERAGE": "AVG"}

DEFAULT_RANGE_LIMIT = 10_000


class FormulaError(ValueError):
    """Base for formula-stage failures; carries the source position."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(message)
        self.position = position


class FormulaSyntaxError(FormulaError):
    pass


class UnknownFunctionError(FormulaError):
    pass


class RangeCapacityError(ValueError):
    """A range expands to more cells than the configured bound."""


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


class UnaryOp(Enum):
    NEG = "-"
    POS = "+"

    @property
    def symbol(self) -> str:
        return self.value


class BinOp(Enum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    POW = "^"
    CONCAT = "&"
    EQ = "="
    NE = "<>"
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class TextLit:
    text: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class CellRef:
    address: CellAddress
    col_absolute: bool = False
    row_absolute: bool = False


@dataclass(frozen=True)
class RangeRef:
    """A rectangular cell range; `start` is always the top-left corner."""

    start: CellRef
    end: CellRef


@dataclass(frozen=True)
class Unary:
    op: UnaryOp
    operand: "FormulaAst"


@dataclass(frozen=True)
class Binary:
    op: BinOp
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class FuncCall:
    name: str
    args: tuple["FormulaAst", ...]


FormulaAst = NumberLit | TextLit | BoolLit | CellRef | RangeRef | Unary | Binary | FuncCall


def range_size(ref: RangeRef) -> int:
    cols = ref.end.address.col - ref.start.address.col + 1
    rows = ref.end.address.row - ref.start.address.row + 1
    return cols * rows


def range_addresses(ref: RangeRef, limit: int = DEFAULT_RANGE_LIMIT) -> list[CellAddress]:
    """Expand a range to its member addresses, row-major."""
    if range_size(ref) > limit:
        raise RangeCapacityError(
            f"range {render_reference(ref)} covers {range_size(ref)} cells, limit is {limit}"
        )
    sheet = ref.start.address.sheet
    return [
        CellAddress(sheet, col, row)
        for row in range(ref.start.address.row, ref.end.address.row + 1)
        for col in range(ref.start.address.col, ref.end.address.col + 1)
    ]


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<WS>\s+)
    | (?P<NUMBER>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    | (?P<STRING>"(?:[^"]|"")*")
    | (?P<CELLREF>(?P<CABS>\$?)(?P<CCOL>[A-Za-z]+)(?P<RABS>\$?)(?P<CROW>[1-9][0-9]*))
    | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<OP><=|>=|<>|[=<>+\-*/^&])
    | (?P<LPAREN>\()
    | (?P<RPAREN>\))
    | (?P<COLON>:)
    | (?P<SEP>[,;])
    | (?P<BANG>!)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int
    parts: tuple[str, ...] = ()


def _tokenize(source: str, offset: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if not match:
            raise FormulaSyntaxError(f"unexpected character {source[pos]!r}", offset + pos)
        kind = match.lastgroup or ""
        if kind == "CROW":  # lastgroup reports the innermost named group
            kind = "CELLREF"
        if kind != "WS":
            parts: tuple[str, ...] = ()
            if kind == "CELLREF":
                parts = (match["CABS"], match["CCOL"], match["RABS"], match["CROW"])
            tokens.append(_Token(kind, match.group(), offset + pos, parts))
        pos = match.end()
    tokens.append(_Token("END", "", offset + pos))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_COMPARISONS = {"=": BinOp.EQ, "<>": BinOp.NE, "<": BinOp.LT, "<=": BinOp.LE, ">": BinOp.GT, ">=": BinOp.GE}


class _Parser:
    def __init__(self, tokens: list[_Token], sheet: str):
        self.tokens = tokens
        self.sheet = sheet
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def take(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str, what: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise FormulaSyntaxError(f"expected {what}", token.pos)
        return self.take()

    def at_op(self, *symbols: str) -> bool:
        token = self.peek()
        return token.kind == "OP" and token.text in symbols

    # expression := comparison
    def expression(self) -> FormulaAst:
        node = self.concat()
        while self.at_op(*_COMPARISONS):
            op = _COMPARISONS[self.take().text]
            node = Binary(op, node, self.concat())
        return node

    def concat(self) -> FormulaAst:
        node = self.additive()
        while self.at_op("&"):
            self.take()
            node = Binary(BinOp.CONCAT, node, self.additive())
        return node

    def additive(self) -> FormulaAst:
        node = self.multiplicative()
        while self.at_op("+", "-"):
            op = BinOp.ADD if self.take().text == "+" else BinOp.SUB
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> FormulaAst:
        node = self.unary()
        while self.at_op("*", "/"):
            op = BinOp.MUL if self.take().text == "*" else BinOp.DIV
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> FormulaAst:
        if self.at_op("-", "+"):
            op = UnaryOp.NEG if self.take().text == "-" else UnaryOp.POS
            return Unary(op, self.unary())
        return self.power()

    def power(self) -> FormulaAst:
        node = self.atom()
        if self.at_op("^"):
            self.take()
            return Binary(BinOp.POW, node, self.unary())
        return node

    def atom(self) -> FormulaAst:
        token = self.peek()
        if token.kind == "NUMBER":
            self.take()
            return NumberLit(float(token.text))
        if token.kind == "STRING":
            self.take()
            return TextLit(token.text[1:-1].replace('""', '"'))
        if token.kind == "CELLREF":
            return self.reference(self.sheet)
        if token.kind == "IDENT":
            return self.ident()
        if token.kind == "LPAREN":
            self.take()
            node = self.expression()
            self.expect("RPAREN", "')'")
            return node
        raise FormulaSyntaxError(f"unexpected {token.text!r}" if token.text else "unexpected end of formula", token.pos)

    def ident(self) -> FormulaAst:
        token = self.take()
        following = self.peek()
        if following.kind == "BANG":
            self.take()
            if self.peek().kind != "CELLREF":
                raise FormulaSyntaxError("expected a cell address after '!'", self.peek().pos)
            return self.reference(token.text)
        if following.kind == "LPAREN":
            name = token.text.upper()
            name = FUNCTION_ALIASES.get(name, name)
            if name not in SUPPORTED_FUNCTIONS:
                raise UnknownFunctionError(f"unknown function {token.text!r}", token.pos)
            self.take()
            args: list[FormulaAst] = []
            if self.peek().kind != "RPAREN":
                args.append(self.expression())
                while self.peek().kind == "SEP":
                    self.take()
                    args.append(self.expression())
            self.expect("RPAREN", "')' to close the argument list")
            return FuncCall(name, tuple(args))
        upper = token.text.upper()
        if upper == "TRUE":
            return BoolLit(True)
        if upper == "FALSE":
            return BoolLit(False)
        raise UnknownFunctionError(f"unknown name {token.text!r}", token.pos)

    def reference(self, sheet: str) -> FormulaAst:
        first = self.cell_ref(sheet)
        if self.peek().kind != "COLON":
            return first
        colon = self.take()
        if self.peek().kind == "IDENT":  # qualified second corner: must be the same sheet
            qualifier = self.take()
            self.expect("BANG", "'!'")
            if qualifier.text != sheet:
                raise FormulaSyntaxError("range corners must be on the same sheet", qualifier.pos)
        if self.peek().kind != "CELLREF":
            raise FormulaSyntaxError("expected a cell address after ':'", colon.pos)
        second = self.cell_ref(sheet)
        return _normalized_range(first, second)

    def cell_ref(self, sheet: str) -> CellRef:
        token = self.expect("CELLREF", "a cell address")
        col_abs, letters, row_abs, row = token.parts
        return CellRef(
            CellAddress(sheet, column_index(letters), int(row)),
            col_absolute=bool(col_abs),
            row_absolute=bool(row_abs),
        )


def _normalized_range(a: CellRef, b: CellRef) -> RangeRef:
    """Order corners so `start` is top-left; flags travel with the coordinate."""
    if a.address.col <= b.address.col:
        left_col, left_abs, right_col, right_abs = a.address.col, a.col_absolute, b.address.col, b.col_absolute
    else:
        left_col, left_abs, right_col, right_abs = b.address.col, b.col_absolute, a.address.col, a.col_absolute
    if a.address.row <= b.address.row:
        top_row, top_abs, bottom_row, bottom_abs = a.address.row, a.row_absolute, b.address.row, b.row_absolute
    else:
        top_row, top_abs, bottom_row, bottom_abs = b.address.row, b.row_absolute, a.address.row, a.row_absolute
    sheet = a.address.sheet
    return RangeRef(
        CellRef(CellAddress(sheet, left_col, top_row), left_abs, top_abs),
        CellRef(CellAddress(sheet, right_col, bottom_row), right_abs, bottom_abs),
    )


@lru_cache(maxsize=65536)
def parse_formula(text: str, sheet: str = DEFAULT_SHEET) -> FormulaAst:
    """Parse formula source text (must start with "=") into an AST.

    Unqualified cell references resolve against `sheet`.  Raises
    FormulaSyntaxError or UnknownFunctionError with the offending position.
    """
    if not text.startswith("="):
        raise FormulaSyntaxError("formula source must start with '='", 0)
    parser = _Parser(_tokenize(text[1:], offset=1), sheet)
    node = parser.expression()
    trailing = parser.peek()
    if trailing.kind != "END":
        raise FormulaSyntaxError(f"unexpected {trailing.text!r} after expression", trailing.pos)
    return node


# --------------------------------------------------------------------------
# Whole-workbook syntax check
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntaxIssue:
    cell: CellAddress
    message: str
    position: int


@dataclass(frozen=True)
class SyntaxReport:
    errors: tuple[SyntaxIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def syntax_check(workbook: Workbook) -> SyntaxReport:
    """Parse every formula cell; the report lists all failures row-major.

    A non-empty report means the workbook cannot be analyzed further and
    callers return an error instead of feedback.
    """
    issues = []
    for cell in workbook.iter_cells():
        if not isinstance(cell.content, Formula):
            continue
        try:
            parse_formula(cell.content.source, cell.address.sheet)
        except FormulaError as exc:
            issues.append(SyntaxIssue(cell.address, str(exc), exc.position))
    return SyntaxReport(tuple(issues))


# --------------------------------------------------------------------------
# Reference extraction
# --------------------------------------------------------------------------


def _walk(node: FormulaAst) -> Iterator[FormulaAst]:
    yield node
    if isinstance(node, Unary):
        yield from _walk(node.operand)
    elif isinstance(node, Binary):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, FuncCall):
        for arg in node.args:
            yield from _walk(arg)


def references_of(ast: FormulaAst, limit: int = DEFAULT_RANGE_LIMIT) -> tuple[CellAddress, ...]:
    """All cell addresses a formula references, deduplicated, row-major.

    Ranges expand to individual addresses; absoluteness flags are dropped.
    """
    addresses: set[CellAddress] = set()
    for node in _walk(ast):
        if isinstance(node, CellRef):
            addresses.add(node.address)
        elif isinstance(node, RangeRef):
            addresses.update(range_addresses(node, limit))
    return row_major(addresses)


# --------------------------------------------------------------------------
# Canonical forms
# --------------------------------------------------------------------------

_CHAIN_OPS = (BinOp.ADD, BinOp.MUL)


def _node_key(node: FormulaAst) -> tuple:
    """Deterministic total order: references row-major, then literals by value."""
    if isinstance(node, CellRef):
        a = node.address
        return (0, a.sheet, a.row, a.col, node.col_absolute, node.row_absolute)
    if isinstance(node, NumberLit):
        return (1, node.value)
    if isinstance(node, TextLit):
        return (2, node.text)
    if isinstance(node, BoolLit):
        return (3, node.value)
    if isinstance(node, RangeRef):
        return (4, _node_key(node.start), _node_key(node.end))
    if isinstance(node, Unary):
        return (5, node.op.name, _node_key(node.operand))
    if isinstance(node, Binary):
        return (6, node.op.name, _node_key(node.left), _node_key(node.right))
    return (7, node.name, tuple(_node_key(a) for a in node.args))


def _flatten_chain(node: FormulaAst, op: BinOp) -> list[FormulaAst]:
    if isinstance(node, Binary) and node.op is op:
        return _flatten_chain(node.left, op) + _flatten_chain(node.right, op)
    return [node]


def _chain(operands: list[FormulaAst], op: BinOp) -> FormulaAst:
    # Balanced shape: recursive equality, rendering and evaluation stay
    # shallow even when a large range expands to thousands of operands.
    if not operands:
        return NumberLit(0.0)
    if len(operands) == 1:
        return operands[0]
    mid = (len(operands) + 1) // 2
    return Binary(op, _chain(operands[:mid], op), _chain(operands[mid:], op))


def _sorted_chain(node: Binary) -> FormulaAst:
    operands = sorted(_flatten_chain(node, node.op), key=_node_key)
    return _chain(operands, node.op)


def _expand_operands(args: tuple[FormulaAst, ...], limit: int) -> list[FormulaAst]:
    operands: list[FormulaAst] = []
    for arg in args:
        if isinstance(arg, RangeRef):
            operands.extend(
                CellRef(a, arg.start.col_absolute, arg.start.row_absolute)
                for a in range_addresses(arg, limit)
            )
        else:
            operands.append(arg)
    return operands


def _canon(node: FormulaAst, limit: int) -> FormulaAst:
    if isinstance(node, Unary):
        operand = _canon(node.operand, limit)
        if node.op is UnaryOp.NEG and isinstance(operand, Unary) and operand.op is UnaryOp.NEG:
            return operand.operand
        return Unary(node.op, operand)
    if isinstance(node, Binary):
        rebuilt = Binary(node.op, _canon(node.left, limit), _canon(node.right, limit))
        if rebuilt.op in _CHAIN_OPS:
            return _sorted_chain(rebuilt)
        return rebuilt
    if isinstance(node, FuncCall):
        args = tuple(_canon(arg, limit) for arg in node.args)
        if node.name in ("SUM", "AVG"):
            operands = _expand_operands(args, limit)
            total = _chain(sorted(operands, key=_node_key), BinOp.ADD)
            if node.name == "SUM":
                return total
            return Binary(BinOp.DIV, total, NumberLit(float(len(operands))))
        return FuncCall(node.name, args)
    return node


def canonicalize(ast: FormulaAst, limit: int = DEFAULT_RANGE_LIMIT) -> FormulaAst:
    """Rewrite an AST to its canonical comparison form.

    SUM and AVG calls expand to explicit chains (AVG divides by the static
    operand count), ranges inside those rewrites expand to cell lists,
    operands of maximal "+" and "*" chains are sorted (references first,
    row-major, then literals by value), and double negation is dropped.
    No constant folding happens; the result is a deterministic fixpoint.
    """
    current = _canon(ast, limit)
    while True:
        following = _canon(current, limit)
        if following == current:
            return current
        current = following


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------

_PREC_COMPARE = 1
_PREC_CONCAT = 2
_PREC_ADD = 3
_PREC_MUL = 4
_PREC_UNARY = 5
_PREC_POW = 6
_PREC_ATOM = 7

_BIN_PREC = {
    BinOp.EQ: _PREC_COMPARE,
    BinOp.NE: _PREC_COMPARE,
    BinOp.LT: _PREC_COMPARE,
    BinOp.LE: _PREC_COMPARE,
    BinOp.GT: _PREC_COMPARE,
    BinOp.GE: _PREC_COMPARE,
    BinOp.CONCAT: _PREC_CONCAT,
    BinOp.ADD: _PREC_ADD,
    BinOp.SUB: _PREC_ADD,
    BinOp.MUL: _PREC_MUL,
    BinOp.DIV: _PREC_MUL,
    BinOp.POW: _PREC_POW,
}


def _prec(node: FormulaAst) -> int:
    if isinstance(node, Binary):
        return _BIN_PREC[node.op]
    if isinstance(node, Unary):
        return _PREC_UNARY
    return _PREC_ATOM


def render_reference(node: CellRef | RangeRef, sheet: str | None = None) -> str:
    """Render a reference, qualifying the sheet only when it differs."""
    if isinstance(node, RangeRef):
        return f"{render_reference(node.start, sheet)}:{render_reference(node.end, None)}"
    a = node.address
    prefix = "" if sheet is None or a.sheet == sheet else f"{a.sheet}!"
    col_mark = "$" if node.col_absolute else ""
    row_mark = "$" if node.row_absolute else ""
    return f"{prefix}{col_mark}{column_letters(a.col)}{row_mark}{a.row}"


def render_formula(ast: FormulaAst, sheet: str = DEFAULT_SHEET) -> str:
    """Pretty-print an AST with minimal parentheses; no leading "=".

    Parsing "=" + the result reproduces the AST, whitespace aside.
    """
    if isinstance(ast, NumberLit):
        return format_number(ast.value)
    if isinstance(ast, TextLit):
        return '"' + ast.text.replace('"', '""') + '"'
    if isinstance(ast, BoolLit):
        return "TRUE" if ast.value else "FALSE"
    if isinstance(ast, (CellRef, RangeRef)):
        return render_reference(ast, sheet)
    if isinstance(ast, Unary):
        operand = render_formula(ast.operand, sheet)
        if _prec(ast.operand) < _PREC_UNARY:
            operand = f"({operand})"
        return f"{ast.op.symbol}{operand}"
    if isinstance(ast, Binary):
        prec = _BIN_PREC[ast.op]
        left = render_formula(ast.left, sheet)
        right = render_formula(ast.right, sheet)
        if ast.op is BinOp.POW:
            # grammar: power := atom "^" unary (right-associative)
            if _prec(ast.left) < _PREC_ATOM:
                left = f"({left})"
            if _prec(ast.right) < _PREC_UNARY:
                right = f"({right})"
        else:
            if _prec(ast.left) < prec:
                left = f"({left})"
            if _prec(ast.right) <= prec:
                right = f"({right})"
        return f"{left}{ast.op.symbol}{right}"
    args = ",".join(render_formula(arg, sheet) for arg in ast.args)
    return f"{ast.name}({args})"
