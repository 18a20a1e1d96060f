"""Product metrics and solution-quality suggestions.

Metrics are size counts plus structural facts read off the dependency
graph.  Operand totals count literals and cell references, with ranges
counted at their expansion size; operator totals count unary and binary
operators, function applications and range operators.  A submission metric
triggers a finding when it exceeds reference * factor + offset, with
per-metric overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .formulas import (
    Binary,
    BinOp,
    BoolLit,
    CellRef,
    FormulaAst,
    FuncCall,
    NumberLit,
    RangeRef,
    TextLit,
    Unary,
    canonicalize,
    parse_formula,
    range_size,
    _flatten_chain,
)
from .graph import CycleError, DependencyGraph, longest_chain, terminals
from .grid import CellAddress, CellError, Formula, Value, Workbook, row_major


@dataclass(frozen=True)
class QualityMetrics:
    sheet_count: int = 0
    error_value_count: int = 0
    value_cell_count: int = 0
    formula_cell_count: int = 0
    input_count: int = 0
    output_count: int = 0
    max_fan_in: tuple[CellAddress, int] | None = None
    max_fan_out: tuple[CellAddress, int] | None = None
    operator_total: int = 0
    operand_total: int = 0
    max_nesting_depth: int = 0
    longest_chain: int = 0


COMPARED_METRICS = (
    "sheet_count",
    "error_value_count",
    "value_cell_count",
    "formula_cell_count",
    "input_count",
    "output_count",
    "operator_total",
    "operand_total",
    "max_nesting_depth",
    "longest_chain",
)


@dataclass(frozen=True)
class QualityConfig:
    factor: float = 1.5
    offset: float = 1.0
    min_idiom_operands: int = 3
    overrides: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.factor < 1 or self.offset < 0 or self.min_idiom_operands < 2:
            raise ValueError("quality thresholds out of range")

    def threshold(self, metric: str, reference_value: float) -> float:
        factor, offset = self.overrides.get(metric, (self.factor, self.offset))
        return reference_value * factor + offset


@dataclass(frozen=True)
class MetricExceeded:
    metric: str
    submission: float
    reference: float


@dataclass(frozen=True)
class IdiomSuggestion:
    function: str
    cells: tuple[CellAddress, ...]


@dataclass(frozen=True)
class DuplicateCalculation:
    cells: tuple[CellAddress, ...]


QualityFinding = MetricExceeded | IdiomSuggestion | DuplicateCalculation


# --------------------------------------------------------------------------
# Metric collection
# --------------------------------------------------------------------------


def _operator_operand_counts(ast: FormulaAst) -> tuple[int, int]:
    operators = 0
    operands = 0

    def walk(node: FormulaAst) -> None:
        nonlocal operators, operands
        if isinstance(node, (NumberLit, TextLit, BoolLit, CellRef)):
            operands += 1
        elif isinstance(node, RangeRef):
            operators += 1  # the ":" range operator
            operands += range_size(node)
        elif isinstance(node, Unary):
            operators += 1
            walk(node.operand)
        elif isinstance(node, Binary):
            operators += 1
            walk(node.left)
            walk(node.right)
        elif isinstance(node, FuncCall):
            operators += 1  # a function application
            for arg in node.args:
                walk(arg)

    walk(ast)
    return operators, operands


def _nesting_depth(ast: FormulaAst) -> int:
    if isinstance(ast, Unary):
        return _nesting_depth(ast.operand)
    if isinstance(ast, Binary):
        return 1 + max(_nesting_depth(ast.left), _nesting_depth(ast.right))
    if isinstance(ast, FuncCall):
        return 1 + max((_nesting_depth(arg) for arg in ast.args), default=0)
    return 0


def _max_fan(degrees: dict[CellAddress, int]) -> tuple[CellAddress, int] | None:
    best: tuple[CellAddress, int] | None = None
    for address in sorted(degrees, key=lambda a: a.key):
        count = degrees[address]
        if best is None or count > best[1]:
            best = (address, count)
    return best


def compute_metrics(
    workbook: Workbook, graph: DependencyGraph, grid: Mapping[CellAddress, Value]
) -> QualityMetrics:
    """Collect the metric set for one workbook (already syntax-checked)."""
    value_cells = 0
    formula_cells = 0
    operator_total = 0
    operand_total = 0
    nesting = 0
    for cell in workbook.iter_cells():
        if isinstance(cell.content, Formula):
            formula_cells += 1
            ast = parse_formula(cell.content.source, cell.address.sheet)
            operators, operands = _operator_operand_counts(ast)
            operator_total += operators
            operand_total += operands
            nesting = max(nesting, _nesting_depth(ast))
        else:
            value_cells += 1

    outputs, inputs = terminals(graph)
    try:
        chain = longest_chain(graph)
    except CycleError:
        chain = 0  # a cyclic submission has no meaningful chain length

    fan_in = {node: len(graph.in_edges.get(node, ())) for node in graph.nodes}
    fan_out = {node: len(graph.out_edges.get(node, ())) for node in graph.nodes}

    return QualityMetrics(
        sheet_count=len(workbook.sheets),
        error_value_count=sum(1 for value in grid.values() if isinstance(value, CellError)),
        value_cell_count=value_cells,
        formula_cell_count=formula_cells,
        input_count=len(inputs),
        output_count=len(outputs),
        max_fan_in=_max_fan(fan_in),
        max_fan_out=_max_fan(fan_out),
        operator_total=operator_total,
        operand_total=operand_total,
        max_nesting_depth=nesting,
        longest_chain=chain,
    )


def compare_metrics(
    submission: QualityMetrics, reference: QualityMetrics, config: QualityConfig
) -> list[QualityFinding]:
    """Findings for every scalar metric exceeding the configured threshold."""
    findings: list[QualityFinding] = []
    for metric in COMPARED_METRICS:
        sub_value = getattr(submission, metric)
        ref_value = getattr(reference, metric)
        if sub_value > config.threshold(metric, ref_value):
            findings.append(MetricExceeded(metric, sub_value, ref_value))
    return findings


# --------------------------------------------------------------------------
# Idiom suggestions and duplicate calculations
# --------------------------------------------------------------------------


def _mentions_function(ast: FormulaAst, name: str) -> bool:
    if isinstance(ast, FuncCall):
        if ast.name == name:
            return True
        return any(_mentions_function(arg, name) for arg in ast.args)
    if isinstance(ast, Unary):
        return _mentions_function(ast.operand, name)
    if isinstance(ast, Binary):
        return _mentions_function(ast.left, name) or _mentions_function(ast.right, name)
    return False


def _avg_pattern_operands(ast: FormulaAst) -> int | None:
    """Operand count when the AST is (sum of n distinct refs) / n, else None."""
    if not (isinstance(ast, Binary) and ast.op is BinOp.DIV):
        return None
    if not isinstance(ast.right, NumberLit):
        return None
    operands = _flatten_chain(ast.left, BinOp.ADD)
    if not all(isinstance(op, CellRef) for op in operands):
        return None
    addresses = {op.address for op in operands}
    if len(addresses) != len(operands):
        return None
    if float(len(operands)) != ast.right.value:
        return None
    return len(operands)


def _add_chains(ast: FormulaAst) -> list[list[FormulaAst]]:
    """Maximal "+" chains, skipping numerators that form a written-out average."""
    chains: list[list[FormulaAst]] = []

    def walk(node: FormulaAst) -> None:
        if _avg_pattern_operands(node) is not None:
            return  # that chain belongs to the AVG idiom
        if isinstance(node, Binary) and node.op is BinOp.ADD:
            operands = _flatten_chain(node, BinOp.ADD)
            chains.append(operands)
            for operand in operands:  # canonical chain operands are never ADD nodes
                walk(operand)
            return
        if isinstance(node, Unary):
            walk(node.operand)
        elif isinstance(node, Binary):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, FuncCall):
            for arg in node.args:
                walk(arg)

    walk(ast)
    return chains


def idiom_suggestions(workbook: Workbook, config: QualityConfig) -> list[QualityFinding]:
    """Suggest AVG for written-out averages and SUM for long addition chains.

    Detection runs on the canonical form; a cell whose original formula
    already uses the suggested function is never flagged.  The check is
    value-agnostic: a wrong formula can still earn a suggestion.
    """
    by_function: dict[str, list[CellAddress]] = {}
    for cell in workbook.formula_cells():
        original = parse_formula(cell.content.source, cell.address.sheet)
        canonical = canonicalize(original)

        avg_operands = _avg_pattern_operands(canonical)
        if avg_operands is not None and avg_operands >= config.min_idiom_operands:
            if not _mentions_function(original, "AVG"):
                by_function.setdefault("AVG", []).append(cell.address)
            continue

        for chain in _add_chains(canonical):
            refs = {op.address for op in chain if isinstance(op, CellRef)}
            if len(refs) > config.min_idiom_operands and not _mentions_function(original, "SUM"):
                by_function.setdefault("SUM", []).append(cell.address)
                break

    return [
        IdiomSuggestion(name, row_major(cells)) for name, cells in sorted(by_function.items())
    ]


def duplicate_calculations(workbook: Workbook) -> list[QualityFinding]:
    """Groups of cells whose canonical formulas are identical, targets included.

    Offset copies produced by fill-down reference different cells and do
    not match.
    """
    by_ast: dict[FormulaAst, list[CellAddress]] = {}
    for cell in workbook.formula_cells():
        canonical = canonicalize(parse_formula(cell.content.source, cell.address.sheet))
        by_ast.setdefault(canonical, []).append(cell.address)
    groups = [row_major(cells) for cells in by_ast.values() if len(cells) >= 2]
    groups.sort(key=lambda cells: cells[0].key)
    return [DuplicateCalculation(cells) for cells in groups]
