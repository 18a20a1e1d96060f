"""Value matching between a reference solution and a submission.

The matcher walks the reference dependency graph depth-first from its
output nodes.  Each node is first compared against the submission's own
evaluation; a mismatch is a value error.  After all referenced cells have
been handled, the submission cell is re-evaluated against a working copy
in which already-diagnosed cells hold the reference values.  A cell that
still disagrees at that point is the original error site, a formula error,
and its working-copy entry is overwritten with the reference value so that
errors it propagated do not count against the cells downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .evaluate import DEFAULT_TOLERANCE, Tolerance, cell_value, evaluate, workbook_contents, values_equal
from .graph import build_graph, terminals
from .grid import BLANK, Blank, Cell, CellAddress, Sheet, Value, Workbook, row_major


class ComparePhase(Enum):
    FIRST_COMPARE = "first_compare"
    RE_EVALUATE = "re_evaluate"


@dataclass(frozen=True)
class TraceEntry:
    address: CellAddress
    phase: ComparePhase
    solution: Value
    submission: Value
    matched: bool


@dataclass(frozen=True)
class MatchResult:
    value_errors: tuple[CellAddress, ...]
    formula_errors: tuple[CellAddress, ...]
    corrected: Workbook
    trace: tuple[TraceEntry, ...]


def match_values(
    reference: Workbook,
    submission: Workbook,
    tolerance: Tolerance = DEFAULT_TOLERANCE,
    graded: frozenset[CellAddress] | set[CellAddress] | None = None,
) -> MatchResult:
    """Diagnose value and formula errors of a submission.

    When `graded` is given, the walk is rooted at those addresses, which
    restricts the comparison to them and everything they transitively
    reference in the reference graph; otherwise every reference output
    node is a root.  Both workbooks must have passed the syntax check and
    the reference must evaluate without cycles.  A cycle in the submission
    is not fatal: the affected cell re-evaluates to the CYCLE error, stays
    unequal and is reported as a formula error.
    """
    reference_grid = evaluate(reference)
    reference_graph = build_graph(reference, reference_grid)
    submission_grid = evaluate(submission)

    working = workbook_contents(submission)
    working_sheets = set(submission.sheet_names())

    if graded is not None:
        roots = row_major(graded)
    else:
        roots = terminals(reference_graph)[0]

    visited: set[CellAddress] = set()
    value_errors: list[CellAddress] = []
    formula_errors: list[CellAddress] = []
    replacements: dict[CellAddress, Value] = {}
    trace: list[TraceEntry] = []

    def visit(address: CellAddress) -> None:
        if address in visited:
            return
        visited.add(address)
        solution = reference_grid.get(address, BLANK)
        first = submission_grid.get(address, BLANK)
        first_ok = values_equal(solution, first, tolerance)
        trace.append(TraceEntry(address, ComparePhase.FIRST_COMPARE, solution, first, first_ok))
        if not first_ok:
            value_errors.append(address)

        for child in reference_graph.out_edges.get(address, ()):
            visit(child)

        # Fresh memo per re-evaluation: earlier corrections must be visible.
        current = cell_value(working, working_sheets, address, memo={})
        re_ok = values_equal(solution, current, tolerance)
        trace.append(TraceEntry(address, ComparePhase.RE_EVALUATE, solution, current, re_ok))
        if not re_ok:
            if not first_ok:
                formula_errors.append(address)
            working[address] = solution
            working_sheets.add(address.sheet)
            replacements[address] = solution

    for root in roots:
        visit(root)

    return MatchResult(
        value_errors=row_major(value_errors),
        formula_errors=row_major(formula_errors),
        corrected=_apply_replacements(submission, replacements),
        trace=tuple(trace),
    )


def _apply_replacements(submission: Workbook, replacements: dict[CellAddress, Value]) -> Workbook:
    """Working copy as a workbook: replaced cells hold reference values as constants."""
    sheets = []
    known = set(submission.sheet_names())
    for sheet in submission.sheets:
        cells = dict(sheet.cells)
        for address, value in replacements.items():
            if address.sheet != sheet.name:
                continue
            if isinstance(value, Blank):
                cells.pop(address, None)
            else:
                cells[address] = Cell(address, value)
        sheets.append(Sheet(sheet.name, cells))
    extra: dict[str, dict[CellAddress, Cell]] = {}
    for address, value in replacements.items():
        if address.sheet in known or isinstance(value, Blank):
            continue
        extra.setdefault(address.sheet, {})[address] = Cell(address, value)
    for name in sorted(extra):
        sheets.append(Sheet(name, extra[name]))
    return Workbook(submission.name, tuple(sheets))
