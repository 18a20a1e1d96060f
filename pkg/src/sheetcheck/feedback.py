"""Feedback generation: task bundles, level-specific messages, report model.

A report is generated at exactly one of seven levels.  Level 1 states
correctness, level 2 locates wrong values, level 3 locates the original
error sites, level 4 adds annotation and learning-material pointers,
level 5 names the kind of mistake per cell, level 6 gives concrete repair
hints and level 7 comments on solution quality.  Whatever level is
requested, the report always carries the complete machine-readable
diagnosis; only the message list is level-specific.  A submission that
fails the syntax check yields an error report instead of feedback.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .diffing import ErrorCategory, ErrorDetail, diff_formula
from .evaluate import DEFAULT_TOLERANCE, CYCLE, Tolerance, evaluate
from .graph import DependencyGraph, build_graph
from .formulas import SyntaxReport, syntax_check
from .grid import (
    BLANK,
    Cell,
    CellAddress,
    Text,
    Value,
    Workbook,
    parse_address,
    read_workbook,
    row_major,
)
from .matching import MatchResult, match_values
from .quality import (
    DuplicateCalculation,
    IdiomSuggestion,
    QualityConfig,
    QualityFinding,
    QualityMetrics,
    compare_metrics,
    compute_metrics,
    duplicate_calculations,
    idiom_suggestions,
)


class TaskConfigError(ValueError):
    """The task bundle is unusable; distinct from student-facing statuses."""


# --------------------------------------------------------------------------
# Task bundle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Annotation:
    start: CellAddress
    end: CellAddress
    text: str
    link: str | None = None

    def contains(self, address: CellAddress) -> bool:
        return (
            address.sheet == self.start.sheet
            and self.start.col <= address.col <= self.end.col
            and self.start.row <= address.row <= self.end.row
        )


@dataclass(frozen=True)
class MaterialEntry:
    title: str
    keywords: tuple[str, ...]
    ref: str | None = None


@dataclass
class TaskBundle:
    """Everything needed to grade submissions for one task."""

    task: str
    reference: Workbook
    tolerance: Tolerance = DEFAULT_TOLERANCE
    graded: frozenset[CellAddress] | None = None
    annotations: tuple[Annotation, ...] = ()
    materials: tuple[MaterialEntry, ...] = ()
    quality: QualityConfig = field(default_factory=QualityConfig)

    def validate(self) -> "TaskBundle":
        report = syntax_check(self.reference)
        if not report.ok:
            first = report.errors[0]
            raise TaskConfigError(
                f"reference workbook has syntax errors, first in "
                f"{first.cell.text(qualified=True)}: {first.message}"
            )
        if any(value == CYCLE for value in self.reference_grid.values()):
            raise TaskConfigError("reference workbook contains a reference cycle")
        return self

    @cached_property
    def reference_grid(self) -> dict[CellAddress, Value]:
        return evaluate(self.reference)

    @cached_property
    def reference_graph(self) -> DependencyGraph:
        return build_graph(self.reference, self.reference_grid)

    @cached_property
    def reference_metrics(self) -> QualityMetrics:
        return compute_metrics(self.reference, self.reference_graph, self.reference_grid)


def _normalize_keywords(raw: Iterable[str]) -> tuple[str, ...]:
    keywords = []
    for word in raw:
        for token in re.findall(r"[a-z0-9]+", str(word).lower()):
            if token not in keywords:
                keywords.append(token)
    return tuple(keywords)


def _parse_range(text: str, sheet: str) -> tuple[CellAddress, CellAddress]:
    from .grid import AddressError

    parts = text.split(":")
    try:
        if len(parts) == 1:
            address = parse_address(parts[0], sheet)
            return address, address
        if len(parts) != 2:
            raise TaskConfigError(f"bad annotation range {text!r}")
        first = parse_address(parts[0], sheet)
        second = parse_address(parts[1], first.sheet)
    except AddressError as exc:
        raise TaskConfigError(f"bad annotation range {text!r}: {exc}") from exc
    if first.sheet != second.sheet:
        raise TaskConfigError(f"annotation range {text!r} spans sheets")
    start = CellAddress(first.sheet, min(first.col, second.col), min(first.row, second.row))
    end = CellAddress(first.sheet, max(first.col, second.col), max(first.row, second.row))
    return start, end


def load_bundle(source: str | Path | Mapping[str, Any], base_dir: str | Path | None = None) -> TaskBundle:
    """Load and validate a task bundle from a file path or a parsed document.

    A string "reference" is a workbook file path, resolved against the
    bundle file's directory (or `base_dir`); an object is an inline
    workbook.  All sections except "task" and "reference" are optional.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        base = path.parent if base_dir is None else Path(base_dir)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise TaskConfigError(f"invalid task bundle JSON in {path}: {exc}") from exc
    else:
        doc = dict(source)
        base = Path(base_dir) if base_dir is not None else Path(".")

    if not isinstance(doc, dict):
        raise TaskConfigError("task bundle must be an object")
    unknown = set(doc) - {"task", "reference", "tolerance", "graded_cells", "annotations", "materials", "quality"}
    if unknown:
        raise TaskConfigError(f"unknown task bundle field {sorted(unknown)[0]!r}")
    if "task" not in doc or "reference" not in doc:
        raise TaskConfigError("task bundle needs 'task' and 'reference' fields")

    reference_doc = doc["reference"]
    if isinstance(reference_doc, str):
        reference = read_workbook((base / reference_doc).read_text(encoding="utf-8"))
    else:
        from .grid import _workbook_from_doc

        reference = _workbook_from_doc(reference_doc)
    default_sheet = reference.sheets[0].name if reference.sheets else "Sheet1"

    tolerance_doc = doc.get("tolerance") or {}
    tolerance = Tolerance(
        abs=float(tolerance_doc.get("abs", DEFAULT_TOLERANCE.abs)),
        rel=float(tolerance_doc.get("rel", DEFAULT_TOLERANCE.rel)),
    )

    from .grid import AddressError

    graded_doc = doc.get("graded_cells")
    try:
        graded = (
            frozenset(parse_address(text, default_sheet) for text in graded_doc)
            if graded_doc is not None
            else None
        )
    except AddressError as exc:
        raise TaskConfigError(f"bad graded cell address: {exc}") from exc

    annotations = []
    for entry in doc.get("annotations") or ():
        if not isinstance(entry, dict) or "range" not in entry or "text" not in entry:
            raise TaskConfigError(f"annotation needs 'range' and 'text' fields: {entry!r}")
        start, end = _parse_range(entry["range"], default_sheet)
        annotations.append(Annotation(start, end, entry["text"], entry.get("link")))

    materials = []
    for entry in doc.get("materials") or ():
        if not isinstance(entry, dict) or "title" not in entry:
            raise TaskConfigError(f"material needs a 'title' field: {entry!r}")
        keywords = _normalize_keywords(entry.get("keywords", ()))
        if not keywords:
            raise TaskConfigError(f"material {entry.get('title')!r} has no usable keywords")
        materials.append(MaterialEntry(entry["title"], keywords, entry.get("ref")))

    quality_doc = doc.get("quality") or {}
    overrides = {
        metric: (
            float(values.get("factor", quality_doc.get("factor", 1.5))),
            float(values.get("offset", quality_doc.get("offset", 1.0))),
        )
        for metric, values in (quality_doc.get("overrides") or {}).items()
    }
    quality = QualityConfig(
        factor=float(quality_doc.get("factor", 1.5)),
        offset=float(quality_doc.get("offset", 1.0)),
        min_idiom_operands=int(quality_doc.get("min_idiom_operands", 3)),
        overrides=overrides,
    )

    bundle = TaskBundle(
        task=str(doc["task"]),
        reference=reference,
        tolerance=tolerance,
        graded=graded,
        annotations=tuple(annotations),
        materials=tuple(materials),
        quality=quality,
    )
    return bundle.validate()


def dump_bundle(bundle: TaskBundle) -> str:
    """Serialize a bundle with an inline reference workbook."""
    from .grid import write_workbook

    doc: dict[str, Any] = {
        "task": bundle.task,
        "reference": json.loads(write_workbook(bundle.reference)),
        "tolerance": {"abs": bundle.tolerance.abs, "rel": bundle.tolerance.rel},
        "graded_cells": (
            [a.text(qualified=True) for a in row_major(bundle.graded)] if bundle.graded is not None else None
        ),
        "annotations": [
            {
                "range": f"{a.start.text()}:{a.end.text()}"
                if a.start != a.end
                else a.start.text(),
                "text": a.text,
                "link": a.link,
            }
            for a in bundle.annotations
        ],
        "materials": [
            {"title": m.title, "keywords": list(m.keywords), "ref": m.ref} for m in bundle.materials
        ],
        "quality": {
            "factor": bundle.quality.factor,
            "offset": bundle.quality.offset,
            "min_idiom_operands": bundle.quality.min_idiom_operands,
            "overrides": {
                metric: {"factor": factor, "offset": offset}
                for metric, (factor, offset) in sorted(bundle.quality.overrides.items())
            },
        },
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# Report model
# --------------------------------------------------------------------------


class Status(Enum):
    PASS = "pass"
    FAIL = "fail"
    SYNTAX_ERROR = "syntax_error"


class DiagnosisKind(Enum):
    VALUE_ERROR = "value_error"
    FORMULA_ERROR = "formula_error"


@dataclass(frozen=True)
class Diagnosis:
    cell: CellAddress
    kind: DiagnosisKind
    detail: ErrorDetail | None = None


@dataclass(frozen=True)
class FeedbackReport:
    task: str
    level: int
    status: Status
    messages: tuple[str, ...]
    diagnoses: tuple[Diagnosis, ...]
    quality: tuple[QualityFinding, ...]
    metrics: tuple[QualityMetrics, QualityMetrics] | None
    syntax: SyntaxReport
    qualify_sheets: bool = False


# --------------------------------------------------------------------------
# Message catalog
# --------------------------------------------------------------------------

MSG_CORRECT = "The spreadsheet is correct."
MSG_INCORRECT = "The spreadsheet is incorrect."

_METRIC_LABELS = {
    "sheet_count": "number of sheets",
    "error_value_count": "number of error cells",
    "value_cell_count": "number of value cells",
    "formula_cell_count": "number of formula cells",
    "input_count": "number of input cells",
    "output_count": "number of output cells",
    "operator_total": "number of operators",
    "operand_total": "number of operands",
    "max_nesting_depth": "formula nesting depth",
    "longest_chain": "formula chain length",
}

_CATEGORY_SENTENCES = {
    ErrorCategory.OPERATOR: "An operator of cell {cell} is incorrect.",
    ErrorCategory.FUNCTION: "A function of cell {cell} is incorrect.",
    ErrorCategory.REFERENCE: "A reference of cell {cell} is incorrect.",
    ErrorCategory.CONSTANT: "A constant of cell {cell} is incorrect.",
    ErrorCategory.UNCLASSIFIED: "The formula of cell {cell} is incorrect.",
}


def _cells_text(addresses: Sequence[CellAddress], qualify: bool) -> str:
    return ", ".join(a.text(qualified=qualify) for a in addresses)


def _number_text(value: float) -> str:
    return str(int(value)) if float(value) == int(value) else str(value)


def _article(word: str) -> str:
    return "an" if word[:1].upper() in "AEIOU" else "a"


def _hint_messages(detail: ErrorDetail, cell_text: str) -> list[str]:
    messages = []
    if detail.formula_expected:
        messages.append(f"A formula is expected in cell {cell_text}.")
    for fragment in detail.expected:
        if fragment.kind == "reference":
            if fragment.flag_hint == "absolute":
                messages.append(f"The absolute reference {fragment.text} should be used in cell {cell_text}.")
            elif fragment.flag_hint == "relative":
                messages.append(f"The relative reference {fragment.text} should be used in cell {cell_text}.")
            elif fragment.is_range:
                messages.append(f"The references {fragment.text} should be used in cell {cell_text}.")
            else:
                messages.append(f"The reference {fragment.text} should be used in cell {cell_text}.")
        elif fragment.kind == "constant":
            messages.append(f"The constant '{fragment.text}' should be used in cell {cell_text}.")
        else:
            messages.append(f"The {fragment.kind} '{fragment.text}' should be used in cell {cell_text}.")
    for extra in detail.extras:
        messages.append(f"The {extra.kind} '{extra.name}' is {extra.message} in cell {cell_text}.")
    if detail.spelling:
        found, expected = detail.spelling
        messages.append(f"'{found}' in cell {cell_text} seems to be a misspelling of '{expected}'.")
    if detail.category is ErrorCategory.UNCLASSIFIED:
        messages.append(f"The formula of cell {cell_text} differs from the expected solution.")
    return messages


def quality_messages(findings: Sequence[QualityFinding], qualify: bool) -> list[str]:
    messages = []
    for finding in findings:
        if isinstance(finding, IdiomSuggestion):
            cells = _cells_text(finding.cells, qualify)
            word = "cells" if len(finding.cells) > 1 else "cell"
            article = _article(finding.function)
            messages.append(
                f"It is preferable to use {article} {finding.function}-formula in {word} {cells}."
            )
        elif isinstance(finding, DuplicateCalculation):
            messages.append(
                f"The same calculation is used in cells {_cells_text(finding.cells, qualify)}."
            )
        else:
            label = _METRIC_LABELS.get(finding.metric, finding.metric)
            messages.append(
                f"The {label} of your solution ({_number_text(finding.submission)}) "
                f"exceeds the reference solution ({_number_text(finding.reference)})."
            )
    return messages


# --------------------------------------------------------------------------
# Headers, annotations and learning material
# --------------------------------------------------------------------------


def header_context(reference: Workbook, cell: CellAddress) -> tuple[str | None, str | None]:
    """Nearest text constants strictly above and strictly left of a cell."""
    column_header = None
    for row in range(cell.row - 1, 0, -1):
        content = reference.content(CellAddress(cell.sheet, cell.col, row))
        if isinstance(content, Text):
            column_header = content.value
            break
    row_header = None
    for col in range(cell.col - 1, 0, -1):
        content = reference.content(CellAddress(cell.sheet, col, cell.row))
        if isinstance(content, Text):
            row_header = content.value
            break
    return column_header, row_header


def lookup_annotations(
    bundle: TaskBundle,
    cells: Sequence[CellAddress],
    headers: Sequence[Sequence[str]],
) -> list[str]:
    """Annotation texts and material pointers for the given cells, deduplicated.

    `headers` supplies the header strings per cell; a material entry
    matches when one of its keywords equals a normalized header token.
    """
    messages: list[str] = []

    def add(message: str) -> None:
        if message not in messages:
            messages.append(message)

    for index, cell in enumerate(cells):
        for annotation in bundle.annotations:
            if annotation.contains(cell):
                if annotation.link:
                    add(f"{annotation.text} ({annotation.link})")
                else:
                    add(annotation.text)
        tokens = _normalize_keywords(headers[index] if index < len(headers) else ())
        for material in bundle.materials:
            if set(material.keywords) & set(tokens):
                add(f"You should recall the info in the '{material.title}' tutorial.")
    return messages


# --------------------------------------------------------------------------
# Report generation
# --------------------------------------------------------------------------


def generate_feedback(
    bundle: TaskBundle,
    submission: Workbook,
    level: int = 1,
    force_quality: bool = False,
) -> FeedbackReport:
    """Grade one submission and build the report for the requested level."""
    if not 1 <= level <= 7:
        raise TaskConfigError(f"feedback level must be between 1 and 7, got {level}")

    qualify = len(bundle.reference.sheets) > 1

    syntax = syntax_check(submission)
    if not syntax.ok:
        messages = tuple(
            f"Syntax error in cell {issue.cell.text(qualified=qualify)}: {issue.message}"
            for issue in syntax.errors
        )
        return FeedbackReport(
            task=bundle.task,
            level=level,
            status=Status.SYNTAX_ERROR,
            messages=messages,
            diagnoses=(),
            quality=(),
            metrics=None,
            syntax=syntax,
            qualify_sheets=qualify,
        )

    match = match_values(bundle.reference, submission, bundle.tolerance, bundle.graded)
    status = Status.FAIL if match.value_errors else Status.PASS

    details: dict[CellAddress, ErrorDetail] = {}
    for address in match.formula_errors:
        solution_cell = bundle.reference.cell(address) or Cell(address, BLANK)
        submission_cell = submission.cell(address) or Cell(address, BLANK)
        details[address] = diff_formula(solution_cell, submission_cell, bundle.tolerance)

    diagnoses = tuple(
        Diagnosis(a, DiagnosisKind.VALUE_ERROR) for a in match.value_errors
    ) + tuple(
        Diagnosis(a, DiagnosisKind.FORMULA_ERROR, details[a]) for a in match.formula_errors
    )

    submission_grid = evaluate(submission)
    submission_graph = build_graph(submission, submission_grid)
    submission_metrics = compute_metrics(submission, submission_graph, submission_grid)
    findings: tuple[QualityFinding, ...] = tuple(
        idiom_suggestions(submission, bundle.quality)
        + duplicate_calculations(submission)
        + compare_metrics(submission_metrics, bundle.reference_metrics, bundle.quality)
    )

    messages = _level_messages(bundle, match, details, status, level, force_quality, findings, qualify)

    return FeedbackReport(
        task=bundle.task,
        level=level,
        status=status,
        messages=tuple(messages),
        diagnoses=diagnoses,
        quality=findings,
        metrics=(submission_metrics, bundle.reference_metrics),
        syntax=syntax,
        qualify_sheets=qualify,
    )


def _level_messages(
    bundle: TaskBundle,
    match: MatchResult,
    details: dict[CellAddress, ErrorDetail],
    status: Status,
    level: int,
    force_quality: bool,
    findings: Sequence[QualityFinding],
    qualify: bool,
) -> list[str]:
    if level == 7:
        if status is Status.PASS or force_quality:
            return quality_messages(findings, qualify)
        return []

    if status is Status.PASS:
        return [MSG_CORRECT]

    if level == 1:
        return [MSG_INCORRECT]
    if level == 2:
        return [f"The values of cells {_cells_text(match.value_errors, qualify)} are incorrect."]

    formula_message = f"The formulas of cells {_cells_text(match.formula_errors, qualify)} are incorrect."
    if level == 3:
        return [formula_message]
    if level == 4:
        headers = [
            [h for h in header_context(bundle.reference, cell) if h is not None]
            for cell in match.formula_errors
        ]
        return [formula_message] + lookup_annotations(bundle, match.formula_errors, headers)

    messages = []
    for address in match.formula_errors:
        detail = details[address]
        cell_text = address.text(qualified=qualify)
        if level == 5:
            messages.append(_CATEGORY_SENTENCES[detail.category].format(cell=cell_text))
        else:
            messages.extend(_hint_messages(detail, cell_text))
    return messages


# --------------------------------------------------------------------------
# Rendering
# --------------------------------------------------------------------------

_STATUS_HEADINGS = {Status.PASS: "PASS", Status.FAIL: "FAIL", Status.SYNTAX_ERROR: "SYNTAX ERROR"}


def render_text(report: FeedbackReport) -> str:
    """Plain-text report: a heading line, then one message per line."""
    lines = [f"task {report.task}: {_STATUS_HEADINGS[report.status]}"]
    lines.extend(report.messages)
    return "\n".join(lines) + "\n"


def _metrics_doc(metrics: QualityMetrics, qualify: bool) -> dict[str, Any]:
    def fan(value: tuple[CellAddress, int] | None) -> dict[str, Any] | None:
        if value is None:
            return None
        return {"cell": value[0].text(qualified=qualify), "count": value[1]}

    return {
        "sheet_count": metrics.sheet_count,
        "error_value_count": metrics.error_value_count,
        "value_cell_count": metrics.value_cell_count,
        "formula_cell_count": metrics.formula_cell_count,
        "input_count": metrics.input_count,
        "output_count": metrics.output_count,
        "max_fan_in": fan(metrics.max_fan_in),
        "max_fan_out": fan(metrics.max_fan_out),
        "operator_total": metrics.operator_total,
        "operand_total": metrics.operand_total,
        "max_nesting_depth": metrics.max_nesting_depth,
        "longest_chain": metrics.longest_chain,
    }


def _finding_doc(finding: QualityFinding, qualify: bool) -> dict[str, Any]:
    if isinstance(finding, IdiomSuggestion):
        return {
            "kind": "idiom_suggestion",
            "function": finding.function,
            "cells": [a.text(qualified=qualify) for a in finding.cells],
        }
    if isinstance(finding, DuplicateCalculation):
        return {
            "kind": "duplicate_calculation",
            "cells": [a.text(qualified=qualify) for a in finding.cells],
        }
    return {
        "kind": "metric_exceeded",
        "metric": finding.metric,
        "submission": finding.submission,
        "reference": finding.reference,
    }


def _detail_doc(detail: ErrorDetail | None) -> dict[str, Any] | None:
    if detail is None:
        return None
    return {
        "category": detail.category.value,
        "expected": [fragment.text for fragment in detail.expected],
        "found": [fragment.text for fragment in detail.found],
        "extras": [
            {"kind": extra.kind, "name": extra.name, "message": extra.message}
            for extra in detail.extras
        ],
        "spelling": (
            {"found": detail.spelling[0], "expected": detail.spelling[1]}
            if detail.spelling
            else None
        ),
    }


def report_to_doc(report: FeedbackReport) -> dict[str, Any]:
    qualify = report.qualify_sheets
    return {
        "task": report.task,
        "level": report.level,
        "status": report.status.value,
        "messages": list(report.messages),
        "diagnoses": [
            {
                "cell": diagnosis.cell.text(qualified=qualify),
                "kind": diagnosis.kind.value,
                "detail": _detail_doc(diagnosis.detail),
            }
            for diagnosis in report.diagnoses
        ],
        "quality": [_finding_doc(finding, qualify) for finding in report.quality],
        "metrics": (
            {
                "submission": _metrics_doc(report.metrics[0], qualify),
                "reference": _metrics_doc(report.metrics[1], qualify),
            }
            if report.metrics
            else None
        ),
        "syntax": [
            {
                "cell": issue.cell.text(qualified=qualify),
                "message": issue.message,
                "position": issue.position,
            }
            for issue in report.syntax.errors
        ],
    }


def render_json(report: FeedbackReport) -> str:
    """Canonical JSON rendering: fixed key order, deterministic output."""
    return json.dumps(report_to_doc(report), indent=2, ensure_ascii=False) + "\n"
