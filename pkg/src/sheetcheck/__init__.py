"""Automated checking and feedback for spreadsheet exercises.

The engine compares a student's workbook against a lecturer's reference
solution and produces feedback at seven escalating levels, from a plain
pass/fail verdict up to concrete repair hints and solution-quality
suggestions, all derived from the single reference workbook.
"""

from .grid import (
    BLANK,
    AddressError,
    Blank,
    Boolean,
    Cell,
    CellAddress,
    CellError,
    ErrorKind,
    Formula,
    Number,
    Sheet,
    Text,
    Value,
    Workbook,
    WorkbookFormatError,
    column_index,
    column_letters,
    parse_address,
    read_workbook,
    row_major,
    write_workbook,
)
from .formulas import (
    FormulaAst,
    FormulaError,
    FormulaSyntaxError,
    RangeCapacityError,
    SyntaxIssue,
    SyntaxReport,
    UnknownFunctionError,
    canonicalize,
    parse_formula,
    references_of,
    render_formula,
    syntax_check,
)
from .evaluate import (
    DEFAULT_TOLERANCE,
    Tolerance,
    apply_function,
    evaluate,
    evaluate_ast,
    values_equal,
)
from .graph import CycleError, DependencyGraph, build_graph, export_dot, longest_chain, terminals
from .matching import ComparePhase, MatchResult, TraceEntry, match_values
from .diffing import (
    ErrorCategory,
    ErrorDetail,
    ExtraItem,
    Fragment,
    diff_formula,
    levenshtein,
    spelling_hint,
)
from .quality import (
    DuplicateCalculation,
    IdiomSuggestion,
    MetricExceeded,
    QualityConfig,
    QualityFinding,
    QualityMetrics,
    compare_metrics,
    compute_metrics,
    duplicate_calculations,
    idiom_suggestions,
)
from .feedback import (
    Annotation,
    Diagnosis,
    DiagnosisKind,
    FeedbackReport,
    MaterialEntry,
    Status,
    TaskBundle,
    TaskConfigError,
    dump_bundle,
    generate_feedback,
    header_context,
    load_bundle,
    lookup_annotations,
    render_json,
    render_text,
    report_to_doc,
)
from .fixtures import FixtureSet, load_fixture

__version__ = "0.1.0"

__all__ = [
    "AddressError",
    "Annotation",
    "BLANK",
    "Blank",
    "Boolean",
    "Cell",
    "CellAddress",
    "CellError",
    "ComparePhase",
    "CycleError",
    "DEFAULT_TOLERANCE",
    "DependencyGraph",
    "Diagnosis",
    "DiagnosisKind",
    "DuplicateCalculation",
    "ErrorCategory",
    "ErrorDetail",
    "ErrorKind",
    "ExtraItem",
    "FeedbackReport",
    "FixtureSet",
    "Formula",
    "FormulaAst",
    "FormulaError",
    "FormulaSyntaxError",
    "Fragment",
    "IdiomSuggestion",
    "MatchResult",
    "MaterialEntry",
    "MetricExceeded",
    "Number",
    "QualityConfig",
    "QualityFinding",
    "QualityMetrics",
    "RangeCapacityError",
    "Sheet",
    "Status",
    "SyntaxIssue",
    "SyntaxReport",
    "TaskBundle",
    "TaskConfigError",
    "Text",
    "Tolerance",
    "TraceEntry",
    "UnknownFunctionError",
    "Value",
    "Workbook",
    "WorkbookFormatError",
    "apply_function",
    "build_graph",
    "canonicalize",
    "column_index",
    "column_letters",
    "compare_metrics",
    "compute_metrics",
    "diff_formula",
    "dump_bundle",
    "duplicate_calculations",
    "evaluate",
    "evaluate_ast",
    "export_dot",
    "generate_feedback",
    "header_context",
    "idiom_suggestions",
    "levenshtein",
    "load_bundle",
    "load_fixture",
    "longest_chain",
    "lookup_annotations",
    "match_values",
    "parse_address",
    "parse_formula",
    "read_workbook",
    "references_of",
    "render_formula",
    "render_json",
    "render_text",
    "report_to_doc",
    "row_major",
    "spelling_hint",
    "syntax_check",
    "terminals",
    "values_equal",
    "write_workbook",
]
