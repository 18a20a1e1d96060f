import json
import time

import pytest

from sheetcheck import CellAddress, Workbook, parse_address, read_workbook
from sheetcheck.fixtures import load_fixture

SESSION_START = time.perf_counter()


def make_workbook(cells: dict[str, object], *, sheet: str = "Sheet1", name: str = "test") -> Workbook:
    """Build a single-sheet workbook from a {"A1": content} mapping."""
    doc = {"name": name, "sheets": [{"name": sheet, "cells": cells}]}
    return read_workbook(json.dumps(doc))


def make_multi_workbook(sheets: dict[str, dict[str, object]], *, name: str = "test") -> Workbook:
    doc = {"name": name, "sheets": [{"name": s, "cells": c} for s, c in sheets.items()]}
    return read_workbook(json.dumps(doc))


def addr(text: str, sheet: str = "Sheet1") -> CellAddress:
    return parse_address(text, sheet)


def texts(addresses) -> list[str]:
    return [a.text() for a in addresses]


@pytest.fixture(scope="session")
def grades():
    return load_fixture("grades")


@pytest.fixture(scope="session")
def grades_pass():
    return load_fixture("grades-solution-only")
