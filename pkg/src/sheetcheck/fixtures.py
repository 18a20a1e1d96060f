"""Bundled example data for tests, demos and documentation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from .evaluate import evaluate, values_equal
from .feedback import TaskBundle, load_bundle
from .grid import Number, Workbook, parse_address, read_workbook

FIXTURE_NAMES = ("grades", "grades-solution-only")


@dataclass(frozen=True)
class FixtureSet:
    name: str
    submission: Workbook
    solution: Workbook
    bundle: TaskBundle
    expected_messages: Mapping[int, tuple[str, ...]]


def _expect_values(workbook: Workbook, expectations: dict[str, float]) -> None:
    grid = evaluate(workbook)
    sheet = workbook.sheets[0].name
    for text, expected in expectations.items():
        actual = grid.get(parse_address(text, sheet))
        if not values_equal(actual, Number(expected)):
            raise RuntimeError(
                f"fixture workbook {workbook.name!r} is corrupted: "
                f"{text} evaluates to {actual!r}, expected {expected}"
            )


def load_fixture(name: str) -> FixtureSet:
    """Load a named fixture; the data is sanity-checked before returning."""
    if name not in FIXTURE_NAMES:
        raise ValueError(f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}")

    data = resources.files(__package__) / "data" / "grades"
    solution = read_workbook((data / "solution.json").read_text(encoding="utf-8"))
    submission = read_workbook((data / "submission.json").read_text(encoding="utf-8"))
    bundle = load_bundle(
        json.loads((data / "task.json").read_text(encoding="utf-8")),
        base_dir=str(data),
    )
    expected = {
        int(level): tuple(messages)
        for level, messages in json.loads(
            (data / "expected_messages.json").read_text(encoding="utf-8")
        ).items()
    }

    _expect_values(solution, {"D3": 75.0, "C6": 203.0 / 3.0, "D6": 223.0 / 3.0, "B6": 81.0})
    _expect_values(submission, {"D3": 17.0, "C6": 71.0, "D6": 55.0, "B6": 81.0})

    if name == "grades-solution-only":
        return FixtureSet(name, solution, solution, bundle, expected)
    return FixtureSet(name, submission, solution, bundle, expected)
