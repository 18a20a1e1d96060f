"""Budget check: the whole test run must finish within a minute.

The file name sorts last so this executes after every other module; the
session start time is recorded in conftest at import.
"""

import time

import conftest


def test_c10_suite_runtime_under_60s():
    elapsed = time.perf_counter() - conftest.SESSION_START
    assert elapsed < 60.0, f"suite has been running for {elapsed:.1f}s"
    print(f"criterion 10 (suite runtime, {elapsed:.1f}s so far): PASS")
