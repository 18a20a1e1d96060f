import pytest

from sheetcheck import Status, generate_feedback, load_fixture


def test_load_grades_fixture():
    fixture = load_fixture("grades")
    assert fixture.submission != fixture.solution
    assert fixture.bundle.task == "grades"
    assert set(fixture.expected_messages) == set(range(1, 8))


def test_load_solution_only_variant():
    fixture = load_fixture("grades-solution-only")
    assert fixture.submission == fixture.solution
    report = generate_feedback(fixture.bundle, fixture.submission, 1)
    assert report.status is Status.PASS


def test_unknown_fixture_name():
    with pytest.raises(ValueError, match="bogus"):
        load_fixture("bogus")


def test_bundle_annotation_covers_working_area():
    fixture = load_fixture("grades")
    annotation = fixture.bundle.annotations[0]
    assert annotation.start.text() == "B3"
    assert annotation.end.text() == "D6"


def test_bundle_material_keywords():
    fixture = load_fixture("grades")
    assert fixture.bundle.materials[0].keywords == ("avg", "average", "mean")
