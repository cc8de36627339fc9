"""Report tests: archive round-trip, byte stability, empty results."""

import csv

import pytest

from sbst.corpus import builtin_corpus_root
from sbst.harness import (
    ApproachSpec,
    ExperimentConfig,
    PredictorSpec,
    run_experiment,
)
from sbst.report import (
    emit_report,
    load_result,
    result_from_dict,
    result_to_dict,
    save_result,
)

ROOT = str(builtin_corpus_root())


@pytest.fixture(scope="module")
def small_result():
    config = ExperimentConfig(
        corpus_root=ROOT,
        approaches=(
            ApproachSpec("baseline"),
            ApproachSpec("sbst_cl", PredictorSpec("ideal"), label="cl_ideal"),
        ),
        per_class_factor=60,
        runs=2,
        base_seed=21,
        programs=("router",),
    )
    return run_experiment(config, workers=1)


@pytest.fixture(scope="module")
def empty_result():
    # the simulated arm is degenerate on a single-class program, so the
    # whole experiment runs zero searches
    config = ExperimentConfig(
        corpus_root=ROOT,
        approaches=(
            ApproachSpec("baseline"),
            ApproachSpec(
                "sbst_cl", PredictorSpec("simulated", 0.5), label="cl_sim"
            ),
        ),
        per_class_factor=60,
        runs=2,
        base_seed=1,
        programs=("math94",),
    )
    return run_experiment(config, workers=1)


def test_result_dict_round_trip(small_result):
    back = result_from_dict(result_to_dict(small_result))
    assert back.config == small_result.config
    assert back.records == small_result.records
    assert back.comparisons == small_result.comparisons
    assert back.plans == small_result.plans
    assert back.skipped == small_result.skipped
    assert back.success_rates == small_result.success_rates
    for label, matrix in small_result.matrices.items():
        assert back.matrices[label].detections == matrix.detections


def test_save_and_load_by_file_or_directory(tmp_path, small_result):
    path = save_result(small_result, tmp_path / "result.json")
    from_file = load_result(path)
    from_dir = load_result(tmp_path)
    assert from_file.records == small_result.records
    assert from_dir.records == small_result.records


def test_report_files_and_byte_stability(tmp_path, small_result):
    first = emit_report(small_result, tmp_path / "rep")
    names = {p.name for p in first}
    assert {
        "detections.csv", "success_rates.csv", "per_bug_tests.csv",
        "comparisons.csv", "plans.csv", "search_records.csv",
        "summary.txt", "bugs_per_run.png", "success_rates.png",
    } <= names
    snapshot = {p: p.read_bytes() for p in first}
    second = emit_report(small_result, tmp_path / "rep")
    assert first == second
    for path in second:
        assert path.read_bytes() == snapshot[path]


def test_detections_csv_matches_matrix(tmp_path, small_result):
    emit_report(small_result, tmp_path)
    with (tmp_path / "detections.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    matrix = small_result.matrices["baseline"]
    assert len(rows) == 2 * len(matrix.bug_ids()) * matrix.runs
    for row in rows:
        outcomes = small_result.matrices[row["approach"]].detections
        assert int(row["detected"]) == int(
            outcomes[row["bug"]][int(row["run"])]
        )


def test_per_bug_tests_cover_every_pair(tmp_path, small_result):
    emit_report(small_result, tmp_path)
    with (tmp_path / "per_bug_tests.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    bugs = small_result.matrices["baseline"].bug_ids()
    assert len(rows) == len(bugs)  # one approach pair
    for row in rows:
        assert 0.0 <= float(row["p_value"]) <= 1.0
        assert 0.0 <= float(row["a12"]) <= 1.0


def test_summary_lists_comparisons_and_skips(tmp_path, small_result):
    emit_report(small_result, tmp_path)
    text = (tmp_path / "summary.txt").read_text()
    assert "baseline vs cl_ideal" in text
    assert "A12" in text
    assert "skipped programs" in text
    assert "excluded by program filter" in text


def test_empty_result_renders_headers_only(tmp_path, empty_result):
    assert empty_result.records == ()
    assert "math94" in empty_result.skipped
    written = emit_report(empty_result, tmp_path)
    names = {p.name for p in written}
    assert "bugs_per_run.png" not in names  # nothing to draw
    with (tmp_path / "detections.csv").open() as fh:
        assert fh.read() == "approach,bug,run,detected\n"
    summary = (tmp_path / "summary.txt").read_text()
    assert "bugs in scope: 0" in summary
    assert "degenerate" in summary


def test_empty_result_round_trips(tmp_path, empty_result):
    save_result(empty_result, tmp_path / "result.json")
    back = load_result(tmp_path)
    assert back.records == ()
    assert back.skipped == empty_result.skipped
    assert back.matrices["baseline"].runs == 0
