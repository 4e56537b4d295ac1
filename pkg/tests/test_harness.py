import json
import random
import sys

import pytest

from spatialtok.errors import IdMismatch
from spatialtok.harness import (evaluate, load_predictions, make_benchmark_suite,
                                oracle_policy_command, policy_bridge)
from spatialtok.sim import FailureCause
from spatialtok.spatial import TaskKind


@pytest.fixture(scope="module")
def suite():
    return make_benchmark_suite(seed=0)


def oracle_predictions(records):
    return {r.id: r.tokenized.plan_text for r in records}


def test_suite_shape(suite, tmp_path):
    assert len(suite) == 24
    kinds = [r.kind for r in suite]
    assert kinds.count(TaskKind.PLACEMENT) == 12 and kinds.count(TaskKind.STACKING) == 12
    for r in suite:
        assert r.scene.is_unique
        assert len(r.scene.matching(r.task.source_ref)) == 1
        assert len(r.scene.matching(r.task.target_ref)) == 1
    make_benchmark_suite(0, tmp_path / "suite.jsonl")
    assert len((tmp_path / "suite.jsonl").read_text().splitlines()) == 24
    manifest = json.loads((tmp_path / "suite.manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["unique_objects"] is True


def test_oracle_predictions_score_full(suite):
    report = evaluate(suite, predictions=oracle_predictions(suite))
    assert report.accuracy.categories == {"picking": (12, 12), "stacking": (12, 12)}
    assert report.accuracy.row() == "12/12  12/12  100%"


def test_table_one_row(suite):
    preds = oracle_predictions(suite)
    picks = [r.id for r in suite if r.kind is TaskKind.PLACEMENT]
    stacks = [r.id for r in suite if r.kind is TaskKind.STACKING]
    for i in picks[:2] + stacks[:6]:
        preds[i] = preds[i].replace(",o0]", ",o1]")  # never grasp
    report = evaluate(suite, predictions=preds)
    assert report.accuracy.row() == "10/12  6/12  66.67%"
    assert report.to_dict()["total_percent"] == 66.67


def test_one_malformed_plan(suite):
    preds = oracle_predictions(suite)
    preds[suite[3].id] = preds[suite[3].id][:-4]
    report = evaluate(suite, predictions=preds)
    successes = sum(s for s, _ in report.accuracy.categories.values())
    assert successes == 23
    assert report.episodes[3]["failure_cause"] == "parse_error"


def test_missing_predictions_reported(suite):
    preds = oracle_predictions(suite)
    del preds[suite[0].id]
    report = evaluate(suite, predictions=preds)
    assert report.missing == 1
    assert report.episodes[0]["failure_cause"] == FailureCause.MISSING_PREDICTION.value


def test_unknown_id(suite):
    preds = oracle_predictions(suite)
    preds[999] = preds[suite[0].id]
    with pytest.raises(IdMismatch):
        evaluate(suite, predictions=preds)


def test_order_independent(suite, tmp_path):
    rows = [{"id": r.id, "plan_text": r.tokenized.plan_text} for r in suite]
    rows[5]["plan_text"] = "garbage"
    reports = []
    for seed in range(3):
        random.Random(seed).shuffle(rows)
        path = tmp_path / f"p{seed}.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        reports.append(evaluate(suite, predictions=load_predictions(path)).to_dict())
    assert reports[0] == reports[1] == reports[2]


def test_duplicate_prediction_lines(tmp_path):
    path = tmp_path / "p.jsonl"
    path.write_text('{"id": 1, "plan_text": "x"}\n{"id": 1, "plan_text": "y"}\n')
    with pytest.raises(IdMismatch):
        load_predictions(path)


def test_bridge_oracle(suite):
    r = suite[0]
    res = policy_bridge(oracle_policy_command(), r.tokenized.scene_text,
                        r.tokenized.instruction_text, timeout=60)
    assert res.cause is None
    assert res.plan_text == r.tokenized.plan_text


def test_bridge_failing_command(suite):
    cmd = [sys.executable, "-c", "import sys; sys.exit(1)"]
    report = evaluate(suite[:4], policy=cmd, jobs=2)
    assert all(e["failure_cause"] == "bridge_error" for e in report.episodes)


def test_bridge_missing_executable(suite):
    res = policy_bridge(["/nonexistent/policy"], "a", "b")
    assert res.cause is FailureCause.BRIDGE_ERROR


def test_bridge_zero_timeout(suite):
    report = evaluate(suite, policy=oracle_policy_command(), timeout=0)
    assert all(e["failure_cause"] == "bridge_timeout" for e in report.episodes)
    assert report.accuracy.total_percent == 0


def test_bridge_slow_policy_times_out():
    cmd = [sys.executable, "-c", "import time; time.sleep(5)"]
    res = policy_bridge(cmd, "a", "b", timeout=0.3)
    assert res.cause is FailureCause.BRIDGE_TIMEOUT


def test_bridge_string_command(suite):
    r = suite[1]
    cmd = f"{sys.executable} -m spatialtok.oracle_policy"
    res = policy_bridge(cmd, r.tokenized.scene_text, r.tokenized.instruction_text)
    assert res.plan_text == r.tokenized.plan_text


def test_evaluate_argument_check(suite):
    with pytest.raises(ValueError):
        evaluate(suite)
