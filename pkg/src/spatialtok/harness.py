"""Evaluation harness: benchmark suites, prediction grading, policy bridge."""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

from .dataset import (build_record, dumps_record, manifest_path, read_records,
                      write_jsonl)
from .errors import IdMismatch
from .codec import GRAMMAR_VERSION
from .planner import PlannerConfig
from .scene_gen import RNG_ALGORITHM, GenConfig, derive_seed
from .sim import (CATEGORY_FOR_KIND, AccuracyReport, FailureCause, GradeReport,
                  accuracy, grade_text)
from .spatial import TaskKind

DEFAULT_TIMEOUT = 120.0
SUITE_SIZE = {TaskKind.PLACEMENT: 12, TaskKind.STACKING: 12}

Command = Union[str, Sequence[str]]


def oracle_policy_command() -> List[str]:
    return [sys.executable, "-m", "spatialtok.oracle_policy"]


def make_benchmark_suite(seed: int = 0, out=None,
                         planner: PlannerConfig = PlannerConfig()) -> list:
    """Build the 24-episode pick/stack suite, optionally writing it to ``out``.

    Generation runs with the uniqueness constraint on, so every reference in
    the suite names exactly one object.
    """
    records = []
    index = 0
    for kind, n in SUITE_SIZE.items():
        gen = GenConfig(unique_objects=True, task_kind=kind)
        for _ in range(n):
            records.append(build_record(index, derive_seed(seed, index), gen, planner))
            index += 1
    if out is not None:
        out = Path(out)
        digest = write_jsonl((dumps_record(r) for r in records), out)
        manifest = {
            "file": out.name,
            "seed": seed,
            "total": len(records),
            "counts": {k.value: n for k, n in SUITE_SIZE.items()},
            "unique_objects": True,
            "planner_config": planner.to_dict(),
            "grammar_version": GRAMMAR_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "digest": digest,
        }
        manifest_path(out).write_text(json.dumps(manifest, indent=2) + "\n",
                                      encoding="utf-8")
    return records


@dataclass(frozen=True)
class BridgeResult:
    plan_text: Optional[str]
    cause: Optional[FailureCause] = None
    detail: str = ""


def policy_bridge(command: Command, scene_text: str, instruction_text: str,
                  timeout: float = DEFAULT_TIMEOUT) -> BridgeResult:
    """Run an external policy on one episode.

    The child gets ``scene_text`` and ``instruction_text`` on stdin, one per
    line, and must print the plan text on stdout.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    if timeout <= 0:
        return BridgeResult(None, FailureCause.BRIDGE_TIMEOUT, "timeout <= 0")
    try:
        proc = subprocess.run(argv, input=f"{scene_text}\n{instruction_text}\n",
                              capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return BridgeResult(None, FailureCause.BRIDGE_TIMEOUT, f"exceeded {timeout}s")
    except (OSError, ValueError) as exc:
        return BridgeResult(None, FailureCause.BRIDGE_ERROR, f"spawn failed: {exc}")
    if proc.returncode != 0:
        return BridgeResult(None, FailureCause.BRIDGE_ERROR,
                            f"exit {proc.returncode}: {proc.stderr.strip()[:200]}")
    return BridgeResult(proc.stdout.strip())


@dataclass
class EvalReport:
    accuracy: AccuracyReport
    episodes: List[dict]

    @property
    def missing(self) -> int:
        return sum(1 for e in self.episodes
                   if e["failure_cause"] == FailureCause.MISSING_PREDICTION.value)

    def to_dict(self) -> dict:
        d = self.accuracy.to_dict()
        d["missing"] = self.missing
        d["episodes"] = self.episodes
        return d

    def table(self) -> str:
        lines = [self.accuracy.header(), self.accuracy.row()]
        causes: Dict[str, int] = {}
        for e in self.episodes:
            if e["failure_cause"]:
                causes[e["failure_cause"]] = causes.get(e["failure_cause"], 0) + 1
        if causes:
            lines.append("failures: " + ", ".join(f"{k}={v}" for k, v in sorted(causes.items())))
        return "\n".join(lines)


def load_predictions(path) -> Dict[int, str]:
    preds: Dict[int, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            if row["id"] in preds:
                raise IdMismatch(f"duplicate prediction for episode {row['id']}")
            preds[row["id"]] = row["plan_text"]
    return preds


def evaluate(records, predictions: Optional[Mapping[int, str]] = None,
             policy: Optional[Command] = None, timeout: float = DEFAULT_TIMEOUT,
             jobs: int = 1) -> EvalReport:
    """Grade predicted plans for every suite episode.

    Exactly one of ``predictions`` (episode id -> plan text) or ``policy``
    (an external command run through :func:`policy_bridge`) must be given.
    ``records`` may be a list of EpisodeRecords or a path to a suite file.
    """
    if (predictions is None) == (policy is None):
        raise ValueError("pass exactly one of predictions or policy")
    if isinstance(records, (str, Path)):
        records = read_records(records)
    ids = {r.id for r in records}

    if predictions is not None:
        unknown = sorted(set(predictions) - ids, key=str)
        if unknown:
            raise IdMismatch(f"predictions for unknown episodes: {unknown[:5]}")
        answers = [(predictions.get(r.id), None) for r in records]
    else:
        def ask(r):
            res = policy_bridge(policy, r.tokenized.scene_text,
                                r.tokenized.instruction_text, timeout)
            return res.plan_text, res.cause
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            answers = list(pool.map(ask, records))

    groups: Dict[str, List[GradeReport]] = {}
    episodes = []
    for r, (text, cause) in zip(records, answers):
        if cause is not None:
            grade = GradeReport.failure(cause)
        elif text is None:
            grade = GradeReport.failure(FailureCause.MISSING_PREDICTION)
        else:
            grade = grade_text(r.scene, text)
        category = CATEGORY_FOR_KIND[r.kind]
        groups.setdefault(category, []).append(grade)
        episodes.append({
            "id": r.id,
            "category": category,
            "success": grade.success,
            "failure_cause": None if grade.failure_cause is None else grade.failure_cause.value,
        })
    return EvalReport(accuracy(groups), episodes)
