"""Episode records, their JSONL schema, and seeded dataset generation."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .codec import (GRAMMAR_VERSION, TokenizedEpisode, decode_plan, decode_scene,
                    encode_episode, encode_plan, encode_scene, parse_instruction)
from .errors import GenerationExhausted, OracleFailure
from .planner import PlannerConfig, annotate, localization_lines, plan, planning_lines
from .scene_gen import RNG_ALGORITHM, GenConfig, derive_seed, generate_scene
from .sim import GradeReport, run_episode
from .spatial import (ActionPlan, ActionStep, HierCoord, Scene, SceneObject,
                      TaskKind, TaskSpec, WorldCoord)

log = logging.getLogger(__name__)

DEFAULT_RATIOS: Dict[TaskKind, int] = {
    TaskKind.PLACEMENT: 100,
    TaskKind.STACKING: 120,
    TaskKind.MOVEMENT: 40,
}

RECORD_FIELDS = ("id", "seed", "scene", "task", "plan", "reasoning",
                 "scene_text", "instruction_text", "plan_text", "reasoning_text")


@dataclass(frozen=True)
class EpisodeRecord:
    id: int
    seed: int
    scene: Scene
    plan: Optional[ActionPlan]
    reasoning: str
    tokenized: TokenizedEpisode
    grade: Optional[GradeReport] = None

    @property
    def task(self) -> TaskSpec:
        return self.scene.task

    @property
    def kind(self) -> TaskKind:
        return self.scene.task.kind

    def to_text(self) -> str:
        return encode_episode(self.tokenized)

    def to_dict(self) -> dict:
        scene = self.scene
        d = {
            "id": self.id,
            "seed": self.seed,
            "scene": scene_to_dict(scene),
            "task": task_to_dict(scene.task),
            "plan": None if self.plan is None else plan_to_dict(self.plan),
            "reasoning": {
                "localization": localization_lines(scene),
                "planning": [] if self.plan is None else planning_lines(scene, self.plan),
            },
            "scene_text": self.tokenized.scene_text,
            "instruction_text": self.tokenized.instruction_text,
            "plan_text": self.tokenized.plan_text,
            "reasoning_text": self.tokenized.reasoning_text,
        }
        if self.grade is not None:
            d["grade"] = self.grade.to_dict()
        return d

    def verify(self) -> None:
        """Check the tokenized fields decode back to the structured ones."""
        tok = self.tokenized
        if decode_scene(tok.scene_text) != self.scene.objects:
            raise OracleFailure(f"record {self.id}: scene_text does not round-trip")
        if parse_instruction(tok.instruction_text) != self.scene.task:
            raise OracleFailure(f"record {self.id}: instruction_text does not round-trip")
        if self.plan is not None:
            if decode_plan(tok.plan_text) != self.plan:
                raise OracleFailure(f"record {self.id}: plan_text does not round-trip")
            if tok.reasoning_text != annotate(self.scene, self.plan):
                raise OracleFailure(f"record {self.id}: reasoning_text is stale")


# -- JSON mapping ---------------------------------------------------------------

def _pos(p: HierCoord) -> List[int]:
    return [p.r_g, p.c_g, p.r_l, p.c_l]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "seed": scene.seed,
        "objects": [{"id": o.id, "color": o.color.value, "shape": o.shape.value,
                     "height": o.height, "pos": _pos(o.pos)} for o in scene.objects],
    }


def task_to_dict(task: TaskSpec) -> dict:
    return {
        "kind": task.kind.value,
        "source": [task.source_ref[0].value, task.source_ref[1].value],
        "target": None if task.target_ref is None else
        [task.target_ref[0].value, task.target_ref[1].value],
        "target_coord": None if task.target_coord is None else
        [task.target_coord.row, task.target_coord.col],
        "instruction": task.instruction,
    }


def plan_to_dict(p: ActionPlan) -> List[dict]:
    return [{"g": list(s.pos_g), "l": list(s.pos_l), "z": s.z, "roll": s.roll,
             "pitch": s.pitch, "yaw": s.yaw, "gripper": s.gripper} for s in p.steps]


def task_from_dict(d: Mapping) -> TaskSpec:
    coord = d.get("target_coord")
    target = d.get("target")
    return TaskSpec(
        TaskKind(d["kind"]), tuple(d["source"]),
        target_ref=None if target is None else tuple(target),
        target_coord=None if coord is None else WorldCoord(*coord),
        instruction=d["instruction"],
    )


def scene_from_dict(d: Mapping, task: TaskSpec) -> Scene:
    objects = tuple(SceneObject(o["id"], o["color"], o["shape"], o["height"],
                                HierCoord(*o["pos"])) for o in d["objects"])
    return Scene(objects, task, d["seed"])


def plan_from_dict(steps: Sequence[Mapping]) -> ActionPlan:
    return ActionPlan(tuple(
        ActionStep(HierCoord(*s["g"], *s["l"]), s["z"], s["roll"], s["pitch"],
                   s["yaw"], s["gripper"]) for s in steps))


def record_from_dict(d: Mapping) -> EpisodeRecord:
    missing = [f for f in RECORD_FIELDS if f not in d]
    if missing:
        raise ValueError(f"record is missing fields: {', '.join(missing)}")
    task = task_from_dict(d["task"])
    scene = scene_from_dict(d["scene"], task)
    p = None if d["plan"] is None else plan_from_dict(d["plan"])
    tok = TokenizedEpisode(d["scene_text"], d["instruction_text"],
                           d["reasoning_text"], d["plan_text"])
    return EpisodeRecord(d["id"], d["seed"], scene, p, d["reasoning_text"], tok)


def dumps_record(record: EpisodeRecord) -> str:
    return json.dumps(record.to_dict(), separators=(",", ":"))


def read_records(path) -> List[EpisodeRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record: {exc}") from exc
    return records


# -- generation -----------------------------------------------------------------

def build_record(index: int, seed: int, gen: GenConfig,
                 planner: PlannerConfig = PlannerConfig()) -> EpisodeRecord:
    scene = generate_scene(replace(gen, seed=seed))
    p = plan(scene, planner)
    grade = run_episode(scene, p)
    if not grade.success:
        raise OracleFailure(f"sample {index}: oracle plan failed ({grade.failure_cause})")
    reasoning = annotate(scene, p)
    tok = TokenizedEpisode(encode_scene(scene), scene.task.instruction,
                           reasoning, encode_plan(p))
    record = EpisodeRecord(index, seed, scene, p, reasoning, tok)
    record.verify()
    return record


def split_counts(total: int, ratios: Mapping[TaskKind, int]) -> Dict[TaskKind, int]:
    """Largest-remainder apportionment of ``total`` samples over ``ratios``.

    Ties on the remainder go to the kind listed first.
    """
    if total < 1:
        raise ValueError("total must be >= 1")
    weight = sum(ratios.values())
    if weight <= 0 or any(r < 0 for r in ratios.values()):
        raise ValueError("ratios must be non-negative with a positive sum")
    quotas = {k: Fraction(total * r, weight) for k, r in ratios.items()}
    counts = {k: int(q) for k, q in quotas.items()}
    short = total - sum(counts.values())
    order = sorted(quotas, key=lambda k: -(quotas[k] - counts[k]))
    for k in order[:short]:
        counts[k] += 1
    return counts


def _kinds(counts: Mapping[TaskKind, int]) -> List[TaskKind]:
    return [k for k, n in counts.items() for _ in range(n)]


def _build_one(args: Tuple[int, int, GenConfig, PlannerConfig]) -> str:
    index, dataset_seed, gen, planner = args
    seed = derive_seed(dataset_seed, index)
    try:
        return dumps_record(build_record(index, seed, gen, planner))
    except GenerationExhausted as exc:
        raise GenerationExhausted(f"sample {index}: {exc}") from exc


def iter_record_lines(counts: Mapping[TaskKind, int], seed: int, gen: GenConfig,
                      planner: PlannerConfig, jobs: int = 1) -> Iterable[str]:
    work = [(i, seed, replace(gen, task_kind=k), planner)
            for i, k in enumerate(_kinds(counts))]
    if jobs <= 1:
        yield from map(_build_one, work)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map() yields in submission order, keeping output deterministic
        yield from pool.map(_build_one, work, chunksize=64)


def manifest_path(out: Path) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def write_jsonl(lines: Iterable[str], out: Path) -> str:
    """Write lines, returning the sha256 digest of the bytes written."""
    h = hashlib.sha256()
    with open(out, "wb") as f:
        for line in lines:
            data = (line + "\n").encode("utf-8")
            h.update(data)
            f.write(data)
    return "sha256:" + h.hexdigest()


def generate_dataset(total: int, out, ratios: Mapping[TaskKind, int] = DEFAULT_RATIOS,
                     seed: int = 0, gen: GenConfig = GenConfig(),
                     planner: PlannerConfig = PlannerConfig(), jobs: int = 1) -> dict:
    """Write ``total`` episodes to ``out`` (JSONL) plus a sidecar manifest.

    Returns the manifest dict.
    """
    out = Path(out)
    ratios = {TaskKind(k): int(v) for k, v in ratios.items()}
    counts = split_counts(total, ratios)
    digest = write_jsonl(iter_record_lines(counts, seed, gen, planner, jobs), out)
    manifest = {
        "file": out.name,
        "seed": seed,
        "total": total,
        "counts": {k.value: n for k, n in counts.items()},
        "ratios": {k.value: r for k, r in ratios.items()},
        "gen_config": {k: v for k, v in gen.to_dict().items()
                       if k not in ("seed", "task_kind")},
        "planner_config": planner.to_dict(),
        "grammar_version": GRAMMAR_VERSION,
        "rng_algorithm": RNG_ALGORITHM,
        "sample_seed": "SeedSequence([dataset_seed, index]).generate_state(1, uint64)",
        "digest": digest,
    }
    manifest_path(out).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d records to %s (%s)", total, out, digest)
    return manifest
