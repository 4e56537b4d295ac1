"""Seeded procedural generation of tabletop scenes and their tasks.

Every scene is a pure function of its :class:`GenConfig`. Randomness comes
from numpy's PCG64 bit generator; dataset-level streams are split with
:func:`derive_seed` so sample ``i`` never depends on samples ``< i``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import GenerationExhausted, MissingRole
from .spatial import (COARSE_SIZE, COLORS, FINE_SIZE, HEIGHT_MAX, HEIGHT_MIN,
                      MAX_OBJECTS, MIN_DISTANCE, MIN_OBJECTS, ObjectRef,
                      Scene, SceneObject, Shape, TaskKind, TaskSpec,
                      WorldCoord, world_to_hier)

RNG_ALGORITHM = "numpy.random.PCG64 seeded via numpy.random.SeedSequence"
ATTEMPT_BUDGET = 10_000
MASK64 = (1 << 64) - 1

SOLID_SHAPES = tuple(s for s in Shape if s is not Shape.CONTAINER)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    n_objects_min: int = MIN_OBJECTS
    n_objects_max: int = MAX_OBJECTS
    min_distance: float = MIN_DISTANCE
    height_min: int = HEIGHT_MIN
    height_max: int = HEIGHT_MAX
    unique_objects: bool = False
    task_kind: TaskKind = TaskKind.PLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "task_kind", TaskKind(self.task_kind))
        # scenes must still satisfy the Scene invariants, so the knobs can
        # only tighten them
        if not MIN_OBJECTS <= self.n_objects_min <= self.n_objects_max <= MAX_OBJECTS:
            raise ValueError(
                f"object count range must lie within [{MIN_OBJECTS}, {MAX_OBJECTS}]")
        if self.min_distance < MIN_DISTANCE:
            raise ValueError(f"min_distance must be >= {MIN_DISTANCE}")
        if not HEIGHT_MIN <= self.height_min <= self.height_max <= HEIGHT_MAX:
            raise ValueError(f"height range must lie within [{HEIGHT_MIN}, {HEIGHT_MAX}]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["task_kind"] = self.task_kind.value
        return d


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


def derive_seed(dataset_seed: int, index: int) -> int:
    """Per-sample 64-bit seed for sample ``index`` of a dataset."""
    ss = np.random.SeedSequence([dataset_seed & MASK64, index])
    return int(ss.generate_state(1, np.uint64)[0])


def _pick(rng: np.random.Generator, seq: Sequence):
    return seq[int(rng.integers(len(seq)))]


def _role_refs(kind: TaskKind, rng: np.random.Generator) -> List[ObjectRef]:
    source = (_pick(rng, COLORS), _pick(rng, SOLID_SHAPES))
    if kind is TaskKind.PLACEMENT:
        return [source, (_pick(rng, COLORS), Shape.CONTAINER)]
    if kind is TaskKind.STACKING:
        while True:
            base = (_pick(rng, COLORS), _pick(rng, SOLID_SHAPES))
            if base != source:
                return [source, base]
    return [source]


def _distractor_refs(cfg: GenConfig, roles: List[ObjectRef], count: int,
                     rng: np.random.Generator) -> List[ObjectRef]:
    pool = [(c, s) for c in COLORS for s in Shape if (c, s) not in roles]
    containers = sum(1 for r in roles if r[1] is Shape.CONTAINER)
    # only placement scenes may hold more than one container
    limit = None if cfg.task_kind is TaskKind.PLACEMENT else 1
    out = []
    for _ in range(count):
        if limit is not None and containers >= limit:
            pool = [r for r in pool if r[1] is not Shape.CONTAINER]
        ref = _pick(rng, pool)
        if cfg.unique_objects:
            pool.remove(ref)
        if ref[1] is Shape.CONTAINER:
            containers += 1
        out.append(ref)
    return out


def _place(n: int, min_distance: float, rng: np.random.Generator) -> List[WorldCoord]:
    min_d2 = min_distance * min_distance
    accepted: List[tuple] = []
    for _ in range(ATTEMPT_BUDGET):
        row, col = divmod(int(rng.integers(FINE_SIZE * FINE_SIZE)), FINE_SIZE)
        if all((row - r) ** 2 + (col - c) ** 2 >= min_d2 for r, c in accepted):
            accepted.append((row, col))
            if len(accepted) == n:
                return [WorldCoord(r, c) for r, c in accepted]
    raise GenerationExhausted(
        f"placed {len(accepted)}/{n} objects within {ATTEMPT_BUDGET} attempts")


def generate_scene(cfg: GenConfig) -> Scene:
    rng = make_rng(cfg.seed)
    n = int(rng.integers(cfg.n_objects_min, cfg.n_objects_max + 1))
    roles = _role_refs(cfg.task_kind, rng)
    refs = roles + _distractor_refs(cfg, roles, n - len(roles), rng)
    refs = [refs[i] for i in rng.permutation(n)]
    cells = _place(n, cfg.min_distance, rng)
    heights = rng.integers(cfg.height_min, cfg.height_max + 1, size=n)
    objects = [
        SceneObject(i, color, shape, int(h), world_to_hier(cell))
        for i, ((color, shape), cell, h) in enumerate(zip(refs, cells, heights))
    ]
    task = sample_task(cfg, objects, rng)
    return Scene(tuple(objects), task, cfg.seed)


def _unique(objects: Sequence[SceneObject]) -> List[SceneObject]:
    counts = {}
    for o in objects:
        counts[o.ref] = counts.get(o.ref, 0) + 1
    return [o for o in objects if counts[o.ref] == 1]


def free_cells(objects: Sequence[SceneObject], min_distance: float) -> np.ndarray:
    """Fine cells at distance >= ``min_distance`` from every object, as (k, 2)."""
    rows, cols = np.divmod(np.arange(FINE_SIZE * FINE_SIZE), FINE_SIZE)
    ok = np.ones(rows.shape, dtype=bool)
    for o in objects:
        w = o.world
        ok &= (rows - w.row) ** 2 + (cols - w.col) ** 2 >= min_distance * min_distance
    return np.stack([rows[ok], cols[ok]], axis=1)


def sample_task(cfg: GenConfig, objects: Sequence[SceneObject],
                rng: Optional[np.random.Generator] = None) -> TaskSpec:
    """Choose a task of kind ``cfg.task_kind`` over ``objects``.

    Only objects whose (color, shape) is unique in the list can take a role,
    so every task reference resolves to exactly one object.
    """
    if rng is None:
        rng = make_rng(cfg.seed)
    kind = cfg.task_kind
    unique = _unique(objects)
    sources = [o for o in unique if o.shape is not Shape.CONTAINER]
    if not sources:
        raise MissingRole("no uniquely identifiable non-container source object")

    if kind is TaskKind.PLACEMENT:
        targets = [o for o in unique if o.shape is Shape.CONTAINER]
        if not targets:
            raise MissingRole("placement needs a uniquely identifiable container")
        src, tgt = _pick(rng, sources), _pick(rng, targets)
        return TaskSpec(kind, src.ref, target_ref=tgt.ref)

    if kind is TaskKind.STACKING:
        if len(sources) < 2:
            raise MissingRole("stacking needs two uniquely identifiable solid objects")
        src = _pick(rng, sources)
        tgt = _pick(rng, [o for o in sources if o is not src])
        return TaskSpec(kind, src.ref, target_ref=tgt.ref)

    src = _pick(rng, sources)
    cells = free_cells(objects, cfg.min_distance)
    if len(cells) == 0:
        raise MissingRole("no free cell available for a movement target")
    row, col = cells[int(rng.integers(len(cells)))]
    return TaskSpec(kind, src.ref, target_coord=WorldCoord(int(row), int(col)))


def uniformity_report(scenes: Sequence[Scene]) -> np.ndarray:
    """Object placement counts per coarse cell, shape (25, 25)."""
    if not scenes:
        raise ValueError("uniformity_report needs at least one scene")
    hist = np.zeros((COARSE_SIZE, COARSE_SIZE), dtype=np.int64)
    for scene in scenes:
        for o in scene.objects:
            hist[o.pos.r_g, o.pos.c_g] += 1
    return hist


def quadrant_ratio(hist: np.ndarray) -> float:
    """Max/min occupancy over the four 12x12 corner quadrants of the coarse grid."""
    q = 12
    quads = [hist[:q, :q].sum(), hist[:q, -q:].sum(),
             hist[-q:, :q].sum(), hist[-q:, -q:].sum()]
    lo = min(quads)
    return float("inf") if lo == 0 else max(quads) / lo


def config_for(cfg: GenConfig, seed: int, kind: TaskKind) -> GenConfig:
    return replace(cfg, seed=seed, task_kind=kind)
