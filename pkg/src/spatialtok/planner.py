"""Ground-truth 7-step action plans and their reasoning annotations."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Tuple

from .errors import AmbiguousReference, UnresolvedReference
from .spatial import (Z_MAX, ActionPlan, ActionStep, HierCoord, ObjectRef,
                      Scene, SceneObject, Shape, TaskKind, world_to_hier)

MAX_STACK_HEIGHT = 60  # two stacked max-height objects


@dataclass(frozen=True)
class PlannerConfig:
    z_safe: int = 61
    z_grasp_offset: int = 0
    default_roll: int = 0
    default_pitch: int = 0
    default_yaw: int = 0

    def __post_init__(self):
        if not MAX_STACK_HEIGHT < self.z_safe <= Z_MAX:
            raise ValueError(f"z_safe must be in ({MAX_STACK_HEIGHT}, {Z_MAX}]")
        if self.z_grasp_offset < 0:
            raise ValueError("z_grasp_offset must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def resolve(scene: Scene, ref: ObjectRef) -> SceneObject:
    found = scene.matching(ref)
    if not found:
        raise UnresolvedReference(f"no {ref[0]} {ref[1]} in scene")
    if len(found) > 1:
        raise AmbiguousReference(f"{len(found)} objects match {ref[0]} {ref[1]}")
    return found[0]


def roles(scene: Scene) -> Tuple[SceneObject, object]:
    """Resolve the task's source object and its target (object or fine cell)."""
    task = scene.task
    source = resolve(scene, task.source_ref)
    if task.kind is TaskKind.MOVEMENT:
        return source, task.target_coord
    return source, resolve(scene, task.target_ref)


def plan(scene: Scene, cfg: PlannerConfig = PlannerConfig()) -> ActionPlan:
    source, target = roles(scene)
    kind = scene.task.kind
    if kind is TaskKind.MOVEMENT:
        target_pos, place_z = world_to_hier(target), 0
    elif kind is TaskKind.STACKING:
        target_pos, place_z = target.pos, target.height
    else:
        target_pos, place_z = target.pos, 0

    # every generated object starts on the table, so its base is at 0
    grasp_z = cfg.z_grasp_offset

    def step(pos: HierCoord, z: int, gripper: int) -> ActionStep:
        return ActionStep(pos, z, cfg.default_roll, cfg.default_pitch,
                          cfg.default_yaw, gripper)

    return ActionPlan((
        step(source.pos, cfg.z_safe, 1),
        step(source.pos, grasp_z, 1),
        step(source.pos, grasp_z, 0),
        step(source.pos, cfg.z_safe, 0),
        step(target_pos, cfg.z_safe, 0),
        step(target_pos, place_z, 0),
        step(target_pos, place_z, 1),
    ))


def _cell(pos: HierCoord) -> str:
    return f"coarse cell ({pos.r_g}, {pos.c_g}), local cell ({pos.r_l}, {pos.c_l})"


def _grip(step: ActionStep) -> str:
    return "gripper open" if step.is_open else "gripper closed"


def localization_lines(scene: Scene) -> List[str]:
    source, target = roles(scene)
    lines = []
    for o in (source, target) if isinstance(target, SceneObject) else (source,):
        lines.append(f"The {o.name} is at {_cell(o.pos)}, height {o.height}.")
    if scene.task.kind is TaskKind.MOVEMENT:
        lines.append(f"The target location [{target.row}, {target.col}] is at "
                     f"{_cell(world_to_hier(target))}.")
    return lines


def planning_lines(scene: Scene, action_plan: ActionPlan) -> List[str]:
    source, target = roles(scene)
    if isinstance(target, SceneObject):
        where = f"the {target.name}"
        onto = ("into the " if target.shape is Shape.CONTAINER else "onto the ") + target.name
    else:
        where = f"the target location [{target.row}, {target.col}]"
        onto = "onto the table"
    s = source.name
    templates = [
        "move above the {s} at {cell}, z {z}, {grip}.",
        "lower to the base of the {s} at z {z}, {grip}.",
        "close the gripper to grasp the {s}.",
        "lift the {s} to a safe height, z {z}, {grip}.",
        "move above {where} at {cell}, z {z}, {grip}.",
        "lower the {s} {onto} at z {z}, {grip}.",
        "open the gripper to release the {s}.",
    ]
    lines = []
    for i, st in enumerate(action_plan.steps):
        if i < len(templates):
            text = templates[i].format(s=s, cell=_cell(st.pos), z=st.z,
                                       grip=_grip(st), where=where, onto=onto)
        else:
            text = f"move to {_cell(st.pos)}, z {st.z}, {_grip(st)}."
        lines.append(f"Step {i + 1}: {text}")
    return lines


def annotate(scene: Scene, action_plan: ActionPlan) -> str:
    """Two-part reasoning text: object localization, then action planning."""
    parts = ["Object localization:", *localization_lines(scene),
             "Action planning:", *planning_lines(scene, action_plan)]
    return "\n".join(parts)
