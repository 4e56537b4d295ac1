"""Hierarchical tabletop coordinates and the core domain types.

The table is a 100x100 fine grid. Each cell of the 25x25 coarse grid covers a
4x4 block of fine cells, so a fine cell ``(row, col)`` is also addressed as
``(r_g, c_g, r_l, c_l)`` with ``row = 4 * r_g + r_l`` and ``col = 4 * c_g + c_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from .errors import RangeError

FINE_SIZE = 100
COARSE_SIZE = 25
LOCAL_SIZE = 4

HEIGHT_MIN = 1
HEIGHT_MAX = 30
Z_MAX = 120
ANGLE_MAX = 120  # one unit = 3 degrees


def _check(name: str, value: int, lo: int, hi: int) -> None:
    # bool is an int subclass; reject it so True never sneaks in as 1
    if not isinstance(value, int) or isinstance(value, bool):
        raise RangeError(f"{name} must be an int, got {value!r}")
    if not lo <= value <= hi:
        raise RangeError(f"{name}={value} outside [{lo}, {hi}]")


class Color(str, Enum):
    RED = "red"
    BLUE = "blue"
    GREEN = "green"
    PURPLE = "purple"
    YELLOW = "yellow"
    ORANGE = "orange"
    PINK = "pink"
    CYAN = "cyan"
    MAGENTA = "magenta"
    BROWN = "brown"
    GRAY = "gray"
    WHITE = "white"
    BLACK = "black"
    LIME = "lime"
    TEAL = "teal"
    NAVY = "navy"
    MAROON = "maroon"
    OLIVE = "olive"
    SILVER = "silver"

    def __str__(self) -> str:
        return self.value


class Shape(str, Enum):
    CUBE = "cube"
    CYLINDER = "cylinder"
    TRIANGULAR_PRISM = "triangular_prism"
    STAR = "star"
    MOON = "moon"
    CONTAINER = "container"

    def __str__(self) -> str:
        return self.value

    @property
    def phrase(self) -> str:
        """Natural-language form used in instructions."""
        return self.value.replace("_", " ")


COLORS: Tuple[Color, ...] = tuple(Color)
SHAPES: Tuple[Shape, ...] = tuple(Shape)

ObjectRef = Tuple[Color, Shape]


@dataclass(frozen=True, order=True)
class WorldCoord:
    row: int
    col: int

    def __post_init__(self):
        _check("row", self.row, 0, FINE_SIZE - 1)
        _check("col", self.col, 0, FINE_SIZE - 1)


@dataclass(frozen=True, order=True)
class HierCoord:
    r_g: int
    c_g: int
    r_l: int
    c_l: int

    def __post_init__(self):
        _check("r_g", self.r_g, 0, COARSE_SIZE - 1)
        _check("c_g", self.c_g, 0, COARSE_SIZE - 1)
        _check("r_l", self.r_l, 0, LOCAL_SIZE - 1)
        _check("c_l", self.c_l, 0, LOCAL_SIZE - 1)

    @property
    def world(self) -> WorldCoord:
        return hier_to_world(self)


def world_to_hier(w: WorldCoord) -> HierCoord:
    r_g, r_l = divmod(w.row, LOCAL_SIZE)
    c_g, c_l = divmod(w.col, LOCAL_SIZE)
    return HierCoord(r_g, c_g, r_l, c_l)


def hier_to_world(h: HierCoord) -> WorldCoord:
    return WorldCoord(LOCAL_SIZE * h.r_g + h.r_l, LOCAL_SIZE * h.c_g + h.c_l)


def euclidean_distance(a: WorldCoord, b: WorldCoord) -> float:
    return math.hypot(a.row - b.row, a.col - b.col)


@dataclass(frozen=True)
class SceneObject:
    id: int
    color: Color
    shape: Shape
    height: int
    pos: HierCoord

    def __post_init__(self):
        object.__setattr__(self, "color", Color(self.color))
        object.__setattr__(self, "shape", Shape(self.shape))
        _check("id", self.id, 0, 2**31 - 1)
        _check("height", self.height, HEIGHT_MIN, HEIGHT_MAX)

    @property
    def ref(self) -> ObjectRef:
        return (self.color, self.shape)

    @property
    def world(self) -> WorldCoord:
        return hier_to_world(self.pos)

    @property
    def name(self) -> str:
        return f"{self.color.value} {self.shape.phrase}"


class TaskKind(str, Enum):
    PLACEMENT = "placement"
    STACKING = "stacking"
    MOVEMENT = "movement"

    def __str__(self) -> str:
        return self.value


def render_instruction(kind: TaskKind, source: ObjectRef,
                       target: Optional[ObjectRef] = None,
                       coord: Optional[WorldCoord] = None) -> str:
    color, shape = source
    if kind is TaskKind.PLACEMENT:
        return (f"Pick up the {color.value} {shape.phrase} and place it into "
                f"the {target[0].value} container")
    if kind is TaskKind.STACKING:
        return (f"Stack the {color.value} {shape.phrase} on top of the "
                f"{target[0].value} {target[1].phrase}")
    return f"Move the {color.value} {shape.phrase} to [{coord.row}, {coord.col}]"


@dataclass(frozen=True)
class TaskSpec:
    kind: TaskKind
    source_ref: ObjectRef
    target_ref: Optional[ObjectRef] = None
    target_coord: Optional[WorldCoord] = None
    instruction: str = ""

    def __post_init__(self):
        kind = TaskKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "source_ref", _as_ref(self.source_ref))
        if self.target_ref is not None:
            object.__setattr__(self, "target_ref", _as_ref(self.target_ref))
        if kind is TaskKind.MOVEMENT:
            if self.target_coord is None or self.target_ref is not None:
                raise ValueError("movement task needs target_coord only")
        elif self.target_ref is None or self.target_coord is not None:
            raise ValueError(f"{kind.value} task needs target_ref only")
        if kind is TaskKind.PLACEMENT and self.target_ref[1] is not Shape.CONTAINER:
            raise ValueError("placement target must be a container")
        if not self.instruction:
            object.__setattr__(self, "instruction", render_instruction(
                kind, self.source_ref, self.target_ref, self.target_coord))


def _as_ref(ref) -> ObjectRef:
    color, shape = ref
    return (Color(color), Shape(shape))


MIN_OBJECTS = 4
MAX_OBJECTS = 7
MIN_DISTANCE = 4.0


@dataclass(frozen=True)
class Scene:
    """A validated object layout plus the task bound to it.

    Object ids must be ``0..n-1`` in list order; the token format carries no
    ids, so this is what makes scene text decode back to the same objects.
    """

    objects: Tuple[SceneObject, ...]
    task: TaskSpec
    seed: int = 0

    def __post_init__(self):
        objs = tuple(self.objects)
        object.__setattr__(self, "objects", objs)
        if not MIN_OBJECTS <= len(objs) <= MAX_OBJECTS:
            raise ValueError(f"scene has {len(objs)} objects, need "
                             f"{MIN_OBJECTS}..{MAX_OBJECTS}")
        if [o.id for o in objs] != list(range(len(objs))):
            raise ValueError("object ids must be 0..n-1 in order")
        for i, a in enumerate(objs):
            for b in objs[i + 1:]:
                if euclidean_distance(a.world, b.world) < MIN_DISTANCE:
                    raise ValueError(f"objects {a.id} and {b.id} closer than "
                                     f"{MIN_DISTANCE}")
        refs = [self.task.source_ref]
        if self.task.target_ref is not None:
            refs.append(self.task.target_ref)
        for ref in refs:
            if not any(o.ref == ref for o in objs):
                raise ValueError(f"task references missing object {ref[0]} {ref[1]}")

    def matching(self, ref: ObjectRef) -> Tuple[SceneObject, ...]:
        return tuple(o for o in self.objects if o.ref == ref)

    @property
    def is_unique(self) -> bool:
        refs = [o.ref for o in self.objects]
        return len(set(refs)) == len(refs)


@dataclass(frozen=True, order=True)
class ActionStep:
    """One gripper command: cell, height, orientation, gripper bit (1 = open)."""

    pos: HierCoord
    z: int
    roll: int = 0
    pitch: int = 0
    yaw: int = 0
    gripper: int = 1

    def __post_init__(self):
        if not isinstance(self.pos, HierCoord):
            raise RangeError(f"pos must be a HierCoord, got {self.pos!r}")
        _check("z", self.z, 0, Z_MAX)
        _check("roll", self.roll, 0, ANGLE_MAX)
        _check("pitch", self.pitch, 0, ANGLE_MAX)
        _check("yaw", self.yaw, 0, ANGLE_MAX)
        _check("gripper", self.gripper, 0, 1)

    @property
    def pos_g(self) -> Tuple[int, int]:
        return (self.pos.r_g, self.pos.c_g)

    @property
    def pos_l(self) -> Tuple[int, int]:
        return (self.pos.r_l, self.pos.c_l)

    @property
    def is_open(self) -> bool:
        return self.gripper == 1


@dataclass(frozen=True)
class ActionPlan:
    steps: Tuple[ActionStep, ...]

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("an action plan needs at least one step")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]
