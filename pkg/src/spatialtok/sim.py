"""Discrete tabletop simulator, task predicates and accuracy metrics.

The gripper teleports between commanded poses. Objects form per-cell stacks
through a support relation (table, another object, or a container), and the
grasp point of a held object is its base, so a held object's elevation always
equals the gripper height.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Union

from .errors import (AmbiguousReference, EmptySuite, ParseError, RangeError,
                     UnresolvedReference)
from .spatial import (Z_MAX, ActionPlan, ActionStep, HierCoord, Scene, Shape,
                      TaskKind, world_to_hier)

GRASP_TOLERANCE = 1
TABLE = "table"

Support = Union[str, int]


class FailureCause(str, Enum):
    PARSE_ERROR = "parse_error"
    GRASP_MISS = "grasp_miss"
    COLLISION = "collision"
    WRONG_SUPPORT = "wrong_support"
    WRONG_CELL = "wrong_cell"
    NEVER_RELEASED = "never_released"
    AMBIGUOUS_REFERENCE = "ambiguous_reference"
    UNRESOLVED_REFERENCE = "unresolved_reference"
    MISSING_PREDICTION = "missing_prediction"
    BRIDGE_TIMEOUT = "bridge_timeout"
    BRIDGE_ERROR = "bridge_error"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimState:
    gripper_pos: HierCoord
    gripper_z: int
    gripper_open: bool
    held: Optional[int]
    positions: Dict[int, HierCoord]
    supports: Dict[int, Optional[Support]]  # None while held
    elevations: Dict[int, int]
    flag: Optional[FailureCause] = None


def initial_state(scene: Scene) -> SimState:
    ids = [o.id for o in scene.objects]
    return SimState(
        gripper_pos=HierCoord(0, 0, 0, 0),
        gripper_z=Z_MAX,
        gripper_open=True,
        held=None,
        positions={o.id: o.pos for o in scene.objects},
        supports={i: TABLE for i in ids},
        elevations={i: 0 for i in ids},
    )


def cell_stack(state: SimState, scene: Scene, pos: HierCoord) -> List[int]:
    """Unheld object ids in ``pos``, bottom to top."""
    here = {i for i, p in state.positions.items() if p == pos and i != state.held}
    stack: List[int] = []
    below: Support = TABLE
    while True:
        nxt = [i for i in here if state.supports[i] == below]
        if not nxt:
            return stack
        below = nxt[0]
        stack.append(below)
        here.discard(below)


def _surface(state: SimState, scene: Scene, stack: List[int]) -> int:
    if not stack:
        return 0
    top = stack[-1]
    if scene.objects[top].shape is Shape.CONTAINER:
        return state.elevations[top]
    return state.elevations[top] + scene.objects[top].height


def step(state: SimState, scene: Scene, a: ActionStep) -> SimState:
    """Apply one action; a problem sets the sticky ``flag`` on the new state."""
    positions = dict(state.positions)
    supports = dict(state.supports)
    elevations = dict(state.elevations)
    held = state.held
    flag = state.flag

    def raise_flag(cause: FailureCause):
        nonlocal flag
        if flag is None:
            flag = cause

    if held is not None:
        positions[held] = a.pos
        elevations[held] = a.z
    moved = replace(state, gripper_pos=a.pos, gripper_z=a.z, positions=positions,
                    supports=supports, elevations=elevations)
    stack = cell_stack(moved, scene, a.pos)

    if held is not None:
        if a.z < _surface(moved, scene, stack):
            raise_flag(FailureCause.COLLISION)
    elif stack and a.z < elevations[stack[-1]] - GRASP_TOLERANCE:
        raise_flag(FailureCause.COLLISION)

    gripper_open = state.gripper_open
    if gripper_open and not a.is_open:
        gripper_open = False
        if held is None:
            if stack and abs(elevations[stack[-1]] - a.z) <= GRASP_TOLERANCE:
                held = stack[-1]
                supports[held] = None
                elevations[held] = a.z
            else:
                raise_flag(FailureCause.GRASP_MISS)
    elif not gripper_open and a.is_open:
        gripper_open = True
        if held is not None:
            # the released object drops onto the highest surface in the cell
            supports[held] = stack[-1] if stack else TABLE
            elevations[held] = _surface(moved, scene, stack)
            held = None

    return replace(moved, gripper_open=gripper_open, held=held, flag=flag)


def check_invariants(state: SimState, scene: Scene) -> None:
    """Assert conservation, support acyclicity and elevation consistency."""
    ids = {o.id for o in scene.objects}
    assert set(state.positions) == ids == set(state.supports) == set(state.elevations)
    for i in ids:
        if i == state.held:
            assert state.supports[i] is None
            assert state.elevations[i] == state.gripper_z
            continue
        seen = {i}
        cur = state.supports[i]
        while cur != TABLE:
            assert cur not in seen, "support cycle"
            seen.add(cur)
            cur = state.supports[cur]
        sup = state.supports[i]
        if sup == TABLE:
            assert state.elevations[i] == 0
        else:
            base = scene.objects[sup]
            assert state.positions[sup] == state.positions[i]
            expect = state.elevations[sup]
            if base.shape is not Shape.CONTAINER:
                expect += base.height
            assert state.elevations[i] == expect


@dataclass
class GradeReport:
    success: bool
    failure_cause: Optional[FailureCause] = None
    trace: List[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.success != (self.failure_cause is None):
            raise ValueError("failure_cause must be set exactly when success is False")

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "failure_cause": None if self.failure_cause is None else self.failure_cause.value,
            "trace": self.trace,
        }

    @classmethod
    def failure(cls, cause: FailureCause) -> "GradeReport":
        return cls(False, FailureCause(cause))


def _summary(i: int, s: SimState) -> dict:
    p = s.gripper_pos
    return {"step": i, "pos": [p.r_g, p.c_g, p.r_l, p.c_l], "z": s.gripper_z,
            "gripper": int(s.gripper_open), "held": s.held,
            "flag": None if s.flag is None else s.flag.value}


def run_episode(scene: Scene, plan: ActionPlan) -> GradeReport:
    from .planner import resolve

    task = scene.task
    try:
        source = resolve(scene, task.source_ref)
        target = None if task.target_ref is None else resolve(scene, task.target_ref)
    except AmbiguousReference:
        return GradeReport.failure(FailureCause.AMBIGUOUS_REFERENCE)
    except UnresolvedReference:
        return GradeReport.failure(FailureCause.UNRESOLVED_REFERENCE)

    state = initial_state(scene)
    trace = []
    for i, a in enumerate(plan.steps, 1):
        state = step(state, scene, a)
        trace.append(_summary(i, state))

    cause = state.flag
    if cause is None and state.held == source.id:
        cause = FailureCause.NEVER_RELEASED
    if cause is None:
        if task.kind is TaskKind.MOVEMENT:
            want_pos, want_support = world_to_hier(task.target_coord), TABLE
        else:
            want_pos, want_support = state.positions[target.id], target.id
        if state.positions[source.id] != want_pos:
            cause = FailureCause.WRONG_CELL
        elif state.supports[source.id] != want_support:
            cause = FailureCause.WRONG_SUPPORT
    return GradeReport(cause is None, cause, trace)


def grade_text(scene: Scene, plan_text: str) -> GradeReport:
    """Decode a plan and grade it; malformed text fails with ``parse_error``."""
    from .codec import decode_plan

    try:
        plan = decode_plan(plan_text)
    except (ParseError, RangeError):
        return GradeReport.failure(FailureCause.PARSE_ERROR)
    return run_episode(scene, plan)


# -- metrics ------------------------------------------------------------------

CATEGORY_FOR_KIND = {
    TaskKind.PLACEMENT: "picking",
    TaskKind.STACKING: "stacking",
    TaskKind.MOVEMENT: "movement",
}
CATEGORY_ORDER = ("picking", "stacking", "movement")


def round_percent(successes: int, attempts: int) -> Decimal:
    """Percentage to two decimals, rounding half up (16/24 -> 66.67)."""
    pct = Decimal(100 * successes) / Decimal(attempts)
    return pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def format_percent(pct: Decimal) -> str:
    text = f"{pct:.2f}".rstrip("0").rstrip(".")
    return f"{text}%"


@dataclass(frozen=True)
class AccuracyReport:
    categories: Dict[str, tuple]  # name -> (successes, attempts)
    total_percent: Decimal

    def fraction(self, name: str) -> Optional[float]:
        s, n = self.categories[name]
        return s / n if n else None

    def header(self) -> str:
        cols = [n.capitalize() for n in self._ordered()] + ["Total (%)"]
        return "  ".join(cols)

    def row(self) -> str:
        cells = [f"{s}/{n}" for s, n in (self.categories[k] for k in self._ordered())]
        return "  ".join(cells + [format_percent(self.total_percent)])

    def _ordered(self) -> List[str]:
        known = [k for k in CATEGORY_ORDER if k in self.categories]
        return known + sorted(k for k in self.categories if k not in CATEGORY_ORDER)

    def to_dict(self) -> dict:
        return {
            "categories": {k: {"successes": s, "attempts": n}
                           for k, (s, n) in ((k, self.categories[k]) for k in self._ordered())},
            "total_percent": float(self.total_percent),
        }


def accuracy(groups: Mapping[str, Sequence[Union[GradeReport, bool]]]) -> AccuracyReport:
    cats = {}
    for name, results in groups.items():
        ok = sum(1 for r in results if (r.success if isinstance(r, GradeReport) else bool(r)))
        cats[name] = (ok, len(results))
    total = sum(n for _, n in cats.values())
    if total == 0:
        raise EmptySuite("no attempts to score")
    return AccuracyReport(cats, round_percent(sum(s for s, _ in cats.values()), total))


def accuracy_from_counts(counts: Mapping[str, tuple]) -> AccuracyReport:
    """Score pre-tallied ``{category: (successes, attempts)}``."""
    groups = {k: [True] * s + [False] * (n - s) for k, (s, n) in counts.items()}
    return accuracy(groups)
