import pytest

from spatialtok.spatial import (Color, Scene, SceneObject, Shape, TaskKind,
                                TaskSpec, WorldCoord, world_to_hier)


def obj(i, color, shape, height, row, col):
    return SceneObject(i, Color(color), Shape(shape), height,
                       world_to_hier(WorldCoord(row, col)))


# far-away filler so hand-built scenes reach the 4-object minimum
FILLER = [("silver", "moon", 3, 90, 5), ("olive", "star", 7, 95, 95),
          ("teal", "cube", 2, 5, 90)]


def build_scene(specs, task, seed=0, filler=True):
    rows = list(specs) + (FILLER[:max(0, 4 - len(specs))] if filler else [])
    objects = [obj(i, *row) for i, row in enumerate(rows)]
    return Scene(tuple(objects), task, seed)


def stacking_task(src, tgt):
    return TaskSpec(TaskKind.STACKING, (Color(src[0]), Shape(src[1])),
                    target_ref=(Color(tgt[0]), Shape(tgt[1])))


def placement_task(src, color):
    return TaskSpec(TaskKind.PLACEMENT, (Color(src[0]), Shape(src[1])),
                    target_ref=(Color(color), Shape.CONTAINER))


def movement_task(src, row, col):
    return TaskSpec(TaskKind.MOVEMENT, (Color(src[0]), Shape(src[1])),
                    target_coord=WorldCoord(row, col))


@pytest.fixture
def stack_scene():
    return build_scene([("red", "cube", 5, 13, 9), ("blue", "cylinder", 8, 40, 40)],
                       stacking_task(("red", "cube"), ("blue", "cylinder")))


@pytest.fixture
def place_scene():
    return build_scene([("red", "cube", 5, 13, 9), ("blue", "container", 12, 60, 30)],
                       placement_task(("red", "cube"), "blue"))


@pytest.fixture
def move_scene():
    return build_scene([("green", "star", 9, 20, 20)],
                       movement_task(("green", "star"), 76, 65))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
