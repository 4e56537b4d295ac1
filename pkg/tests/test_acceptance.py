"""Exit criteria for the package, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
"""

import dataclasses
import itertools
import json
import math
import re
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from spatialtok.codec import (decode_episode, decode_plan,
                              decode_scene, encode_episode, encode_plan, encode_scene)
from spatialtok.dataset import build_record, read_records
from spatialtok.errors import ParseError, RangeError
from spatialtok.planner import plan
from spatialtok.scene_gen import (GenConfig, derive_seed, generate_scene,
                                  quadrant_ratio, uniformity_report)
from spatialtok.sim import (FailureCause, accuracy_from_counts, grade_text,
                            run_episode)
from spatialtok.spatial import (ActionPlan, ActionStep, HierCoord, TaskKind,
                                WorldCoord, hier_to_world, world_to_hier)

from conftest import ACCEPTANCE_LINES

KINDS = list(TaskKind)


@contextmanager
def criterion(number, name, budget=None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"
    except BaseException as exc:
        ACCEPTANCE_LINES.append(f"FAIL  {number:>2}. {name}: {exc}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  {number:>2}. {name} ({time.perf_counter() - start:.2f}s)")
    print(ACCEPTANCE_LINES[-1])


def cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "spatialtok", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_01_coordinate_bijection():
    with criterion(1, "coordinate bijection over 10,000 + 10,000 cells", budget=1.0):
        bad = 0
        for row, col in itertools.product(range(100), range(100)):
            w = WorldCoord(row, col)
            bad += hier_to_world(world_to_hier(w)) != w
        for t in itertools.product(range(25), range(25), range(4), range(4)):
            h = HierCoord(*t)
            bad += world_to_hier(hier_to_world(h)) != h
        assert bad == 0


def _random_plan(rng):
    steps = []
    for _ in range(int(rng.integers(1, 12))):
        g = rng.integers(0, 25, 2)
        l = rng.integers(0, 4, 2)
        steps.append(ActionStep(HierCoord(int(g[0]), int(g[1]), int(l[0]), int(l[1])),
                                *(int(v) for v in rng.integers(0, 121, 4)),
                                gripper=int(rng.integers(0, 2))))
    return ActionPlan(tuple(steps))


def test_02_codec_round_trip():
    with criterion(2, "codec round-trip x1000 each + >=100 mutation cases", budget=10.0):
        rng = np.random.default_rng(2)
        for i in range(1000):
            scene = generate_scene(GenConfig(seed=i, task_kind=KINDS[i % 3]))
            text = encode_scene(scene)
            assert decode_scene(text) == scene.objects
            assert encode_scene(decode_scene(text)) == text

            p = _random_plan(rng)
            text = encode_plan(p)
            assert decode_plan(text) == p and encode_plan(decode_plan(text)) == text

            rec = build_record(i, derive_seed(2, i), GenConfig(task_kind=KINDS[i % 3]))
            text = encode_episode(rec.tokenized)
            assert decode_episode(text) == rec.tokenized
            assert encode_episode(decode_episode(text)) == text

        rec = build_record(0, 77, GenConfig(task_kind=TaskKind.STACKING))
        full = rec.to_text()
        mutations = [full[:k] for k in range(0, len(full), max(1, len(full) // 80))]
        mutations += [
            re.sub(r":h\d+>", ":h31>", full, count=1),
            full.replace(",o1]", ",o2]", 1),
            full.replace(",z61,", ",z121,", 1),
            full.replace(",r0,", ",r999,", 1),
            full.replace(":g", ":g25", 1),
            full.replace(",l", ",l4", 1),
            full.replace("</plan>", ""),
            full.replace("<think>", ""),
            full + "\n" + full.splitlines()[-1],
        ]
        mutations += [rec.tokenized.scene_text[:k] for k in range(len(rec.tokenized.scene_text))][:40]
        mutations += [rec.tokenized.plan_text[:k] for k in range(len(rec.tokenized.plan_text))][:40]
        assert len(mutations) >= 100
        structured = 0
        for m in mutations:
            for fn in (decode_episode, decode_scene, decode_plan):
                try:
                    fn(m)
                except (ParseError, RangeError):
                    structured += 1
                    break
                except Exception as exc:  # anything else is a crash
                    pytest.fail(f"{fn.__name__} crashed on {m[:40]!r}: {exc!r}")
            else:
                pytest.fail(f"mutation decoded without error: {m[:60]!r}")
        assert structured == len(mutations)


def test_03_oracle_soundness():
    with criterion(3, "oracle soundness 1000/1000 per task kind", budget=30.0):
        for kind in KINDS:
            wins = 0
            for i in range(1000):
                scene = generate_scene(GenConfig(seed=derive_seed(3, i), task_kind=kind))
                wins += run_episode(scene, plan(scene)).success
            assert wins == 1000, f"{kind.value}: {wins}/1000"


def test_04_constraint_satisfaction():
    with criterion(4, "constraint satisfaction on 1000 scenes (+1000 with uniqueness)", budget=10.0):
        for unique in (False, True):
            for i in range(1000):
                scene = generate_scene(GenConfig(seed=derive_seed(4, i), task_kind=KINDS[i % 3],
                                                 unique_objects=unique))
                objs = scene.objects
                assert 4 <= len(objs) <= 7
                for o in objs:
                    assert 1 <= o.height <= 30
                    w = o.world
                    assert 0 <= w.row < 100 and 0 <= w.col < 100
                    assert 0 <= o.pos.r_g < 25 and 0 <= o.pos.c_g < 25
                    assert 0 <= o.pos.r_l < 4 and 0 <= o.pos.c_l < 4
                for a, b in itertools.combinations(objs, 2):
                    d = math.sqrt((a.world.row - b.world.row) ** 2 + (a.world.col - b.world.col) ** 2)
                    assert d >= 4.0
                if unique:
                    refs = [o.ref for o in objs]
                    assert len(set(refs)) == len(refs)


def test_05_determinism(tmp_path):
    with criterion(5, "gen --total 1000 --seed 42 twice is byte-identical"):
        outs = []
        for run in ("a", "b"):
            d = tmp_path / run
            d.mkdir()
            res = cli("gen", "--total", "1000", "--seed", "42", "--out", "data.jsonl", cwd=d)
            assert res.returncode == 0, res.stderr
            outs.append(((d / "data.jsonl").read_bytes(),
                         json.loads((d / "data.manifest.json").read_text())))
        assert outs[0][0] == outs[1][0]
        assert outs[0][1]["digest"] == outs[1][1]["digest"]
        assert outs[0][1] == outs[1][1]


@pytest.mark.parametrize("picking, stacking, expected", [
    (10, 6, 66.67), (6, 3, 37.5), (5, 2, 29.17)])
def test_06_metric_reproduction(picking, stacking, expected):
    with criterion(6, f"table arithmetic {picking}/12 + {stacking}/12 -> {expected}%"):
        rep = accuracy_from_counts({"picking": (picking, 12), "stacking": (stacking, 12)})
        assert abs(float(rep.total_percent) - expected) <= 0.005
        assert rep.row() == f"{picking}/12  {stacking}/12  {expected:g}%"


def _shift_cell(pos):
    w = hier_to_world(pos)
    col = w.col + 1 if w.col < 99 else w.col - 1
    return world_to_hier(WorldCoord(w.row, col))


def test_07_perturbation_sensitivity():
    with criterion(7, "perturbations of 300 oracle plans all fail"):
        for n, kind in enumerate(KINDS):
            for i in range(100):
                scene = generate_scene(GenConfig(seed=derive_seed(7 + n, i), task_kind=kind))
                p = plan(scene).steps
                assert run_episode(scene, ActionPlan(p)).success

                no_grasp = ActionPlan(p[:2] + p[3:])
                assert not run_episode(scene, no_grasp).success

                text = encode_plan(ActionPlan(p))
                for mangled in (text[:-1], text.replace("<plan>", "<pln>"),
                                text.replace(",o0]", ",o5]", 1), text.replace(",z", ",", 1)):
                    g = grade_text(scene, mangled)
                    assert g.failure_cause is FailureCause.PARSE_ERROR

            for i in range(150 if kind is not TaskKind.MOVEMENT else 0):
                scene = generate_scene(GenConfig(seed=derive_seed(17 + n, i), task_kind=kind))
                p = list(plan(scene).steps)
                for k in (4, 5, 6):  # the whole placement pose moves one fine cell
                    p[k] = dataclasses.replace(p[k], pos=_shift_cell(p[k].pos))
                assert not run_episode(scene, ActionPlan(tuple(p))).success


def test_08_spatial_uniformity():
    with criterion(8, "corner-quadrant occupancy max/min <= 1.3 over 5000 scenes"):
        scenes = [generate_scene(GenConfig(seed=derive_seed(8, i), task_kind=KINDS[i % 3]))
                  for i in range(5000)]
        ratio = quadrant_ratio(uniformity_report(scenes))
        assert ratio <= 1.3, f"ratio {ratio:.3f}"


def test_09_ratio_fidelity(tmp_path):
    with criterion(9, "gen --total 260 yields 100/120/40"):
        res = cli("gen", "--total", "260", "--out", str(tmp_path / "d.jsonl"))
        assert res.returncode == 0, res.stderr
        kinds = [r.kind for r in read_records(tmp_path / "d.jsonl")]
        assert (kinds.count(TaskKind.PLACEMENT), kinds.count(TaskKind.STACKING),
                kinds.count(TaskKind.MOVEMENT)) == (100, 120, 40)


def test_10_benchmark_suite(tmp_path):
    with criterion(10, "bench emits 12+12 episodes; oracle policy scores 100% via bridge", budget=30.0):
        res = cli("bench", "--out", "suite.jsonl", "--policy", "oracle",
                  "--report", "report.json", cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        lines = (tmp_path / "suite.jsonl").read_text().splitlines()
        assert len(lines) == 24
        kinds = [json.loads(l)["task"]["kind"] for l in lines]
        assert kinds.count("placement") == 12 and kinds.count("stacking") == 12
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["categories"] == {"picking": {"successes": 12, "attempts": 12},
                                        "stacking": {"successes": 12, "attempts": 12}}
        assert report["total_percent"] == 100.0
        assert "12/12  12/12  100%" in res.stdout
