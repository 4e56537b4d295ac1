"""Reference policy for the stdin/stdout bridge.

Reads scene text and instruction text (one per line) from stdin and prints
the oracle plan text. Used to self-test the evaluation harness.
"""

import sys

from .codec import decode_scene, encode_plan, parse_instruction
from .errors import SpatialTokError
from .planner import PlannerConfig, plan
from .spatial import Scene


def solve(scene_text: str, instruction_text: str,
          cfg: PlannerConfig = PlannerConfig()) -> str:
    objects = decode_scene(scene_text.strip())
    task = parse_instruction(instruction_text.strip())
    return encode_plan(plan(Scene(objects, task), cfg))


def main(argv=None) -> int:
    lines = sys.stdin.read().splitlines()
    if len(lines) < 2:
        print("expected scene text and instruction text on stdin", file=sys.stderr)
        return 1
    try:
        print(solve(lines[0], lines[1]))
    except (SpatialTokError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
