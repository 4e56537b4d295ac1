"""Command-line entry point.

Exit codes: 0 success, 1 usage or input error, 2 generation failure,
3 evaluation aborted.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Tuple

from . import codec
from .dataset import (DEFAULT_RATIOS, build_record, generate_dataset, plan_to_dict,
                      read_records, task_to_dict)
from .errors import (EmptySuite, GenerationExhausted, IdMismatch, OracleFailure,
                     ParseError, RangeError, SpatialTokError)
from .harness import (DEFAULT_TIMEOUT, evaluate, load_predictions,
                      make_benchmark_suite, oracle_policy_command)
from .oracle_policy import solve
from .planner import PlannerConfig
from .scene_gen import GenConfig
from .sim import grade_text
from .spatial import TaskKind

EXIT_OK, EXIT_USAGE, EXIT_GENERATION, EXIT_EVAL = 0, 1, 2, 3

log = logging.getLogger("spatialtok")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- config file ----------------------------------------------------------------

def _coerce(value: str, typ):
    if typ in (bool, "bool"):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"not a boolean: {value!r}")
    try:
        return typ(value)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


_TYPES = {"int": int, "float": float, "bool": bool}


def read_config(path) -> Tuple[Dict, Dict]:
    """Parse ``key = value`` lines into GenConfig and PlannerConfig overrides.

    Blank lines and ``#`` comments are ignored.
    """
    gen_fields = {f.name: f.type for f in dataclasses.fields(GenConfig)
                  if f.name not in ("seed", "task_kind")}
    plan_fields = {f.name: f.type for f in dataclasses.fields(PlannerConfig)}
    gen, planner = {}, {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key in gen_fields:
            gen[key] = _coerce(value, _TYPES[gen_fields[key]])
        elif key in plan_fields:
            planner[key] = _coerce(value, _TYPES[plan_fields[key]])
        else:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
    return gen, planner


def _configs(args) -> Tuple[GenConfig, PlannerConfig]:
    gen, planner = ({}, {}) if args.config is None else read_config(args.config)
    if getattr(args, "unique", False):
        gen["unique_objects"] = True
    try:
        return GenConfig(**gen), PlannerConfig(**planner)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_ratios(text: str) -> Dict[TaskKind, int]:
    parts = text.split(":")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise UsageError("--ratios must look like 100:120:40")
    return dict(zip(DEFAULT_RATIOS, map(int, parts)))


def _read_input(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


# -- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    gen, planner = _configs(args)
    ratios = DEFAULT_RATIOS if args.ratios is None else _parse_ratios(args.ratios)
    if args.total < 1:
        raise UsageError("--total must be >= 1")
    out = args.out or "dataset.jsonl"
    manifest = generate_dataset(args.total, out, ratios, args.seed, gen, planner, args.jobs)
    counts = " ".join(f"{k}={v}" for k, v in manifest["counts"].items())
    print(f"wrote {manifest['total']} records to {out} ({counts}) {manifest['digest']}")
    return EXIT_OK


def _print_report(report, out) -> None:
    print(report.table())
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def cmd_bench(args) -> int:
    _, planner = _configs(args)
    out = args.out or "suite.jsonl"
    records = make_benchmark_suite(args.seed, out, planner)
    print(f"wrote {len(records)} episodes to {out}")
    if args.policy:
        policy = oracle_policy_command() if args.policy == "oracle" else args.policy
        report = evaluate(records, policy=policy, timeout=args.timeout, jobs=args.jobs)
        _print_report(report, args.report)
    return EXIT_OK


def cmd_plan(args) -> int:
    _, planner = _configs(args)
    lines = _read_input(args.input).splitlines()
    if len(lines) < 2:
        raise UsageError("plan input needs scene text and instruction text, one per line")
    _emit(solve(lines[0], lines[1], planner), args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    gen, planner = _configs(args)
    if args.input:
        texts = [r.to_text() for r in read_records(args.input)]
    else:
        gen = dataclasses.replace(gen, task_kind=TaskKind(args.kind))
        texts = [build_record(0, args.seed, gen, planner).to_text()]
    _emit("\n\n".join(texts), args.out)
    return EXIT_OK


def cmd_decode(args) -> int:
    text = _read_input(args.input).strip()
    if "<instruction>" in text:
        ep = codec.decode_episode(text)
        objects = codec.decode_scene(ep.scene_text)
        task = codec.parse_instruction(ep.instruction_text)
        result = {
            "objects": scene_to_dict_objects(objects),
            "task": task_to_dict(task),
            "reasoning": ep.reasoning_text,
            "plan": plan_to_dict(codec.decode_plan(ep.plan_text)),
        }
    elif text.startswith("<scene>"):
        result = {"objects": scene_to_dict_objects(codec.decode_scene(text))}
    else:
        result = {"plan": plan_to_dict(codec.decode_plan(text))}
    _emit(json.dumps(result, indent=2), args.out)
    return EXIT_OK


def scene_to_dict_objects(objects):
    return [{"id": o.id, "color": o.color.value, "shape": o.shape.value,
             "height": o.height, "pos": [o.pos.r_g, o.pos.c_g, o.pos.r_l, o.pos.c_l]}
            for o in objects]


def cmd_simulate(args) -> int:
    records = read_records(args.input)
    preds = load_predictions(args.predictions) if args.predictions else None
    lines = []
    for r in records:
        text = r.tokenized.plan_text if preds is None else preds.get(r.id, "")
        grade = grade_text(r.scene, text)
        lines.append(json.dumps({"id": r.id, **grade.to_dict()}, separators=(",", ":")))
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    if (args.predictions is None) == (args.policy is None):
        raise UsageError("eval needs exactly one of --predictions or --policy")
    try:
        records = read_records(args.suite)
    except (OSError, ValueError) as exc:
        log.error("cannot read suite: %s", exc)
        return EXIT_EVAL
    if args.predictions:
        report = evaluate(records, predictions=load_predictions(args.predictions))
    else:
        policy = oracle_policy_command() if args.policy == "oracle" else args.policy
        report = evaluate(records, policy=policy, timeout=args.timeout, jobs=args.jobs)
    _print_report(report, args.out)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    glob = argparse.ArgumentParser(add_help=False)
    # SUPPRESS so a flag given before the subcommand is not reset by it
    glob.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--out", default=argparse.SUPPRESS)
    glob.add_argument("--config", default=argparse.SUPPRESS,
                      help="key = value file with GenConfig/PlannerConfig fields")

    p = _Parser(prog="spatialtok", description=__doc__.splitlines()[0],
                parents=[glob])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen", parents=[glob], help="generate a training dataset")
    s.add_argument("--total", type=int, required=True)
    s.add_argument("--ratios", help="placement:stacking:movement, default 100:120:40")
    s.add_argument("--unique", action="store_true", help="enforce object uniqueness")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("bench", parents=[glob], help="emit the 24-episode suite")
    s.add_argument("--policy", help="command to evaluate on the suite ('oracle' = bundled)")
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--report", help="write the evaluation report JSON here")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("plan", parents=[glob], help="oracle plan for scene + instruction text")
    s.add_argument("--input", help="file with scene text and instruction lines (default stdin)")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("encode", parents=[glob], help="print token text for episodes")
    s.add_argument("--input", help="dataset JSONL to encode; otherwise generate one episode")
    s.add_argument("--kind", choices=[k.value for k in TaskKind], default="placement")
    s.add_argument("--unique", action="store_true")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", parents=[glob], help="parse episode, scene or plan text to JSON")
    s.add_argument("--input", help="token text file (default stdin)")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", parents=[glob], help="grade plans against their scenes")
    s.add_argument("--input", required=True, help="dataset or suite JSONL")
    s.add_argument("--predictions", help="JSONL of {id, plan_text}; default: records' own plans")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("eval", parents=[glob], help="score predictions on a suite")
    s.add_argument("--suite", required=True)
    s.add_argument("--predictions")
    s.add_argument("--policy", help="external policy command ('oracle' = bundled)")
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("out", None), ("config", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"spatialtok: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, RangeError) as exc:
        print(f"spatialtok: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GenerationExhausted, OracleFailure) as exc:
        print(f"spatialtok: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (IdMismatch, EmptySuite) as exc:
        print(f"spatialtok: evaluation aborted: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except SpatialTokError as exc:
        print(f"spatialtok: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"spatialtok: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
