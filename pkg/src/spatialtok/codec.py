"""Semantic-token text format for scenes, plans and episodes.

Grammar (version 1)::

    SCENE := "<scene>" OBJ* "</scene>"
    OBJ   := "<obj:" COLOR ":" SHAPE ":g" DD "_" DD ":l" D "_" D ":h" D{1,2} ">"
    PLAN  := "<plan>" STEP+ "</plan>"
    STEP  := "[g" DD "_" DD ",l" D "_" D ",z" INT ",r" INT ",p" INT ",y" INT ",o" D "]"

An episode is the four sections joined by newlines::

    <scene>...</scene>
    <instruction>...</instruction>
    <think>...</think>
    <plan>...</plan>

Decoding is strict. Malformed text raises :class:`ParseError` carrying the
offset; well-formed fields with bad values raise :class:`RangeError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .errors import ParseError, RangeError
from .spatial import (COLORS, SHAPES, ActionPlan, ActionStep, Color, HierCoord,
                      SceneObject, Shape, TaskKind, TaskSpec, WorldCoord)

GRAMMAR_VERSION = "1"
MAX_INT_DIGITS = 3

SECTIONS = (("scene", "<scene>", "</scene>"),
            ("instruction", "<instruction>", "</instruction>"),
            ("reasoning", "<think>", "</think>"),
            ("plan", "<plan>", "</plan>"))


@dataclass(frozen=True)
class TokenizedEpisode:
    scene_text: str
    instruction_text: str
    reasoning_text: str
    plan_text: str


# -- encoding ---------------------------------------------------------------

def encode_object(o: SceneObject) -> str:
    p = o.pos
    return (f"<obj:{o.color.value}:{o.shape.value}:g{p.r_g:02d}_{p.c_g:02d}"
            f":l{p.r_l}_{p.c_l}:h{o.height}>")


def encode_scene(scene) -> str:
    """Encode a Scene (or a plain sequence of objects), ordered by id."""
    objects = getattr(scene, "objects", scene)
    body = "".join(encode_object(o) for o in sorted(objects, key=lambda o: o.id))
    return f"<scene>{body}</scene>"


def encode_step(s: ActionStep) -> str:
    p = s.pos
    return (f"[g{p.r_g:02d}_{p.c_g:02d},l{p.r_l}_{p.c_l},z{s.z},r{s.roll},"
            f"p{s.pitch},y{s.yaw},o{s.gripper}]")


def encode_plan(plan: ActionPlan) -> str:
    return "<plan>" + "".join(encode_step(s) for s in plan.steps) + "</plan>"


def encode_episode(ep: TokenizedEpisode) -> str:
    fields = (ep.scene_text, ep.instruction_text, ep.reasoning_text, ep.plan_text)
    out = []
    for (name, open_tag, close_tag), text in zip(SECTIONS, fields):
        if name in ("instruction", "reasoning"):
            for tag in (t for _, o, c in SECTIONS for t in (o, c)):
                if tag in text:
                    raise ValueError(f"{name} text may not contain {tag!r}")
            out.append(f"{open_tag}{text}{close_tag}")
        else:
            out.append(text)
    return "\n".join(out)


# -- decoding ---------------------------------------------------------------

class _Reader:
    def __init__(self, text: str, base: int = 0):
        if not isinstance(text, str):
            raise ParseError(f"expected text, got {type(text).__name__}", base, "str")
        self.text = text
        self.pos = 0
        self.base = base

    def fail(self, expected: str, what: str = "unexpected input"):
        got = self.text[self.pos:self.pos + 12]
        msg = f"{what}: found {got!r}" if got else f"{what}: end of input"
        raise ParseError(msg, self.base + self.pos, expected)

    def peek(self, lit: str) -> bool:
        return self.text.startswith(lit, self.pos)

    def lit(self, lit: str) -> None:
        if not self.peek(lit):
            self.fail(repr(lit))
        self.pos += len(lit)

    def digits(self, lo: int, hi: int, field: str) -> Tuple[str, int]:
        start = self.pos
        end = start
        while end < len(self.text) and self.text[end] in "0123456789":
            end += 1
        n = end - start
        if n == 0:
            self.fail(f"digits for {field}")
        if n < lo or n > hi:
            if n > hi and hi >= MAX_INT_DIGITS:
                # syntactically an integer, just far too large
                self.pos = end
                raise RangeError(f"{field} value {self.text[start:end][:20]!r} out of range")
            self.fail(f"{lo}-{hi} digits for {field}" if lo != hi else f"{lo} digits for {field}")
        self.pos = end
        return self.text[start:end], start

    def integer(self, lo: int, hi: int, field: str) -> int:
        s, _ = self.digits(lo, hi, field)
        return int(s)

    def word(self, choices: Iterable[str], field: str) -> str:
        # longest match first so no choice shadows a longer one
        for c in sorted(choices, key=len, reverse=True):
            if self.text.startswith(c, self.pos):
                end = self.pos + len(c)
                if end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                    continue
                self.pos = end
                return c
        self.fail(f"a {field} name", f"unknown {field}")

    def end(self) -> None:
        if self.pos != len(self.text):
            self.fail("end of input", "trailing text")


_COLOR_NAMES = [c.value for c in COLORS]
_SHAPE_NAMES = [s.value for s in SHAPES]


def _hier(r_g, c_g, r_l, c_l) -> HierCoord:
    return HierCoord(r_g, c_g, r_l, c_l)


def _read_object(rd: _Reader, oid: int) -> SceneObject:
    rd.lit("<obj:")
    color = rd.word(_COLOR_NAMES, "color")
    rd.lit(":")
    shape = rd.word(_SHAPE_NAMES, "shape")
    rd.lit(":g")
    r_g = rd.integer(2, 2, "coarse row")
    rd.lit("_")
    c_g = rd.integer(2, 2, "coarse col")
    rd.lit(":l")
    r_l = rd.integer(1, 1, "local row")
    rd.lit("_")
    c_l = rd.integer(1, 1, "local col")
    rd.lit(":h")
    h = rd.integer(1, 2, "height")
    rd.lit(">")
    return SceneObject(oid, Color(color), Shape(shape), h, _hier(r_g, c_g, r_l, c_l))


def _read_scene(rd: _Reader) -> Tuple[SceneObject, ...]:
    rd.lit("<scene>")
    objects: List[SceneObject] = []
    while not rd.peek("</scene>"):
        if not rd.peek("<obj:"):
            rd.fail("'<obj:' or '</scene>'")
        objects.append(_read_object(rd, len(objects)))
    rd.lit("</scene>")
    return tuple(objects)


def _read_step(rd: _Reader) -> ActionStep:
    rd.lit("[g")
    r_g = rd.integer(2, 2, "coarse row")
    rd.lit("_")
    c_g = rd.integer(2, 2, "coarse col")
    rd.lit(",l")
    r_l = rd.integer(1, 1, "local row")
    rd.lit("_")
    c_l = rd.integer(1, 1, "local col")
    vals = []
    for tag, field in ((",z", "z"), (",r", "roll"), (",p", "pitch"), (",y", "yaw")):
        rd.lit(tag)
        vals.append(rd.integer(1, MAX_INT_DIGITS, field))
    rd.lit(",o")
    grip = rd.integer(1, 1, "gripper")
    rd.lit("]")
    return ActionStep(_hier(r_g, c_g, r_l, c_l), *vals, gripper=grip)


def _read_plan(rd: _Reader) -> ActionPlan:
    rd.lit("<plan>")
    steps = []
    while not rd.peek("</plan>"):
        if not rd.peek("[g"):
            rd.fail("'[g' or '</plan>'" if steps else "'[g'")
        steps.append(_read_step(rd))
    if not steps:
        rd.fail("at least one step", "empty plan")
    rd.lit("</plan>")
    return ActionPlan(tuple(steps))


def _strict(fn, text: str, base: int = 0):
    rd = _Reader(text, base)
    value = fn(rd)
    rd.end()
    return value


def decode_scene(text: str) -> Tuple[SceneObject, ...]:
    """Parse scene text into objects with ids assigned in order of appearance."""
    return _strict(_read_scene, text)


def decode_plan(text: str) -> ActionPlan:
    return _strict(_read_plan, text)


def decode_episode(text: str) -> TokenizedEpisode:
    """Split episode text into its four sections, validating each one."""
    if not isinstance(text, str):
        raise ParseError(f"expected text, got {type(text).__name__}", 0, "str")
    for name, open_tag, _ in SECTIONS:
        count = text.count(open_tag)
        if count == 0:
            raise ParseError(f"missing {name} section", 0, repr(open_tag))
        if count > 1:
            raise ParseError(f"duplicated {name} section", text.rfind(open_tag),
                             f"a single {open_tag!r}")

    pieces = []
    pos = 0
    for i, (name, open_tag, close_tag) in enumerate(SECTIONS):
        if i:
            if not text.startswith("\n", pos):
                raise ParseError(f"missing newline before {name} section", pos, "'\\n'")
            pos += 1
        if not text.startswith(open_tag, pos):
            raise ParseError(f"{name} section out of place", pos, repr(open_tag))
        end = text.find(close_tag, pos + len(open_tag))
        if end < 0:
            raise ParseError(f"unterminated {name} section", len(text), repr(close_tag))
        end += len(close_tag)
        pieces.append((name, open_tag, close_tag, pos, end))
        pos = end
    if pos != len(text):
        raise ParseError("trailing text after plan section", pos, "end of input")

    out = {}
    for name, open_tag, close_tag, start, end in pieces:
        chunk = text[start:end]
        if name == "scene":
            _strict(_read_scene, chunk, start)
            out[name] = chunk
        elif name == "plan":
            _strict(_read_plan, chunk, start)
            out[name] = chunk
        else:
            out[name] = chunk[len(open_tag):-len(close_tag)]
    return TokenizedEpisode(out["scene"], out["instruction"], out["reasoning"], out["plan"])


_COLOR_RE = "|".join(sorted(_COLOR_NAMES, key=len, reverse=True))
_SOLID_RE = "|".join(sorted((s.phrase for s in SHAPES), key=len, reverse=True))
_INSTRUCTION_PATTERNS = (
    (TaskKind.PLACEMENT, re.compile(
        rf"Pick up the (?P<c>{_COLOR_RE}) (?P<s>{_SOLID_RE}) and place it into "
        rf"the (?P<tc>{_COLOR_RE}) container")),
    (TaskKind.STACKING, re.compile(
        rf"Stack the (?P<c>{_COLOR_RE}) (?P<s>{_SOLID_RE}) on top of the "
        rf"(?P<tc>{_COLOR_RE}) (?P<ts>{_SOLID_RE})")),
    (TaskKind.MOVEMENT, re.compile(
        rf"Move the (?P<c>{_COLOR_RE}) (?P<s>{_SOLID_RE}) to "
        r"\[(?P<row>\d{1,3}), (?P<col>\d{1,3})\]")),
)


def _shape_from_phrase(phrase: str) -> Shape:
    return Shape(phrase.replace(" ", "_"))


def parse_instruction(text: str) -> TaskSpec:
    """Inverse of the instruction templates."""
    for kind, pattern in _INSTRUCTION_PATTERNS:
        m = pattern.fullmatch(text)
        if m is None:
            continue
        source = (Color(m["c"]), _shape_from_phrase(m["s"]))
        if kind is TaskKind.MOVEMENT:
            coord = WorldCoord(int(m["row"]), int(m["col"]))
            return TaskSpec(kind, source, target_coord=coord, instruction=text)
        ts = Shape.CONTAINER if kind is TaskKind.PLACEMENT else _shape_from_phrase(m["ts"])
        return TaskSpec(kind, source, target_ref=(Color(m["tc"]), ts), instruction=text)
    raise ParseError("instruction matches no task template", 0, "a task instruction")
