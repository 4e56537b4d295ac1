"""Hierarchical-grid tabletop scenes, oracle plans, token codec and grader."""

from .codec import (TokenizedEpisode, decode_episode, decode_plan, decode_scene,
                    encode_episode, encode_plan, encode_scene, parse_instruction)
from .errors import (AmbiguousReference, EmptySuite, GenerationExhausted,
                     IdMismatch, MissingRole, ParseError, RangeError,
                     UnresolvedReference)
from .planner import PlannerConfig, annotate, plan
from .scene_gen import GenConfig, generate_scene, sample_task, uniformity_report
from .sim import FailureCause, GradeReport, accuracy, run_episode
from .spatial import (ActionPlan, ActionStep, Color, HierCoord, Scene,
                      SceneObject, Shape, TaskKind, TaskSpec, WorldCoord,
                      euclidean_distance, hier_to_world, world_to_hier)

__version__ = "0.1.0"
