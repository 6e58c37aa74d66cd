"""Heuristics scoring how much sense an interpretation makes.

Each check yields a score in [0, 1]; the aggregate is their product, and a
flag is raised exactly when a check scores below one.  Thresholds live in
one config record so a session can be reproduced bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .regions import QUANT, Region, nodes, region_distance, region_stats

# stored memberships are quantized, so threshold equality means "within one
# lattice step": a grid holding "0.95" actually stores 0.95 - 2e-7
_EPS = 1.0 / QUANT

CHECKS = ("contradiction", "vacuity", "no_change", "vagueness", "mood")

FLAG_BY_CHECK = {
    "contradiction": "contradiction",
    "vacuity": "vacuous",
    "no_change": "no_change",
    "vagueness": "vagueness_increase",
    "mood": "mood_mismatch",
}


@dataclass(frozen=True)
class ComprehensionConfig:
    contradiction_level: float = 0.95   # the paper's "high enough" membership
    vacuity_level: float = 0.5          # membership counting as "belongs"
    vacuity_coverage: float = 0.95      # "almost all the points"
    no_change_distance: float = 0.01
    vagueness_ratio: float = 1.5
    vagueness_floor: float = 0.05       # skip ratio test for near-empty priors
    effector_level: float = 0.8
    effector_width: float = 0.25        # max fraction of the axis for a command
    mood_penalty: float = 0.5
    acceptance_threshold: float = 0.5
    spare_limit: int = 2

    def to_doc(self) -> dict:
        return asdict(self)

    @classmethod
    def from_doc(cls, doc: dict) -> "ComprehensionConfig":
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_doc(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ComprehensionConfig":
        with open(path) as fh:
            return cls.from_doc(json.load(fh))


@dataclass(frozen=True)
class EffectorResult:
    kind: str                      # "command" | "clarification" | "none"
    axis: Optional[str] = None
    value: Optional[float] = None
    runs: int = 0


@dataclass(frozen=True)
class ComprehensionReport:
    per_check_scores: dict
    flags: frozenset
    aggregate: float
    effector: EffectorResult = EffectorResult("none")

    @property
    def effector_command(self):
        if self.effector.kind == "command":
            return (self.effector.axis, self.effector.value)
        return None

    def to_doc(self) -> dict:
        return {
            "scores": {k: round(v, 6) for k, v in self.per_check_scores.items()},
            "flags": sorted(self.flags),
            "aggregate": round(self.aggregate, 6),
            "effector": asdict(self.effector),
        }


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------

def check_contradiction(result: Region,
                        cfg: ComprehensionConfig = ComprehensionConfig()) -> float:
    """No point with high membership suggests a contradiction."""
    mx = region_stats(result).max_membership
    if mx >= cfg.contradiction_level - _EPS:
        return 1.0
    return mx / cfg.contradiction_level


def check_vacuity(result: Region,
                  cfg: ComprehensionConfig = ComprehensionConfig()) -> float:
    """A region covering almost the whole context carries no information.

    "Belongs" is membership above vacuity_level (0.5): or(slow, fast) sits
    above one half everywhere, which is exactly the uninformative shape.
    """
    if not result.factors:
        return 1.0                # unspecified region is exempt
    v = region_stats(result, tau=cfg.vacuity_level).coverage
    if v <= cfg.vacuity_coverage:
        return 1.0
    return (1.0 - v) / (1.0 - cfg.vacuity_coverage)


def check_no_change(before: Region, after: Region,
                    cfg: ComprehensionConfig = ComprehensionConfig(),
                    step_distances: Sequence[float] = ()) -> float:
    """New information is expected to change the knowledge state.

    `step_distances` are per-operator distances for the non-head line steps,
    so "stand still faster" fails even though "stand still" changed things.
    """
    d = region_distance(before, after)
    if d < cfg.no_change_distance:
        return 0.0
    for sd in step_distances:
        if sd < cfg.no_change_distance:
            return 0.0
    return 1.0


def check_vagueness(before: Region, after: Region, reset_phrase: bool = False,
                    cfg: ComprehensionConfig = ComprehensionConfig()) -> float:
    """Instructions should usually sharpen knowledge, not blur it."""
    if reset_phrase:
        return 1.0
    b = region_stats(before).mean_membership
    a = region_stats(after).mean_membership
    if b < cfg.vagueness_floor:
        return 1.0                # near-empty prior: ratio is meaningless
    if a <= cfg.vagueness_ratio * b:
        return 1.0
    return min(1.0, b / a)


def check_mood(mood: str, result: Region, effector_axes: Sequence[str] = (),
               cfg: ComprehensionConfig = ComprehensionConfig(),
               effector: Optional[EffectorResult] = None) -> float:
    """Imperatives over an effector-bound context should be actionable."""
    if mood != "imperative":
        return 1.0
    bound = [a for a in effector_axes if a in result.context.axis_ids]
    if not bound:
        return 1.0
    if effector is None:
        effector = extract_effector(result, effector_axes, cfg)
    if effector.kind == "none":
        return cfg.mood_penalty
    return 1.0


def extract_effector(result: Region, effector_axes: Sequence[str],
                     cfg: ComprehensionConfig = ComprehensionConfig()) -> EffectorResult:
    """Turn an actionable region into a command on the bound axis.

    The level set at effector_level on the axis factor must be one run no
    wider than effector_width of the axis for a command; two or more runs
    ask for a clarification ("very fast or very slowly").
    """
    for axis in effector_axes:
        if axis not in result.context.axis_ids:
            continue
        hit = result.factor_on(axis)
        if hit is None or hit[0].dims != 1:
            continue
        grid, _ = hit
        level = grid.values >= cfg.effector_level
        if not np.any(level):
            continue
        idx = np.flatnonzero(level)
        runs = np.split(idx, np.flatnonzero(np.diff(idx) != 1) + 1)
        if len(runs) >= 2:
            return EffectorResult("clarification", axis=axis, runs=len(runs))
        run = runs[0]
        width = len(run) / len(grid.values)
        if width > cfg.effector_width:
            continue
        xs = nodes(len(grid.values))[run]
        weights = grid.values[run]
        value = float(np.sum(xs * weights) / np.sum(weights))
        return EffectorResult("command", axis=axis, value=value, runs=1)
    return EffectorResult("none")


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

def score_interpretation(before: Region, after: Region, mood: str,
                         effector_axes: Sequence[str] = (),
                         reset_phrase: bool = False,
                         step_distances: Sequence[float] = (),
                         cfg: ComprehensionConfig = ComprehensionConfig(),
                         ) -> ComprehensionReport:
    """Run every check, aggregate by product, flag scores below one."""
    effector = EffectorResult("none")
    if mood == "imperative" and any(
            a in after.context.axis_ids for a in effector_axes):
        effector = extract_effector(after, effector_axes, cfg)
    scores = {
        "contradiction": check_contradiction(after, cfg),
        "vacuity": check_vacuity(after, cfg),
        "no_change": check_no_change(before, after, cfg, step_distances),
        "vagueness": check_vagueness(before, after, reset_phrase, cfg),
        "mood": check_mood(mood, after, effector_axes, cfg, effector),
    }
    flags = {FLAG_BY_CHECK[k] for k, v in scores.items() if v < 1.0}
    if effector.kind == "clarification":
        flags.add("needs_clarification")
    aggregate = 1.0
    for v in scores.values():
        aggregate *= v
    return ComprehensionReport(per_check_scores=scores,
                               flags=frozenset(flags),
                               aggregate=aggregate, effector=effector)


def all_pass_report() -> ComprehensionReport:
    """Report for meta phrases (reset) that are exempt from the checks."""
    return ComprehensionReport(
        per_check_scores={k: 1.0 for k in CHECKS},
        flags=frozenset(), aggregate=1.0)
