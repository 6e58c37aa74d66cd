"""Blurring, operator restriction, the abstracting-operator test, and the
describe-with-words search.

An operator B on a subspace Y abstracts a family {A_i} when, for every probe
region x, some small coordinate shift dy (|dy| < delta) makes B(P_y(x)) and
P_y(A_i(x)) agree within epsilon on membership.  The describe search composes
pool operators so the test operator's output mass moves toward goal
satisfaction 1, then refines abstract steps into concrete sequences that
pass the abstracting test.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .regions import (
    Axis, Context, MembershipGrid, Region, RegionError, empty_region,
    evaluate, grid_from_function, nodes, project,
)
from .operators import (
    Composed, DirectSum, MeaningOperator, OperatorError, Pointwise,
    RegionMap, centroid,
)


class NoDescription(RuntimeError):
    """The describe search could not improve toward the goal."""


# ---------------------------------------------------------------------------
# blurring and restriction
# ---------------------------------------------------------------------------

def _box_blur_1d(vals: np.ndarray, half: int) -> np.ndarray:
    if half <= 0:
        return vals
    kernel = np.ones(2 * half + 1) / (2 * half + 1)
    padded = np.pad(vals, half, mode="reflect")
    return np.convolve(padded, kernel, mode="valid")


def blur(region: Region, radius: float) -> Region:
    """Convolve every factor grid with a normalized box kernel.

    `radius` is in axis units; reflect padding keeps constants constant.
    """
    if radius < 0:
        raise RegionError(f"blur radius {radius} must be >= 0")
    if radius == 0 or not region.factors:
        return region
    factors = []
    for grid, alpha in region.factors:
        vals = np.asarray(grid.values, dtype=float)
        if grid.dims == 1:
            half = int(round(radius * (len(vals) - 1)))
            vals = _box_blur_1d(vals, half)
        else:
            half0 = int(round(radius * (vals.shape[0] - 1)))
            half1 = int(round(radius * (vals.shape[1] - 1)))
            vals = np.apply_along_axis(_box_blur_1d, 0, vals, half0)
            vals = np.apply_along_axis(_box_blur_1d, 1, vals, half1)
        factors.append((MembershipGrid(grid.axis_ids, vals), alpha))
    return Region(region.context, tuple(factors), region.label)


@dataclass(frozen=True, eq=False)
class Blur(MeaningOperator):
    """Pool operator that reduces boundary definition accuracy."""

    radius: float
    label: str = "blur"

    @property
    def name(self):
        return self.label

    def apply(self, region: Region) -> Region:
        return blur(region, self.radius)


def restrict(op: MeaningOperator, subspace: Sequence[str]) -> MeaningOperator:
    """Restriction of an operator to a subspace: project after applying.

    Direct sums shed the parts that fall outside the subspace.
    """
    subspace = tuple(subspace)
    if not subspace:
        raise OperatorError("restriction to an empty subspace")
    if isinstance(op, DirectSum):
        parts = tuple(p for p in op.parts
                      if set(p.external_axes) <= set(subspace))
        if len(parts) == 1:
            return parts[0]
        return DirectSum(parts)

    def fn(region: Region) -> Region:
        out = op.apply(region)
        keep = [a for a in out.context.axis_ids if a in subspace]
        return project(out, keep)

    return RegionMap(fn, label=f"{op.name}|{','.join(subspace)}",
                     axes=subspace)


# ---------------------------------------------------------------------------
# probe sets
# ---------------------------------------------------------------------------

_PROBE_SHAPES = (
    ("const0", lambda x: np.zeros_like(x)),
    ("const05", lambda x: np.full_like(x, 0.5)),
    ("const1", lambda x: np.ones_like(x)),
    ("ramp-up", lambda x: x),
    ("ramp-down", lambda x: 1.0 - x),
    ("bump-low", lambda x: np.exp(-(((x - 0.3) / 0.15) ** 2))),
    ("bump-high", lambda x: np.exp(-(((x - 0.7) / 0.15) ** 2))),
    ("checker", lambda x: ((x * 4).astype(int) % 2).astype(float)),
)


def default_probe_set(context: Context) -> tuple[Region, ...]:
    """Eight structured regions standing in for the forall-x quantifier:
    constants 0 / 0.5 / 1, two ramps, two bumps, one checker.

    Multi-axis contexts get separable probes (one 1D factor per axis) so
    projections and per-axis transforms stay well defined on them.
    """
    axes = context.axis_ids
    probes = []
    if len(axes) == 1:
        for name, fn in _PROBE_SHAPES:
            grid = grid_from_function(fn, axes[:1])
            probes.append(Region(context, ((grid, 1.0),), f"probe-{name}"))
        return tuple(probes)
    a, b = axes[0], axes[1]
    layouts = [
        ("const0", (("const0", a),)),
        ("const05", (("const05", a),)),
        ("const1", (("const1", a),)),
        ("ramp-a", (("ramp-up", a),)),
        ("ramp-b", (("ramp-up", b),)),
        ("bump-low", (("bump-low", a), ("bump-low", b))),
        ("bump-high", (("bump-high", a), ("bump-high", b))),
        ("checker", (("checker", a), ("checker", b))),
    ]
    shape_by_name = dict(_PROBE_SHAPES)
    for name, parts in layouts:
        factors = tuple(
            (grid_from_function(shape_by_name[shape], (axis,)), 1.0)
            for shape, axis in parts)
        probes.append(Region(context, factors, f"probe-{name}"))
    return tuple(probes)


# ---------------------------------------------------------------------------
# the abstracting-operator test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbstractionParams:
    delta: float = 0.05       # parameter-accuracy tolerance
    epsilon: float = 0.05     # membership-accuracy tolerance
    blur_radius: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0) or not (0.0 < self.epsilon < 1.0):
            raise ValueError("delta and epsilon must lie in (0, 1)")
        if self.blur_radius < 0:
            raise ValueError("blur radius must be >= 0")


def _shift_lattice(vals: np.ndarray, axes: Sequence[str], dy: Sequence[float]
                   ) -> np.ndarray:
    """Resample a lattice at coordinates shifted by dy (edge clamped)."""
    out = vals
    for dim, d in enumerate(dy):
        if d == 0.0:
            continue
        n = out.shape[dim]
        x = np.clip(nodes(n) - d, 0.0, 1.0) * (n - 1)
        i0 = np.clip(np.floor(x).astype(int), 0, n - 2)
        frac = x - i0
        v0 = np.take(out, i0, axis=dim)
        v1 = np.take(out, i0 + 1, axis=dim)
        shape = [1] * out.ndim
        shape[dim] = n
        frac = frac.reshape(shape)
        out = v0 * (1.0 - frac) + v1 * frac
    return out


def _project_to(region: Region, y_axes) -> Region:
    keep = [a for a in region.context.axis_ids if a in y_axes]
    return project(region, keep)


def is_abstracting(candidate: MeaningOperator, family, y_axes,
                   params: AbstractionParams,
                   probes: Sequence[Region]) -> tuple[bool, float]:
    """Check the abstracting inequality over a finite probe set.

    For every family member and probe, search a rigid shift dy over the
    delta-grid (step delta/4, strictly inside the delta ball) minimizing
    the sup membership distance; the verdict is whether the worst such
    residual stays below epsilon.
    """
    if not probes:
        raise OperatorError("probe set must be nonempty")
    y_axes = tuple(y_axes)
    extra = set(candidate.external_axes) - set(y_axes)
    if extra:
        raise OperatorError(
            f"operator works on axes {sorted(extra)} outside the subspace "
            f"{list(y_axes)}")
    step = params.delta / 4.0
    offsets = [k * step for k in range(-3, 4)]
    shift_grid = list(itertools.product(offsets, repeat=len(y_axes)))
    res = {a: 64 for a in y_axes}

    worst = 0.0
    for member in family:
        for probe in probes:
            lhs = candidate.apply(_project_to(probe, y_axes))
            rhs = _project_to(member.apply(probe), y_axes)
            _, lv = evaluate(lhs, axes=list(y_axes), resolutions=res)
            _, rv = evaluate(rhs, axes=list(y_axes), resolutions=res)
            best = np.inf
            for dy in shift_grid:
                moved = _shift_lattice(rv, y_axes, dy)
                dist = float(np.max(np.abs(lv - moved)))
                if dist < best:
                    best = dist
            worst = max(worst, best)
    return worst < params.epsilon, worst


# ---------------------------------------------------------------------------
# describing with words
# ---------------------------------------------------------------------------

def jaccard(a: Region, b: Region, axes=None) -> float:
    """Membership overlap Sum(min)/Sum(max) in [0, 1]; 1 iff identical."""
    if axes is None:
        touched = set(a.covered_axes) | set(b.covered_axes)
        axes = [x for x in a.context.axis_ids if x in touched]
    if not axes:
        return 1.0
    res = {x: 64 for x in axes}
    _, va = evaluate(a, axes=list(axes), resolutions=res)
    _, vb = evaluate(b, axes=list(axes), resolutions=res)
    hi = float(np.sum(np.maximum(va, vb)))
    if hi == 0.0:
        return 1.0
    return float(np.sum(np.minimum(va, vb)) / hi)


GOAL_AXIS = Axis("goal", name="goal satisfaction degree")
GOAL_CONTEXT = Context("goal-space", (GOAL_AXIS,))


def similarity_test_operator(target: Region, width: float = 0.1,
                             label: str = "goal-test") -> RegionMap:
    """Test operator G: the goal region is a bump at the overlap with the
    target, so mass near one means the description reached the target."""

    def fn(region: Region) -> Region:
        sigma = jaccard(region, target)
        grid = grid_from_function(
            lambda p: np.exp(-(((p - sigma) / width) ** 2)), ("goal",))
        return Region(GOAL_CONTEXT, ((grid, 1.0),),
                      label=f"goal@{sigma:.3f}")

    return RegionMap(fn, label=label, axes=())


@dataclass(frozen=True)
class DescribeProblem:
    source_context: Context
    source_region: Region
    pool: tuple                         # ((operator, abstraction_level), ...)
    test_operator: MeaningOperator      # G: F -> one-axis goal context
    goal_threshold: float = 0.1
    beam_width: int = 4
    max_depth: int = 6
    patience: int = 2                   # beam depths without improvement
    abstraction: AbstractionParams = AbstractionParams()
    probes: Optional[tuple] = None


@dataclass
class DescribeResult:
    ops: tuple                          # application order
    names: list                         # composition order (outermost first)
    goal_value: float                   # guide metric (goal-axis centroid)
    goal_membership: float              # membership at goal = 1
    met: bool
    nodes_visited: int
    goal_means: list
    refinements: list
    trace: list


def _goal_state(problem: DescribeProblem, region: Region):
    g = problem.test_operator.apply(region)
    axis = g.context.axis_ids[0]
    guide = centroid(g, axis)
    _, vals = evaluate(g, axes=[axis], resolutions={axis: 64})
    top = float(vals[-1])
    low_mask = nodes(64) <= 0.5
    low = float(np.max(vals[low_mask]))
    met = top >= 1.0 - problem.goal_threshold and low <= problem.goal_threshold
    return guide, top, met


def _eligible(problem: DescribeProblem, level: int) -> list:
    """Operators of one abstraction level whose axes touch the problem.

    Axis-free operators (hedges, blur, test maps) are always eligible;
    the paper's filter keeps only operators with parameters from the
    source / final contexts or axes already bound by the composition.
    """
    bound = set(problem.source_context.axis_ids)
    out = []
    for op, lv in problem.pool:
        if lv != level:
            continue
        axes = set(op.external_axes)
        if not axes or axes & bound:
            out.append(op)
    return out


@dataclass
class _BeamNode:
    ops: tuple
    region: Region
    guide: float


def describe(problem: DescribeProblem) -> DescribeResult:
    """Greedy beam search over the most abstract operators, then refinement.

    Extensions are ranked by the goal-axis centroid of G(D(A)); the
    incumbent best only advances on strict improvement, which keeps the
    recorded goal-mean sequence strictly increasing.
    """
    if not problem.pool:
        raise NoDescription("empty operator pool")
    top_level = max(lv for _, lv in problem.pool)
    ops = _eligible(problem, top_level)
    if not ops:
        raise NoDescription("no pool operator touches the problem contexts")

    A = problem.source_region
    base_guide, base_top, base_met = _goal_state(problem, A)
    incumbent = _BeamNode((), A, base_guide)
    incumbent_top, incumbent_met = base_top, base_met
    goal_means = [base_guide]
    trace = [{"stage": "start", "goal_mean": round(base_guide, 6)}]
    visited = 0
    beam = [incumbent]
    strikes = 0

    for depth in range(1, problem.max_depth + 1):
        extensions = []
        for node in beam:
            for op in ops:
                visited += 1
                try:
                    region2 = op.apply(node.region)
                except (RegionError, OperatorError) as exc:
                    trace.append({"stage": f"depth{depth}", "op": op.name,
                                  "error": str(exc)})
                    continue
                guide, top, met = _goal_state(problem, region2)
                extensions.append((_BeamNode(node.ops + (op,), region2, guide),
                                   top, met))
        if not extensions:
            break
        extensions.sort(key=lambda e: -e[0].guide)
        beam = [e[0] for e in extensions[:problem.beam_width]]
        best, best_top, best_met = extensions[0]
        trace.append({"stage": f"depth{depth}",
                      "best": [o.name for o in best.ops],
                      "goal_mean": round(best.guide, 6)})
        if best.guide > incumbent.guide:
            incumbent, incumbent_top, incumbent_met = best, best_top, best_met
            goal_means.append(best.guide)
            strikes = 0
        else:
            strikes += 1
        if incumbent_met or strikes >= problem.patience:
            break

    if not incumbent.ops:
        raise NoDescription("beam search found no improving composition")

    # refinement toward concrete operators
    comp = [(op, _level_of(problem.pool, op)) for op in incumbent.ops]
    refinements = []
    while any(lv > 0 for _, lv in comp) and not incumbent_met:
        comp, notes, visited = refine_composition(
            comp, problem.pool, problem.abstraction,
            problem.probes or default_probe_set(problem.source_context),
            visited)
        refinements.extend(notes)
        if not any(n.get("replaced") for n in notes):
            break
        region = A
        for op, _ in comp:
            region = op.apply(region)
        guide, top, met = _goal_state(problem, region)
        incumbent = _BeamNode(tuple(op for op, _ in comp), region, guide)
        incumbent_top, incumbent_met = top, met
        trace.append({"stage": "refined",
                      "ops": [op.name for op, _ in comp],
                      "goal_mean": round(guide, 6)})
        if guide > goal_means[-1]:
            goal_means.append(guide)

    return DescribeResult(
        ops=incumbent.ops,
        names=[op.name for op in reversed(incumbent.ops)],
        goal_value=incumbent.guide,
        goal_membership=incumbent_top,
        met=incumbent_met,
        nodes_visited=visited,
        goal_means=goal_means,
        refinements=refinements,
        trace=trace)


def _level_of(pool, op) -> int:
    for p, lv in pool:
        if p is op:
            return lv
    return 0


def refine_composition(comp, pool, params: AbstractionParams, probes,
                       visited: int = 0, max_seq: int = 3):
    """Replace abstract elements by less-abstract sequences that pass the
    abstracting test; elements with no passing sequence are kept."""
    out, notes = [], []
    for op, level in comp:
        if level == 0:
            out.append((op, level))
            continue
        lower = [(p, lv) for p, lv in pool if lv < level]
        axes = set(op.external_axes)
        cands = [(p, lv) for p, lv in lower
                 if not axes or not set(p.external_axes)
                 or set(p.external_axes) & axes]
        y_axes = tuple(op.external_axes) or tuple(
            probes[0].context.axis_ids)
        found = None
        for length in range(1, max_seq + 1):
            for seq in itertools.product(cands, repeat=length):
                visited += 1
                composed = Composed(tuple(p for p, _ in reversed(seq)))
                try:
                    ok, residual = is_abstracting(op, [composed], y_axes,
                                                  params, probes)
                except (RegionError, OperatorError):
                    continue
                if ok:
                    found = (seq, composed, residual)
                    break
            if found:
                break
        if found is None:
            out.append((op, level))
            notes.append({"element": op.name, "replaced": False,
                          "note": "no concrete sequence found; kept as-is"})
        else:
            seq, composed, residual = found
            for p, lv in reversed(seq):
                out.append((p, lv))
            notes.append({"element": op.name, "replaced": True,
                          "sequence": [p.name for p, _ in seq],
                          "residual": round(residual, 6)})
    return out, notes, visited


# ---------------------------------------------------------------------------
# wrappers: describing concepts and failures
# ---------------------------------------------------------------------------

def lexicon_pool(store, exclude=(), level_map=None) -> tuple:
    """Line-applicable operators from the lexicon as a describe pool."""
    level_map = level_map or {}
    pool = []
    for word, entry in store.entries.items():
        if word in exclude:
            continue
        if entry.pos not in ("qual_adjective", "adverb_hedge", "negation",
                             "comp_adjective"):
            continue
        for sense in entry.senses:
            pool.append((sense.operator, level_map.get(word, 0)))
    return tuple(pool)


def describe_region(region: Region, store, exclude=(),
                    goal_threshold: float = 0.1) -> Optional[list]:
    """Describe a region in words; None when no description is found."""
    ctx = region.context
    problem = DescribeProblem(
        source_context=ctx, source_region=empty_region(ctx),
        pool=lexicon_pool(store, exclude=exclude),
        test_operator=similarity_test_operator(region),
        goal_threshold=goal_threshold)
    try:
        return describe(problem).names
    except NoDescription:
        return None


def describe_own_concept(word: str, store,
                         goal_threshold: float = 0.1) -> DescribeResult:
    """Describe a lexicon word with the word itself excluded from the pool."""
    entry = store.entry(word)
    if entry is None:
        raise NoDescription(f"unknown word {word!r}")
    sense = entry.senses[0]
    axes = tuple(sense.operator.external_axes) or sense.internal_axes
    ctx = store.context_for(axes, f"{word}-describe")
    source = empty_region(ctx)
    target = sense.operator.apply(source)
    problem = DescribeProblem(
        source_context=ctx, source_region=source,
        pool=lexicon_pool(store, exclude=(word,)),
        test_operator=similarity_test_operator(target),
        goal_threshold=goal_threshold)
    result = describe(problem)
    if not result.met:
        raise NoDescription(
            f"no composition reaches {word!r}'s own region "
            f"(best goal membership {result.goal_membership:.3f})")
    return result


@dataclass(frozen=True)
class FailureCandidate:
    label: str
    failing_check: Optional[str]
    passing_region: Optional[Region]    # last prefix that passed the checks
    failing_region: Region              # first region where checks fail


def describe_failure(candidates: Sequence[FailureCandidate], store) -> list:
    """Interpretation-crisis report: describe, for every failing candidate,
    the largest passing fragment and the smallest failing one."""
    report = []
    for cand in candidates:
        if not cand.failing_check:
            continue
        passing = None
        if cand.passing_region is not None:
            passing = describe_region(cand.passing_region, store)
        failing = describe_region(cand.failing_region, store)
        report.append({
            "candidate": cand.label,
            "failing_check": cand.failing_check,
            "passing_description": passing or ["(nothing interpreted yet)"],
            "failing_description": failing or ["(no description found)"],
        })
    return report
