"""Meaning-operators: region transforms standing for words and phrases.

Hedges and complement act pointwise on grid samples; qualitative adjectives
project a stored membership onto their axes; comparatives and verbs are
general transforms (coordinate rescales, shifts, reference-point
trajectories); "and"/"or" combine resulting regions; block composition lets
one operator rewrite another operator's internal parameter region.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .regions import (
    Context, ContextMismatchError, MembershipGrid, NonSeparableError, Region,
    build_grid, evaluate, lattice_product, nodes,
)


class OperatorError(ValueError):
    """Operator cannot be built or applied."""


# Pointwise family: every member maps [0,1] into [0,1].
HEDGES: dict[str, Callable] = {
    "very": lambda v: v * v,
    "somewhat": np.sqrt,
    "not": lambda v: 1.0 - v,
}

# Named coordinate rescales; k > 1 compresses the axis toward the origin.
RESCALES: dict[str, float] = {
    "faster": 2.0,
    "slower": 0.5,
}


# ---------------------------------------------------------------------------
# operator variants
# ---------------------------------------------------------------------------

class MeaningOperator:
    """Base region transform.  Operators are immutable; apply() is pure."""

    internal_context: Optional[Context] = None
    parameter_region: Optional[Region] = None

    @property
    def external_axes(self) -> tuple[str, ...]:
        return ()

    @property
    def name(self) -> str:
        return type(self).__name__.lower()

    def apply(self, region: Region) -> Region:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Pointwise(MeaningOperator):
    """A named hedge from the pointwise family, e.g. very(x) = x^2."""

    hedge: str
    target_axes: Optional[tuple[str, ...]] = None

    @property
    def name(self):
        return self.hedge

    @property
    def external_axes(self):
        return self.target_axes or ()

    def apply(self, region: Region) -> Region:
        if self.hedge == "not":
            return apply_not(region)
        return apply_hedge(self.hedge, region, self.target_axes)


@dataclass(frozen=True, eq=False)
class Projection(MeaningOperator):
    """Substitute a stored membership Y* for the factor on the target axes."""

    target_axes: tuple[str, ...]
    replacement: MembershipGrid
    label: str = ""

    @property
    def name(self):
        return self.label or f"project:{','.join(self.target_axes)}"

    @property
    def external_axes(self):
        return self.target_axes

    def apply(self, region: Region) -> Region:
        return apply_projection_adjective(region, self.target_axes,
                                          self.replacement)


@dataclass(frozen=True, eq=False)
class Rescale(MeaningOperator):
    """Coordinate rescale along one axis, e.g. "faster" compressing time."""

    axis: str
    k: float
    label: str = ""

    def __post_init__(self):
        if self.k <= 0:
            raise OperatorError(f"rescale factor {self.k} must be positive")

    @property
    def name(self):
        return self.label or f"rescale:{self.axis}*{self.k:g}"

    @property
    def external_axes(self):
        return (self.axis,)

    def apply(self, region: Region) -> Region:
        hit = region.factor_on(self.axis)
        if hit is None:
            return region           # unspecified along the axis: no effect
        grid, alpha = hit
        dim = grid.axis_ids.index(self.axis)
        n = grid.values.shape[dim]
        coords = np.minimum(1.0, nodes(n) * self.k)
        if grid.dims == 1:
            vals = np.interp(coords, nodes(n), grid.values)
        else:
            vals = _resample_along(grid.values, dim, coords)
        new_grid = MembershipGrid(grid.axis_ids, vals,
                                  source_points=grid.source_points)
        return _swap_factor(region, grid, new_grid, alpha)


@dataclass(frozen=True, eq=False)
class Shift(MeaningOperator):
    """Translate the membership pattern along one axis by a fixed offset."""

    axis: str
    delta: float
    fill: str = "zero"              # "zero" | "edge"
    label: str = ""

    @property
    def name(self):
        return self.label or f"shift:{self.axis}{self.delta:+g}"

    @property
    def external_axes(self):
        return (self.axis,)

    def apply(self, region: Region) -> Region:
        hit = region.factor_on(self.axis)
        if hit is None:
            return region
        grid, alpha = hit
        dim = grid.axis_ids.index(self.axis)
        n = grid.values.shape[dim]
        coords = nodes(n) - self.delta
        outside = (coords < 0.0) | (coords > 1.0)
        coords = np.clip(coords, 0.0, 1.0)
        if grid.dims == 1:
            vals = np.interp(coords, nodes(n), grid.values)
            if self.fill == "zero":
                vals = np.where(outside, 0.0, vals)
        else:
            vals = _resample_along(grid.values, dim, coords)
            if self.fill == "zero":
                mask_shape = [1, 1]
                mask_shape[dim] = n
                vals = np.where(outside.reshape(mask_shape), 0.0, vals)
        new_grid = MembershipGrid(grid.axis_ids, vals,
                                  source_points=grid.source_points)
        return _swap_factor(region, grid, new_grid, alpha)


@dataclass(frozen=True, eq=False)
class Trajectory(MeaningOperator):
    """Move a grid's reference points and rescale their memberships.

    Trajectories are evaluated at parameter 1, i.e. only the end point of
    each spline matters here; `moves` pairs each source point with its end
    coordinates and a membership scale.
    """

    target_axes: tuple[str, ...]
    moves: tuple            # ((end_coords...), membership_scale) per point
    label: str = ""

    @property
    def name(self):
        return self.label or f"trajectory:{','.join(self.target_axes)}"

    @property
    def external_axes(self):
        return self.target_axes

    def apply(self, region: Region) -> Region:
        hit = None
        for grid, alpha in region.factors:
            if set(grid.axis_ids) == set(self.target_axes):
                hit = (grid, alpha)
        if hit is None:
            raise NonSeparableError(
                f"no standalone factor over {self.target_axes}")
        grid, alpha = hit
        if not grid.source_points:
            raise OperatorError(
                "trajectory transform needs a grid built from reference points")
        if len(self.moves) != len(grid.source_points):
            raise OperatorError(
                f"{len(self.moves)} trajectories for "
                f"{len(grid.source_points)} reference points")
        moved = []
        for (end, scale), (_, m) in zip(self.moves, grid.source_points):
            moved.append((tuple(end), float(np.clip(m * scale, 0.0, 1.0))))
        new_grid = build_grid(moved, dims=grid.dims,
                              resolution=grid.values.shape[0],
                              axis_ids=grid.axis_ids)
        return _swap_factor(region, grid, new_grid, alpha)


@dataclass(frozen=True, eq=False)
class Conjunction(MeaningOperator):
    """Apply each operand and combine the resulting regions (and / or)."""

    kind: str                       # "and" | "or" | "but" (marker only)
    parts: tuple = ()

    @property
    def name(self):
        return f"{self.kind}({', '.join(p.name for p in self.parts)})"

    @property
    def external_axes(self):
        out = []
        for p in self.parts:
            out.extend(p.external_axes)
        return tuple(dict.fromkeys(out))

    def apply(self, region: Region) -> Region:
        if not self.parts:
            return region
        results = [p.apply(region) for p in self.parts]
        combined = results[0]
        for nxt in results[1:]:
            combined = apply_and(combined, nxt) if self.kind == "and" \
                else apply_or(combined, nxt)
        return combined


@dataclass(frozen=True, eq=False)
class Negation(MeaningOperator):
    """Complement of an operand's effect; bare complement when operand=None."""

    operand: Optional[MeaningOperator] = None

    @property
    def name(self):
        return f"not({self.operand.name})" if self.operand else "not"

    @property
    def external_axes(self):
        return self.operand.external_axes if self.operand else ()

    def apply(self, region: Region) -> Region:
        if self.operand is None:
            return apply_not(region)
        out = self.operand.apply(region)
        axes = set(self.operand.external_axes)
        if not axes:
            return apply_not(out)
        inner, rest = [], []
        for g, a in out.factors:
            gs = set(g.axis_ids)
            if gs <= axes:
                inner.append((g, a))
            elif gs & axes:
                raise NonSeparableError(
                    f"factor over {g.axis_ids} straddles the negated axes "
                    f"{sorted(axes)}")
            else:
                rest.append((g, a))
        if not inner:
            # nothing specified on those axes: complement of "one" is zero
            ids = tuple(a for a in out.context.axis_ids if a in axes)
            zero = MembershipGrid(ids[:2], np.zeros(
                (64,) if len(ids) == 1 else (64, 64)))
            return Region(out.context, tuple(rest) + ((zero, 1.0),), out.label)
        part = Region(out.context, tuple(inner))
        flipped = apply_not(part)
        return Region(out.context, tuple(rest) + flipped.factors, out.label)


@dataclass(frozen=True, eq=False)
class DirectSum(MeaningOperator):
    """Independent operators on disjoint axis subsets, applied side by side."""

    parts: tuple

    def __post_init__(self):
        seen = set()
        for p in self.parts:
            overlap = seen & set(p.external_axes)
            if overlap:
                raise OperatorError(
                    f"direct-sum parts overlap on axes {sorted(overlap)}")
            seen |= set(p.external_axes)

    @property
    def name(self):
        return " (+) ".join(p.name for p in self.parts)

    @property
    def external_axes(self):
        out = []
        for p in self.parts:
            out.extend(p.external_axes)
        return tuple(out)

    def apply(self, region: Region) -> Region:
        out = region
        for p in self.parts:
            out = p.apply(out)
        return out


@dataclass(frozen=True, eq=False)
class Composed(MeaningOperator):
    """A fixed sequence of operators applied first-to-last."""

    parts: tuple
    label: str = ""

    @property
    def name(self):
        return self.label or (" . ".join(p.name for p in reversed(self.parts)))

    @property
    def external_axes(self):
        out = []
        for p in self.parts:
            out.extend(p.external_axes)
        return tuple(dict.fromkeys(out))

    def apply(self, region: Region) -> Region:
        out = region
        for p in self.parts:
            out = p.apply(out)
        return out


@dataclass(frozen=True, eq=False)
class RegionMap(MeaningOperator):
    """Opaque region->region callable (test operators, restrictions)."""

    fn: Callable
    label: str = "map"
    axes: tuple[str, ...] = ()

    @property
    def name(self):
        return self.label

    @property
    def external_axes(self):
        return self.axes

    def apply(self, region: Region) -> Region:
        return self.fn(region)


# Builders derive an operator's concrete transform from its parameter region.
# Registered by name so parametric operators stay serializable.
BUILDERS: dict[str, Callable] = {}


def register_builder(name: str, fn: Callable) -> None:
    BUILDERS[name] = fn


@dataclass(frozen=True, eq=False)
class Parametric(MeaningOperator):
    """Word operator whose behavior depends on a fuzzy parameter region.

    `builder` maps (parameter_region, centroid-per-internal-axis) to the
    concrete transform.  Modifying words rewrite the parameter region via
    compose_block; the external behavior is re-derived on application.
    """

    word: str
    internal: Context
    parameters: Region
    builder: str
    axes: tuple[str, ...] = ()

    @property
    def name(self):
        return self.word

    @property
    def internal_context(self):
        return self.internal

    @property
    def parameter_region(self):
        return self.parameters

    @property
    def external_axes(self):
        return self.axes or tuple(self.internal.axis_ids)

    def concrete(self) -> tuple[MeaningOperator, dict]:
        params = {ax: centroid(self.parameters, ax)
                  for ax in self.internal.axis_ids}
        fn = BUILDERS.get(self.builder)
        if fn is None:
            raise OperatorError(f"unknown builder {self.builder!r}")
        return fn(self.parameters, params), params

    def apply(self, region: Region) -> Region:
        op, _ = self.concrete()
        return op.apply(region)


@dataclass(frozen=True, eq=False)
class PhraseOperator:
    """Ordered line of block-operators; phrase meaning {S_i} -> {R_i}."""

    line: tuple
    context: Optional[Context] = None

    def apply(self, source: Region) -> Region:
        return apply_phrase(self, source)

    def apply_with_steps(self, source: Region) -> list[Region]:
        steps = [source]
        for op in self.line:
            steps.append(op.apply(steps[-1]))
        return steps

    @property
    def name(self):
        return "[" + ", ".join(op.name for op in self.line) + "]"


# ---------------------------------------------------------------------------
# elementary applications
# ---------------------------------------------------------------------------

def flatten_region(region: Region, max_axes: int = 2) -> Region:
    """Collapse all factors into one joint grid with exponent 1.

    Exponents are baked into the sample values, so the region's membership
    is unchanged.  Joint spans of more than `max_axes` axes are refused.
    """
    if not region.factors:
        raise OperatorError("cannot flatten an empty (unspecified) region")
    if len(region.factors) == 1 and region.factors[0][1] == 1.0:
        return region
    touched = [a for a in region.context.axis_ids if a in region.covered_axes]
    if len(touched) > max_axes:
        raise NonSeparableError(
            f"joint grid over {len(touched)} axes exceeds the 2-axis "
            "factor storage model")
    _, vals = evaluate(region, axes=touched)
    return Region(region.context,
                  ((MembershipGrid(tuple(touched), vals), 1.0),), region.label)


def apply_not(region: Region) -> Region:
    """Complement: membership becomes 1 - membership (exact on samples)."""
    flat = flatten_region(region)
    grid, _ = flat.factors[0]
    return Region(region.context,
                  ((MembershipGrid(grid.axis_ids, 1.0 - grid.values), 1.0),),
                  region.label)


def apply_hedge(name: str, region: Region,
                target_axes: Optional[Sequence[str]] = None) -> Region:
    """Apply a registered pointwise hedge to factor samples.

    With target_axes the hedge touches only the factors inside that set
    (the word the hedge modifies); otherwise every factor.  Power hedges
    commute with the weighted product either way.
    """
    fn = HEDGES.get(name)
    if fn is None:
        raise OperatorError(f"unknown hedge {name!r}")
    if name == "not" and target_axes is None:
        return apply_not(region)
    targets = set(target_axes) if target_axes else None
    factors = []
    for grid, alpha in region.factors:
        if targets is None or set(grid.axis_ids) <= targets:
            grid = MembershipGrid(grid.axis_ids, fn(grid.values),
                                  source_points=grid.source_points)
        factors.append((grid, alpha))
    return Region(region.context, tuple(factors), region.label)


def _unify_contexts(f: Region, g: Region) -> tuple[Region, Region, Context]:
    fa, ga = set(f.context.axis_ids), set(g.context.axis_ids)
    if f.context.axis_ids == g.context.axis_ids:
        return f, g, f.context
    if ga <= fa:
        return f, Region(f.context, g.factors, g.label), f.context
    if fa <= ga:
        return Region(g.context, f.factors, f.label), g, g.context
    if not (fa & ga):
        ctx = Context(id=f"{f.context.id}+{g.context.id}",
                      axes=f.context.axes + g.context.axes)
        return (Region(ctx, f.factors, f.label),
                Region(ctx, g.factors, g.label), ctx)
    raise ContextMismatchError(
        f"contexts {f.context.id} and {g.context.id} overlap without nesting")


def _merge_components(factors) -> tuple:
    """Union factor lists, flattening axis-overlapping groups exactly.

    Within a connected component the values are combined as
    prod m_i^(a_i / total) with exponent `total`, preserving membership.
    Identical grids are grouped by exponent addition first, which keeps
    idempotence (and(f, f) = f) exact on samples.
    """
    groups: list[list] = []
    for grid, alpha in factors:
        hit = None
        for grp in groups:
            if any(set(grid.axis_ids) & set(g.axis_ids) for g, _ in grp):
                hit = grp
                break
        if hit is None:
            groups.append([(grid, alpha)])
        else:
            hit.append((grid, alpha))
    # transitive closure: merging may connect previously separate groups
    changed = True
    while changed:
        changed = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                ai = {a for g, _ in groups[i] for a in g.axis_ids}
                aj = {a for g, _ in groups[j] for a in g.axis_ids}
                if ai & aj:
                    groups[i].extend(groups.pop(j))
                    changed = True
                    break
            if changed:
                break

    out = []
    for grp in groups:
        if len(grp) == 1:
            out.append(grp[0])
            continue
        total = sum(a for _, a in grp)
        # group identical value arrays so exponents add before the power
        distinct: list = []
        for grid, alpha in grp:
            for entry in distinct:
                g0 = entry[0]
                if g0.axis_ids == grid.axis_ids and g0.values.shape == grid.values.shape \
                        and np.array_equal(g0.values, grid.values):
                    entry[1] += alpha
                    break
            else:
                distinct.append([grid, alpha])
        axes = tuple(dict.fromkeys(a for g, _ in grp for a in g.axis_ids))
        if len(axes) > 2:
            raise NonSeparableError(
                f"combining factors spans {len(axes)} axes; the 1D/2D "
                "storage model cannot hold the joint grid")
        res = {a: max(g.values.shape[g.axis_ids.index(a)]
                      for g, _ in grp if a in g.axis_ids) for a in axes}
        vals = lattice_product([(g, a / total) for g, a in distinct],
                               list(axes), res)
        out.append((MembershipGrid(axes, vals), total))
    return tuple(out)


def apply_and(f: Region, g: Region) -> Region:
    """Conjunction by geometric mean: h = sqrt(f * g)."""
    f, g, ctx = _unify_contexts(f, g)
    halved = [(grid, a / 2.0) for grid, a in f.factors]
    halved += [(grid, a / 2.0) for grid, a in g.factors]
    return Region(ctx, _merge_components(halved))


def apply_or(f: Region, g: Region) -> Region:
    """Disjunction: h = 1 - sqrt((1 - f)(1 - g)), as one joint grid."""
    f, g, ctx = _unify_contexts(f, g)
    touched = [a for a in ctx.axis_ids
               if a in set(f.covered_axes) | set(g.covered_axes)]
    if len(touched) > 2:
        raise NonSeparableError(
            f"'or' over {len(touched)} axes exceeds the 2-axis joint grid")
    if not touched:
        return Region(ctx, (), f.label)
    _, fv = evaluate(f, axes=touched)
    _, gv = evaluate(g, axes=touched)
    vals = 1.0 - np.sqrt((1.0 - fv) * (1.0 - gv))
    return Region(ctx, ((MembershipGrid(tuple(touched), vals), 1.0),))


def apply_but(source: Region, first, second) -> tuple[Region, Region]:
    """"But" blocks context interpenetration: returns (first(A), second(A)).

    Both results are kept as separate subspace snapshots by the caller; the
    second conjunct is interpreted as if the first one was not there.
    """
    return first.apply(source), second.apply(source)


def apply_projection_adjective(region: Region, target_axes: Sequence[str],
                               replacement: MembershipGrid) -> Region:
    """Replace the factor(s) on target_axes with Y*; others untouched."""
    targets = set(target_axes)
    unknown = targets - set(region.context.axis_ids)
    if unknown:
        raise OperatorError(
            f"projection axes {sorted(unknown)} not in context "
            f"{region.context.id}")
    kept, replaced_alpha = [], 0.0
    for grid, alpha in region.factors:
        inside = set(grid.axis_ids) & targets
        if not inside:
            kept.append((grid, alpha))
        elif set(grid.axis_ids) <= targets:
            replaced_alpha += alpha
        else:
            raise NonSeparableError(
                f"factor over {grid.axis_ids} straddles the adjective's "
                f"axes {sorted(targets)}; treat as interpretation ambiguity")
    alpha = replaced_alpha if replaced_alpha > 0 else 1.0
    kept.append((replacement, alpha))
    return Region(region.context, tuple(kept), region.label)


def apply_general_transform(region: Region, t: MeaningOperator) -> Region:
    """Apply a general transform (rescale, shift, or trajectory form)."""
    if not isinstance(t, (Rescale, Shift, Trajectory)):
        raise OperatorError(f"{t.name} is not a general transform")
    return t.apply(region)


def compose_block(modifier: MeaningOperator,
                  target: MeaningOperator) -> Parametric:
    """Let `modifier` rewrite `target`'s internal parameter region.

    The resulting block-operator re-derives its external transform from the
    new parameter region when applied (centroid defuzzification for scalar
    parameters; recorded per application for explainability).
    """
    if not isinstance(target, Parametric):
        raise OperatorError(
            f"{target.name} has no internal context to modify")
    mod_axes = set(modifier.external_axes)
    if mod_axes and not mod_axes <= set(target.internal.axis_ids):
        raise OperatorError(
            f"modifier {modifier.name} works on axes {sorted(mod_axes)} "
            f"outside {target.word}'s internal context")
    new_params = modifier.apply(target.parameters)
    return replace(target, parameters=new_params)


def apply_phrase(p: PhraseOperator, source: Region) -> Region:
    """Left-to-right fold of the operator line over the source region."""
    out = source
    for op in p.line:
        out = op.apply(out)
    return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def centroid(region: Region, axis_id: str) -> float:
    """Membership-weighted mean coordinate along one axis (defuzzification)."""
    hit = region.factor_on(axis_id)
    if hit is None:
        return 0.5
    grid, _ = hit
    dim = grid.axis_ids.index(axis_id)
    vals = grid.values if grid.dims == 1 else grid.values.mean(axis=1 - dim)
    xs = nodes(len(vals))
    total = float(np.sum(vals))
    if total == 0.0:
        return 0.5
    return float(np.sum(xs * vals) / total)


def _resample_along(values: np.ndarray, dim: int, coords: np.ndarray) -> np.ndarray:
    n = values.shape[dim]
    xs = nodes(n)
    if dim == 0:
        return np.stack([np.interp(coords, xs, values[:, j])
                         for j in range(values.shape[1])], axis=1)
    return np.stack([np.interp(coords, xs, values[i, :])
                     for i in range(values.shape[0])], axis=0)


def _swap_factor(region: Region, old: MembershipGrid, new: MembershipGrid,
                 alpha: float) -> Region:
    factors = tuple((new, alpha) if g is old else (g, a)
                    for g, a in region.factors)
    return Region(region.context, factors, region.label)
