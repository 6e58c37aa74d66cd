"""Contexts, axes, and fuzzy regions stored as products of low-dimensional grids.

A region over an N-axis context is a product of 1D/2D membership grids, each
raised to a positive exponent.  Axes not covered by any factor contribute
membership 1 ("unspecified").  All grid values live on a dyadic lattice
(multiples of 1/2^20) so that complement is an exact involution and
serialization is byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

QUANT = 1 << 20            # dyadic value lattice for stored grid samples
DEFAULT_RESOLUTION = 64
MAX_AXES = 50              # engine cap on context size
ISOLATED_SIGMA = 0.15      # Gaussian falloff for single-point grids, axis units
LATTICE_CAP = 1 << 20      # max joint samples materialized by stats/distance


class RegionError(ValueError):
    """Bad region construction or use."""


class NonSeparableError(RegionError):
    """A factor straddles an axis-set boundary and cannot be split off."""


class ContextMismatchError(RegionError):
    """Operands live in incompatible contexts."""


def quantize(values):
    """Clamp to [0, 1] and snap onto the dyadic value lattice."""
    arr = np.asarray(values, dtype=float)
    return np.round(np.clip(arr, 0.0, 1.0) * QUANT) / QUANT


def nodes(resolution: int) -> np.ndarray:
    """Sample positions of a grid axis: `resolution` points covering [0, 1]."""
    return np.linspace(0.0, 1.0, resolution)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Axis:
    """One property axis.  Derived axes carry the region that defines them."""

    id: str
    name: str = ""
    kind: str = "basic"                      # "basic" | "derived"
    reference: Optional["Region"] = None     # present iff kind == "derived"
    scale_note: str = ""

    def __post_init__(self):
        if self.kind not in ("basic", "derived"):
            raise RegionError(f"axis {self.id}: unknown kind {self.kind!r}")
        if (self.kind == "derived") != (self.reference is not None):
            raise RegionError(
                f"axis {self.id}: reference region present iff kind='derived'")
        if self.reference is not None:
            _check_reference_acyclic(self.id, self.reference)

    def __repr__(self):
        return f"Axis({self.id!r}, {self.kind})"


def _check_reference_acyclic(axis_id: str, region: "Region", seen=None):
    seen = set(seen or ()) | {axis_id}
    for ax in region.context.axes:
        if ax.id in seen:
            raise RegionError(f"axis {axis_id}: reference cycle through {ax.id}")
        if ax.reference is not None:
            _check_reference_acyclic(ax.id, ax.reference, seen)


@dataclass(frozen=True, eq=False)
class Context:
    """Ordered coordinate system of axes.  Immutable after construction."""

    id: str
    axes: tuple[Axis, ...]
    parent: Optional[str] = None

    def __post_init__(self):
        ids = [a.id for a in self.axes]
        if len(set(ids)) != len(ids):
            raise RegionError(f"context {self.id}: duplicate axis ids")
        if len(ids) > MAX_AXES:
            raise RegionError(
                f"context {self.id}: {len(ids)} axes exceeds cap of {MAX_AXES}")

    @property
    def axis_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.axes)

    def axis(self, axis_id: str) -> Axis:
        for a in self.axes:
            if a.id == axis_id:
                return a
        raise RegionError(f"context {self.id}: no axis {axis_id!r}")

    def __repr__(self):
        return f"Context({self.id!r}, axes={self.axis_ids})"


def contexts_compatible(a: Context, b: Context) -> bool:
    """Same coordinate system: identical object, id, or axis-id tuple."""
    return a is b or a.id == b.id or a.axis_ids == b.axis_ids


@dataclass(frozen=True, eq=False)
class MembershipGrid:
    """Sampled membership over 1 or 2 axes, values on the dyadic lattice."""

    axis_ids: tuple[str, ...]
    values: np.ndarray
    source_points: tuple = ()   # ((coords...), membership) used to build it

    def __post_init__(self):
        vals = quantize(self.values)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "axis_ids", tuple(self.axis_ids))
        if self.values.ndim != len(self.axis_ids) or self.values.ndim not in (1, 2):
            raise RegionError(
                f"grid over {self.axis_ids} has {self.values.ndim}-d values")

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.values.shape

    def sample(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        """Linear (1D) / bilinear (2D) interpolation at coords in [0, 1]."""
        if self.dims == 1:
            return np.interp(np.clip(coords[0], 0.0, 1.0),
                             nodes(self.values.shape[0]), self.values)
        return _bilinear(self.values, coords[0], coords[1])

    def sample_point(self, coords: Sequence[float]) -> float:
        return float(self.sample([np.asarray([c]) for c in coords])[0])

    def __repr__(self):
        return f"MembershipGrid({self.axis_ids}, {self.values.shape})"


def _bilinear(values: np.ndarray, u, v) -> np.ndarray:
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    n0, n1 = values.shape
    x = u * (n0 - 1)
    y = v * (n1 - 1)
    x0 = np.clip(np.floor(x).astype(int), 0, n0 - 2)
    y0 = np.clip(np.floor(y).astype(int), 0, n1 - 2)
    fx = x - x0
    fy = y - y0
    v00 = values[x0, y0]
    v01 = values[x0, y0 + 1]
    v10 = values[x0 + 1, y0]
    v11 = values[x0 + 1, y0 + 1]
    return (v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy)
            + v01 * (1 - fx) * fy + v11 * fx * fy)


@dataclass(frozen=True, eq=False)
class Region:
    """Fuzzy subset of a context's unit hypercube.

    membership(p) = prod_i m_i(p)^alpha_i over the factors; axes without a
    factor contribute 1.  A region with no factors is the empty (unspecified)
    region, equal to one everywhere.
    """

    context: Context
    factors: tuple[tuple[MembershipGrid, float], ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(
            (g, float(a)) for g, a in self.factors))
        covered = set()
        for grid, alpha in self.factors:
            if alpha <= 0:
                raise RegionError(f"factor over {grid.axis_ids}: alpha {alpha} <= 0")
            for ax in grid.axis_ids:
                if ax not in self.context.axis_ids:
                    raise RegionError(
                        f"factor axis {ax!r} not in context {self.context.id}")
                if ax in covered:
                    raise RegionError(f"axis {ax!r} covered by two factors")
                covered.add(ax)

    @property
    def covered_axes(self) -> tuple[str, ...]:
        out = []
        for grid, _ in self.factors:
            out.extend(grid.axis_ids)
        return tuple(out)

    def factor_on(self, axis_id: str):
        """The (grid, alpha) whose axis set contains axis_id, or None."""
        for grid, alpha in self.factors:
            if axis_id in grid.axis_ids:
                return grid, alpha
        return None

    def with_label(self, label: str) -> "Region":
        return replace(self, label=label)

    def __repr__(self):
        fs = ", ".join(f"{g.axis_ids}^{a:g}" for g, a in self.factors)
        return f"Region({self.context.id!r}, [{fs}])"


def make_region(context: Context, factors, label: str = "",
                normalize: bool = True) -> Region:
    """Build a region; exponents are scaled to sum to 1 unless disabled."""
    factors = [(g, float(a)) for g, a in factors]
    if normalize and factors:
        total = sum(a for _, a in factors)
        factors = [(g, a / total) for g, a in factors]
    return Region(context, tuple(factors), label)


def empty_region(context: Context, label: str = "") -> Region:
    """The unspecified region: membership one at every point."""
    return Region(context, (), label)


@dataclass(frozen=True, eq=False)
class Point:
    """A point of a context's unit hypercube."""

    context: Context
    coords: dict

    def __post_init__(self):
        if set(self.coords) != set(self.context.axis_ids):
            raise RegionError(
                f"point coords {sorted(self.coords)} do not cover context "
                f"axes {sorted(self.context.axis_ids)}")
        for ax, v in self.coords.items():
            if not 0.0 <= v <= 1.0:
                raise RegionError(f"coordinate {ax}={v} outside [0, 1]")


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------

def set_default_resolution(resolution: int) -> None:
    """Process-wide default samples per grid axis (CLI --grid-resolution)."""
    global DEFAULT_RESOLUTION
    if resolution < 4 or resolution > 512:
        raise RegionError(f"grid resolution {resolution} outside [4, 512]")
    DEFAULT_RESOLUTION = resolution


def build_grid(points, dims: int, resolution: Optional[int] = None,
               axis_ids: Optional[Sequence[str]] = None,
               kernel: str = "idw") -> MembershipGrid:
    """Interpolate reference points into a 1D/2D membership grid.

    points: iterable of (coords, membership) with coords a number (1D) or a
    pair (2D).  Kernels: "idw" (inverse squared distance, exact at the
    points) or "linear" (1D piecewise-linear).  A single isolated point
    becomes a Gaussian bump of width ISOLATED_SIGMA.  The grid sample
    nearest each reference point is snapped to the stated membership.
    """
    pts = []
    for idx, (coords, m) in enumerate(points):
        if np.isscalar(coords):
            coords = (float(coords),)
        coords = tuple(float(c) for c in coords)
        if len(coords) != dims:
            raise RegionError(f"point {idx}: expected {dims} coords, got {len(coords)}")
        for c in coords:
            if not 0.0 <= c <= 1.0:
                raise RegionError(f"point {idx}: coordinate {c} outside [0, 1]")
        if not 0.0 <= m <= 1.0:
            raise RegionError(f"point {idx}: membership {m} outside [0, 1]")
        pts.append((coords, float(m)))
    if not pts:
        raise RegionError("build_grid needs at least one reference point")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION
    if dims not in (1, 2):
        raise RegionError(f"dims must be 1 or 2, got {dims}")
    if axis_ids is None:
        axis_ids = ("x",) if dims == 1 else ("x", "y")

    if dims == 1:
        xs = nodes(resolution)
        if len(pts) == 1:
            (c,), m = pts[0]
            vals = m * np.exp(-((xs - c) / ISOLATED_SIGMA) ** 2 / 2.0)
        elif kernel == "linear":
            order = sorted(pts, key=lambda p: p[0][0])
            px = np.asarray([p[0][0] for p in order])
            pm = np.asarray([p[1] for p in order])
            vals = np.interp(xs, px, pm)
        elif kernel == "idw":
            vals = _idw(xs[:, None], np.asarray([p[0] for p in pts]),
                        np.asarray([p[1] for p in pts]))
        else:
            raise RegionError(f"unknown kernel {kernel!r}")
        vals = _snap_nearest(vals, pts, (resolution,))
    else:
        if kernel == "linear":
            raise RegionError("linear kernel is 1D only; use idw for 2D grids")
        xs = nodes(resolution)
        grid_pts = np.stack(np.meshgrid(xs, xs, indexing="ij"), axis=-1)
        flat = grid_pts.reshape(-1, 2)
        if len(pts) == 1:
            c = np.asarray(pts[0][0])
            m = pts[0][1]
            d2 = np.sum((flat - c) ** 2, axis=1)
            vals = (m * np.exp(-d2 / (2.0 * ISOLATED_SIGMA ** 2))).reshape(resolution, resolution)
        else:
            vals = _idw(flat, np.asarray([p[0] for p in pts]),
                        np.asarray([p[1] for p in pts])).reshape(resolution, resolution)
        vals = _snap_nearest(vals, pts, (resolution, resolution))

    return MembershipGrid(tuple(axis_ids), vals, source_points=tuple(pts))


def _idw(targets: np.ndarray, pts: np.ndarray, ms: np.ndarray) -> np.ndarray:
    d2 = np.sum((targets[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    w = 1.0 / (d2 + 1e-12)
    return w @ ms / np.sum(w, axis=1)


def _snap_nearest(vals: np.ndarray, pts, shape) -> np.ndarray:
    # Reference points pin their nearest sample; colliding points average.
    vals = np.array(vals, dtype=float)
    acc, cnt = {}, {}
    for coords, m in pts:
        idx = tuple(int(np.round(c * (n - 1))) for c, n in zip(coords, shape))
        acc[idx] = acc.get(idx, 0.0) + m
        cnt[idx] = cnt.get(idx, 0) + 1
    for idx, total in acc.items():
        vals[idx] = total / cnt[idx]
    return vals


def grid_from_function(fn: Callable, axis_ids: Sequence[str],
                       resolution: Optional[int] = None) -> MembershipGrid:
    """Sample fn over the unit square/interval into a grid (seed regions)."""
    axis_ids = tuple(axis_ids)
    if resolution is None:
        resolution = DEFAULT_RESOLUTION
    xs = nodes(resolution)
    if len(axis_ids) == 1:
        vals = np.asarray(fn(xs), dtype=float)
    elif len(axis_ids) == 2:
        u, v = np.meshgrid(xs, xs, indexing="ij")
        vals = np.asarray(fn(u, v), dtype=float)
    else:
        raise RegionError("grids span one or two axes")
    return MembershipGrid(axis_ids, vals)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _weighted_product(values, alphas) -> float:
    """prod v_i^a_i with equal values grouped before exponentiation.

    Grouping keeps the paper's level-set law exact: equal factor values with
    exponents summing to 1 reduce to v**1.0, which is exact in floats.
    """
    grouped: dict = {}
    for v, a in zip(values, alphas):
        if v == 0.0:
            return 0.0
        grouped[v] = grouped.get(v, 0.0) + a
    out = 1.0
    for v, a in grouped.items():
        out *= v ** a
    return float(min(out, 1.0))


def membership(region: Region, point: Point) -> float:
    """Degree of membership of a point, in [0, 1]."""
    if not contexts_compatible(region.context, point.context):
        raise ContextMismatchError(
            f"point in {point.context.id}, region in {region.context.id}")
    vals, alphas = [], []
    for grid, alpha in region.factors:
        coords = [point.coords[a] for a in grid.axis_ids]
        vals.append(grid.sample_point(coords))
        alphas.append(alpha)
    return _weighted_product(vals, alphas)


def lattice_axes(region: Region, axes: Optional[Sequence[str]] = None):
    """Axis ids and per-axis sample counts used for joint evaluation."""
    if axes is None:
        touched = set(region.covered_axes)
        axes = [a for a in region.context.axis_ids if a in touched]
    res = {}
    for ax in axes:
        r = DEFAULT_RESOLUTION
        hit = region.factor_on(ax)
        if hit is not None:
            grid, _ = hit
            r = grid.resolution[grid.axis_ids.index(ax)]
        res[ax] = r
    return list(axes), res


def _cap_resolutions(res: dict, cap: int = LATTICE_CAP) -> dict:
    res = dict(res)
    while int(np.prod(list(res.values()))) > cap:
        ax = max(res, key=lambda a: res[a])
        if res[ax] <= 8:
            break
        res[ax] = (res[ax] + 1) // 2
    return res


def lattice_product(factors, axes: Sequence[str], resolutions: dict) -> np.ndarray:
    """prod of factor grids^alpha over a dense lattice spanning `axes`.

    Factors whose axes fall outside `axes` are skipped.  Unlike Region,
    this accepts several factors covering the same axis (used when
    conjunctions collapse overlapping factors into one joint grid).
    """
    axes = list(axes)
    shape = tuple(resolutions[a] for a in axes)
    out = np.ones(shape)
    for grid, alpha in factors:
        if not all(a in axes for a in grid.axis_ids):
            continue
        coords = [nodes(resolutions[a]) for a in grid.axis_ids]
        if grid.dims == 1:
            vals = grid.sample([coords[0]])
        else:
            u, v = np.meshgrid(coords[0], coords[1], indexing="ij")
            vals = grid.sample([u, v])
        idx = [axes.index(a) for a in grid.axis_ids]
        if grid.dims == 2 and idx[0] > idx[1]:
            vals = vals.T
            idx = sorted(idx)
        perm_shape = [1] * len(axes)
        for i in idx:
            perm_shape[i] = shape[i]
        out = out * np.power(vals.reshape(perm_shape), alpha)
    return out


def evaluate(region: Region, axes: Optional[Sequence[str]] = None,
             resolutions: Optional[dict] = None) -> tuple[list, np.ndarray]:
    """Membership over a dense lattice spanning `axes` (default: covered axes).

    Returns (axis ids, array) with one array dimension per axis in order.
    Axes not covered by a factor contribute membership 1.
    """
    if axes is None:
        axes, res = lattice_axes(region)
    else:
        axes = list(axes)
        _, res = lattice_axes(region, axes)
    if resolutions:
        res.update(resolutions)
    res = _cap_resolutions(res)
    if not axes:
        return [], np.ones(())
    return axes, lattice_product(region.factors, axes, res)


# ---------------------------------------------------------------------------
# projection and axis expansion
# ---------------------------------------------------------------------------

def project(region: Region, keep_axes: Iterable[str]) -> Region:
    """Project onto a sub-context by discarding the factors outside it."""
    keep = set(keep_axes)
    unknown = keep - set(region.context.axis_ids)
    if unknown:
        raise RegionError(f"projection axes {sorted(unknown)} not in context")
    kept_factors = []
    for grid, alpha in region.factors:
        inside = set(grid.axis_ids) & keep
        if not inside:
            continue
        if inside != set(grid.axis_ids):
            raise NonSeparableError(
                f"factor over {grid.axis_ids} straddles the projection boundary")
        kept_factors.append((grid, alpha))
    axes = tuple(a for a in region.context.axes if a.id in keep)
    sub = Context(id=f"{region.context.id}|{'+'.join(a.id for a in axes)}",
                  axes=axes, parent=region.context.id)
    return Region(sub, tuple(kept_factors), region.label)


def expand_axis(region: Region, axis) -> Region:
    """Rewrite a derived axis via its reference region by function composition.

    The factor over the derived axis q with grid A and q's reference region
    X over axes (x1[, x2]) becomes a factor over (x1[, x2]) whose values are
    A(X(x1, x2)).
    """
    axis_id = axis.id if isinstance(axis, Axis) else axis
    ax = region.context.axis(axis_id)
    if ax.kind != "derived" or ax.reference is None:
        raise RegionError(f"axis {axis_id!r} is not derived / has no reference")
    hit = region.factor_on(axis_id)
    if hit is None or hit[0].dims != 1:
        raise RegionError(f"region has no standalone 1D factor over {axis_id!r}")
    grid, alpha = hit
    ref = ax.reference
    ref_axes = ref.context.axis_ids
    if len(ref_axes) > 2:
        raise RegionError(
            f"reference of {axis_id!r} spans {len(ref_axes)} axes; expand it "
            "one derived axis at a time")
    collision = set(ref_axes) & (set(region.context.axis_ids) - {axis_id})
    if collision:
        raise RegionError(
            f"reference axes {sorted(collision)} already present; give scaled "
            "copies distinct axis ids")

    _, ref_vals = evaluate(ref, axes=list(ref_axes))
    composed = np.interp(ref_vals, nodes(grid.values.shape[0]), grid.values)
    new_grid = MembershipGrid(ref_axes, composed)

    new_axes = []
    for a in region.context.axes:
        if a.id == axis_id:
            new_axes.extend(ref.context.axes)
        else:
            new_axes.append(a)
    new_ctx = Context(id=f"{region.context.id}|{axis_id}->{'+'.join(ref_axes)}",
                      axes=tuple(new_axes), parent=region.context.id)
    factors = [(g, a) for g, a in region.factors if g is not grid]
    factors.append((new_grid, alpha))
    return Region(new_ctx, tuple(factors), region.label)


def add_factor_renormalized(region: Region, grid: MembershipGrid,
                            alpha: float) -> Region:
    """Add a factor and rescale all exponents so they again sum to one."""
    factors = list(region.factors) + [(grid, float(alpha))]
    total = sum(a for _, a in factors)
    return Region(region.context,
                  tuple((g, a / total) for g, a in factors), region.label)


# ---------------------------------------------------------------------------
# statistics and distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionStats:
    max_membership: float
    coverage: float
    mean_membership: float


def region_stats(region: Region, tau: float = 0.9) -> RegionStats:
    """(max, coverage above tau, mean) over the joint factor sample grid.

    Max and mean factor exactly across independent factors; coverage uses
    the joint enumeration, stride-subsampled past LATTICE_CAP samples.
    """
    if not region.factors:
        return RegionStats(1.0, 1.0, 1.0)
    mx, mean = 1.0, 1.0
    joint = np.ones(1)
    for grid, alpha in region.factors:
        powered = np.power(grid.values.ravel(), alpha)
        mx *= float(np.max(powered))
        mean *= float(np.mean(powered))
        if joint.size * powered.size > LATTICE_CAP:
            stride = int(np.ceil(joint.size * powered.size / LATTICE_CAP))
            powered = powered[::stride]
        joint = np.multiply.outer(joint, powered).ravel()
    coverage = float(np.mean(joint > tau))
    return RegionStats(mx, coverage, mean)


def region_distance(a: Region, b: Region) -> float:
    """L-infinity distance of memberships over the joint sample lattice."""
    if not contexts_compatible(a.context, b.context):
        raise ContextMismatchError(
            f"regions in {a.context.id} vs {b.context.id}")
    touched = set(a.covered_axes) | set(b.covered_axes)
    axes = [x for x in a.context.axis_ids if x in touched]
    if not axes:
        return 0.0
    res = {}
    for ax in axes:
        ra = lattice_axes(a, [ax])[1][ax]
        rb = lattice_axes(b, [ax])[1][ax]
        res[ax] = max(ra, rb)
    res = _cap_resolutions(res)
    _, va = evaluate(a, axes=axes, resolutions=res)
    _, vb = evaluate(b, axes=axes, resolutions=res)
    return float(np.max(np.abs(va - vb)))


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def axis_to_doc(axis: Axis) -> dict:
    doc = {"id": axis.id, "name": axis.name, "kind": axis.kind,
           "scale_note": axis.scale_note}
    if axis.reference is not None:
        doc["reference"] = region_to_doc(axis.reference)
    return doc


def axis_from_doc(doc: dict) -> Axis:
    ref = doc.get("reference")
    return Axis(id=doc["id"], name=doc.get("name", ""),
                kind=doc.get("kind", "basic"),
                reference=region_from_doc(ref) if ref else None,
                scale_note=doc.get("scale_note", ""))


def context_to_doc(context: Context) -> dict:
    return {"id": context.id, "axes": [axis_to_doc(a) for a in context.axes],
            "parent": context.parent}


def context_from_doc(doc: dict) -> Context:
    return Context(id=doc["id"],
                   axes=tuple(axis_from_doc(a) for a in doc["axes"]),
                   parent=doc.get("parent"))


def region_to_doc(region: Region) -> dict:
    return {
        "context": context_to_doc(region.context),
        "factors": [{
            "axes": list(grid.axis_ids),
            "resolution": list(grid.values.shape),
            "values": grid.values.ravel().tolist(),
            "alpha": alpha,
            "source_points": [[list(c), m] for c, m in grid.source_points],
        } for grid, alpha in region.factors],
        "label": region.label,
    }


def region_from_doc(doc: dict) -> Region:
    ctx = context_from_doc(doc["context"])
    factors = []
    for f in doc["factors"]:
        shape = tuple(f["resolution"])
        vals = np.asarray(f["values"], dtype=float).reshape(shape)
        grid = MembershipGrid(tuple(f["axes"]), vals,
                              source_points=tuple((tuple(c), m)
                                                  for c, m in f.get("source_points", [])))
        factors.append((grid, f["alpha"]))
    return Region(ctx, tuple(factors), doc.get("label", ""))


def region_to_json(region: Region) -> str:
    return json.dumps(region_to_doc(region), indent=1)


def write_pgm(values: np.ndarray, path, comment: str = "") -> None:
    """Write a 1D/2D membership array as a plain portable graymap (P2)."""
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.ndim != 2:
        raise RegionError("graymap export is limited to 1D/2D arrays")
    gray = np.round(np.clip(arr, 0.0, 1.0) * 255).astype(int)
    lines = ["P2"]
    if comment:
        lines.append("# " + comment.replace("\n", " "))
    lines.append(f"{gray.shape[1]} {gray.shape[0]}")
    lines.append("255")
    for row in gray:
        lines.append(" ".join(str(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def grids_equal(a: MembershipGrid, b: MembershipGrid) -> bool:
    return (a.axis_ids == b.axis_ids and a.values.shape == b.values.shape
            and bool(np.all(a.values == b.values)))


def regions_equal(a: Region, b: Region) -> bool:
    """Value equality: same axis layout and identical factor samples."""
    if a.context.axis_ids != b.context.axis_ids or len(a.factors) != len(b.factors):
        return False
    bf = {g.axis_ids: (g, al) for g, al in b.factors}
    for g, al in a.factors:
        other = bf.get(g.axis_ids)
        if other is None or other[1] != al or not grids_equal(g, other[0]):
            return False
    return True
