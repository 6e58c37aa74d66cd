"""Word -> operator lexicon, context hierarchy, and persistence.

The seed vocabulary covers the working examples: fast, slow, very, not,
and/or/but, walk, stand-still, faster, drive, moderately-paced, plus the
spatial words northeast/southwest and the nouns car, boat, robot.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .regions import (
    Axis, Context, MembershipGrid, Region, RegionError, context_from_doc,
    context_to_doc, grid_from_function, empty_region, region_from_doc,
    region_to_doc,
)
from .operators import (
    BUILDERS, Composed, Conjunction, DirectSum, MeaningOperator, Negation,
    OperatorError, Parametric, Pointwise, Projection, Rescale, Shift,
    Trajectory, apply_or, register_builder,
)

POS_TAGS = ("qual_adjective", "comp_adjective", "noun", "verb",
            "adverb_hedge", "conjunction", "negation", "quantifier_stub")


class LexiconFormatError(ValueError):
    """Malformed lexicon document; message carries the offending path."""


@dataclass(frozen=True, eq=False)
class Sense:
    """One meaning of a word: operator + the axes of its internal context."""

    operator: MeaningOperator
    internal_axes: tuple[str, ...] = ()
    tags: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class LexiconEntry:
    word: str
    pos: str
    senses: tuple[Sense, ...]

    def __post_init__(self):
        if self.pos not in POS_TAGS:
            raise LexiconFormatError(f"word {self.word!r}: unknown pos {self.pos!r}")
        if not self.senses:
            raise LexiconFormatError(f"word {self.word!r}: needs at least one sense")


@dataclass
class ContextHierarchy:
    """Per-narrative context records with named hierarchical indexes."""

    nodes: dict = field(default_factory=dict)          # ctx id -> Context
    indexes: dict = field(default_factory=lambda: {
        "objects": {}, "actions": {}, "time_intervals": {},
        "locations": {}, "narrative_parts": {}})
    creation_order: list = field(default_factory=list)

    def add(self, context: Context, index: str, key: str) -> None:
        if context.parent and context.parent not in self.nodes \
                and context.parent != "root":
            raise RegionError(f"parent {context.parent!r} unknown")
        self.nodes[context.id] = context
        self.indexes.setdefault(index, {})[key] = context.id
        self.creation_order.append(context.id)

    def find(self, index: str, key: str) -> Optional[Context]:
        ctx_id = self.indexes.get(index, {}).get(key)
        return self.nodes.get(ctx_id) if ctx_id else None

    def depth(self, ctx_id: str) -> int:
        steps, cur = 0, self.nodes.get(ctx_id)
        while cur is not None and cur.parent and cur.parent in self.nodes:
            cur = self.nodes[cur.parent]
            steps += 1
            if steps > len(self.nodes):
                raise RegionError("context hierarchy has a parent cycle")
        return steps

    def clone(self) -> "ContextHierarchy":
        return ContextHierarchy(
            nodes=dict(self.nodes),
            indexes={k: dict(v) for k, v in self.indexes.items()},
            creation_order=list(self.creation_order))


class LexiconStore:
    """Axes, named regions, and word entries.  Reads are pure."""

    def __init__(self):
        self.axes: dict[str, Axis] = {}
        self.regions: dict[str, Region] = {}
        self.entries: dict[str, LexiconEntry] = {}
        self.inflections: dict[str, str] = {}
        self.multiwords: dict[tuple, str] = {}
        self.keywords = {"is", "if"}

    # -- axes ---------------------------------------------------------------

    def add_axis(self, axis: Axis) -> Axis:
        self.axes[axis.id] = axis
        return axis

    def axis(self, axis_id: str) -> Axis:
        if axis_id not in self.axes:
            raise RegionError(f"unknown axis {axis_id!r}")
        return self.axes[axis_id]

    def context_for(self, axis_ids, ctx_id: str, parent: str = "root") -> Context:
        return Context(id=ctx_id, axes=tuple(self.axis(a) for a in axis_ids),
                       parent=parent)

    # -- words --------------------------------------------------------------

    def add_entry(self, word: str, pos: str, senses, merge_similar: bool = True):
        """Register senses; similar senses (same internal axes) merge into
        one fuzzier operator by pointwise max of their parameter regions."""
        senses = list(senses)
        if word in self.entries:
            senses = list(self.entries[word].senses) + senses
        if merge_similar:
            senses = _merge_similar(senses)
        self.entries[word] = LexiconEntry(word, pos, tuple(senses))
        return self.entries[word]

    def lookup(self, word: str) -> list[Sense]:
        entry = self.entries.get(word)
        return list(entry.senses) if entry else []

    def entry(self, word: str) -> Optional[LexiconEntry]:
        return self.entries.get(word)

    def lemma(self, token: str) -> str:
        return self.inflections.get(token, token)

    def known(self, lemma: str) -> bool:
        return lemma in self.entries or lemma in self.keywords \
            or lemma == "forget-everything"

    # -- persistence ----------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "axes": [ _axis_doc(a) for a in self.axes.values() ],
            "contexts": [],
            "regions": [ {"id": k, **region_to_doc(r)}
                         for k, r in self.regions.items() ],
            "words": [ {
                "word": e.word, "pos": e.pos,
                "senses": [ {
                    "operator": operator_to_doc(s.operator),
                    "internal_axes": list(s.internal_axes),
                    "tags": list(s.tags),
                } for s in e.senses ],
            } for e in self.entries.values() ],
            "inflections": self.inflections,
            "multiwords": [[list(k), v] for k, v in self.multiwords.items()],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_doc(), fh, indent=1)

    @classmethod
    def from_doc(cls, doc: dict) -> "LexiconStore":
        store = cls()
        for i, adoc in enumerate(_need(doc, "axes", "")):
            ref = adoc.get("reference")
            store.add_axis(Axis(
                id=_need(adoc, "id", f"axes[{i}]"),
                name=adoc.get("name", ""), kind=adoc.get("kind", "basic"),
                reference=region_from_doc(ref) if ref else None,
                scale_note=adoc.get("scale_note", "")))
        for i, rdoc in enumerate(doc.get("regions", [])):
            store.regions[_need(rdoc, "id", f"regions[{i}]")] = region_from_doc(rdoc)
        for i, wdoc in enumerate(_need(doc, "words", "")):
            word = _need(wdoc, "word", f"words[{i}]")
            pos = _need(wdoc, "pos", f"words[{i}]")
            senses = []
            for j, sdoc in enumerate(wdoc.get("senses", [])):
                where = f"words[{i}].senses[{j}]"
                op = operator_from_doc(_need(sdoc, "operator", where), store)
                senses.append(Sense(op, tuple(sdoc.get("internal_axes", ())),
                                    tuple(sdoc.get("tags", ()))))
            if pos not in POS_TAGS:
                raise LexiconFormatError(f"words[{i}]: unknown pos {pos!r}")
            store.add_entry(word, pos, senses, merge_similar=False)
        store.inflections = dict(doc.get("inflections", {}))
        store.multiwords = {tuple(k): v for k, v in doc.get("multiwords", [])}
        return store

    @classmethod
    def load(cls, path) -> "LexiconStore":
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_doc(doc)


def _need(doc, key, where):
    if key not in doc:
        raise LexiconFormatError(f"{where or 'document'}: missing {key!r}")
    return doc[key]


def _axis_doc(axis: Axis) -> dict:
    doc = {"id": axis.id, "name": axis.name, "kind": axis.kind,
           "scale_note": axis.scale_note}
    if axis.reference is not None:
        doc["reference"] = region_to_doc(axis.reference)
    return doc


def _merge_similar(senses) -> list:
    """Merge parametric senses whose internal contexts share all axes."""
    merged: list[Sense] = []
    for sense in senses:
        hit = None
        if isinstance(sense.operator, Parametric):
            for k, other in enumerate(merged):
                if isinstance(other.operator, Parametric) \
                        and set(other.internal_axes) == set(sense.internal_axes) \
                        and other.operator.builder == sense.operator.builder:
                    hit = k
                    break
        if hit is None:
            merged.append(sense)
            continue
        a, b = merged[hit].operator, sense.operator
        merged[hit] = Sense(
            replace(a, parameters=_pointwise_max(a.parameters, b.parameters)),
            merged[hit].internal_axes,
            tuple(dict.fromkeys(merged[hit].tags + sense.tags)))
    return merged


def _pointwise_max(a: Region, b: Region) -> Region:
    factors = []
    bmap = {g.axis_ids: (g, al) for g, al in b.factors}
    for g, al in a.factors:
        other = bmap.get(g.axis_ids)
        if other is None:
            factors.append((g, al))
            continue
        factors.append((MembershipGrid(
            g.axis_ids, np.maximum(g.values, other[0].values)), al))
    for axes, (g, al) in bmap.items():
        if not any(f[0].axis_ids == axes for f in factors):
            factors.append((g, al))
    return Region(a.context, tuple(factors), a.label)


# ---------------------------------------------------------------------------
# operator (de)serialization
# ---------------------------------------------------------------------------

def operator_to_doc(op: MeaningOperator) -> dict:
    if isinstance(op, Pointwise):
        return {"type": "pointwise", "hedge": op.hedge,
                "target_axes": list(op.target_axes or [])}
    if isinstance(op, Projection):
        return {"type": "projection", "target_axes": list(op.target_axes),
                "label": op.label,
                "grid": {"axes": list(op.replacement.axis_ids),
                         "resolution": list(op.replacement.values.shape),
                         "values": op.replacement.values.ravel().tolist()}}
    if isinstance(op, Rescale):
        return {"type": "rescale", "axis": op.axis, "k": op.k, "label": op.label}
    if isinstance(op, Shift):
        return {"type": "shift", "axis": op.axis, "delta": op.delta,
                "fill": op.fill, "label": op.label}
    if isinstance(op, Trajectory):
        return {"type": "trajectory", "target_axes": list(op.target_axes),
                "moves": [[list(c), s] for c, s in op.moves], "label": op.label}
    if isinstance(op, Conjunction):
        return {"type": "conjunction", "kind": op.kind,
                "parts": [operator_to_doc(p) for p in op.parts]}
    if isinstance(op, Negation):
        return {"type": "negation",
                "operand": operator_to_doc(op.operand) if op.operand else None}
    if isinstance(op, DirectSum):
        return {"type": "direct_sum",
                "parts": [operator_to_doc(p) for p in op.parts]}
    if isinstance(op, Composed):
        return {"type": "composed", "label": op.label,
                "parts": [operator_to_doc(p) for p in op.parts]}
    if isinstance(op, Parametric):
        return {"type": "parametric", "word": op.word,
                "internal": context_to_doc(op.internal),
                "parameters": region_to_doc(op.parameters),
                "builder": op.builder, "axes": list(op.axes)}
    raise LexiconFormatError(f"operator {op.name} is not serializable")


def operator_from_doc(doc: dict, store: Optional[LexiconStore] = None):
    kind = _need(doc, "type", "operator")
    if kind == "pointwise":
        return Pointwise(doc["hedge"], tuple(doc.get("target_axes") or ()) or None)
    if kind == "projection":
        g = doc["grid"]
        vals = np.asarray(g["values"], dtype=float).reshape(tuple(g["resolution"]))
        return Projection(tuple(doc["target_axes"]),
                          MembershipGrid(tuple(g["axes"]), vals),
                          label=doc.get("label", ""))
    if kind == "rescale":
        return Rescale(doc["axis"], doc["k"], label=doc.get("label", ""))
    if kind == "shift":
        return Shift(doc["axis"], doc["delta"], fill=doc.get("fill", "zero"),
                     label=doc.get("label", ""))
    if kind == "trajectory":
        return Trajectory(tuple(doc["target_axes"]),
                          tuple((tuple(c), s) for c, s in doc["moves"]),
                          label=doc.get("label", ""))
    if kind == "conjunction":
        return Conjunction(doc["kind"], tuple(
            operator_from_doc(p, store) for p in doc["parts"]))
    if kind == "negation":
        inner = doc.get("operand")
        return Negation(operator_from_doc(inner, store) if inner else None)
    if kind == "direct_sum":
        return DirectSum(tuple(operator_from_doc(p, store) for p in doc["parts"]))
    if kind == "composed":
        return Composed(tuple(operator_from_doc(p, store) for p in doc["parts"]),
                        label=doc.get("label", ""))
    if kind == "parametric":
        return Parametric(doc["word"], context_from_doc(doc["internal"]),
                          region_from_doc(doc["parameters"]), doc["builder"],
                          tuple(doc.get("axes", ())))
    raise LexiconFormatError(f"operator: unknown type {kind!r}")


# ---------------------------------------------------------------------------
# builders: how a parameter region becomes a concrete transform
# ---------------------------------------------------------------------------

def _build_project_param(param_region: Region, params: dict) -> MeaningOperator:
    """Install the (possibly modified) parameter region onto its own axes."""
    parts = tuple(Projection(g.axis_ids, g) for g, _ in param_region.factors)
    if len(parts) == 1:
        return parts[0]
    return DirectSum(parts)


def _build_walk_ridge(param_region: Region, params: dict) -> MeaningOperator:
    """Distance/time ridge s ~ v*t; the speed v is the parameter centroid."""
    v = params.get("quickness", 0.5)
    grid = grid_from_function(
        lambda s, t: np.exp(-(((s - v * t) / 0.25) ** 2)),
        ("rel_distance", "rel_time"))
    return Projection(("rel_distance", "rel_time"), grid, label="walk-ridge")


register_builder("project_param", _build_project_param)
register_builder("walk_ridge", _build_walk_ridge)


# ---------------------------------------------------------------------------
# seed lexicon
# ---------------------------------------------------------------------------

def fast_surface(s, t):
    """Reference surface for "fast" over (distance, time)."""
    return np.clip((s - t + 1.0) / 2.0, 0.0, 1.0)


def bump(center, width=0.12):
    return lambda x: np.exp(-(((x - center) / width) ** 2))


def bump2(cx, cy, width=0.18):
    return lambda x, y: np.exp(-(((x - cx) ** 2 + (y - cy) ** 2) / width ** 2))


def seed_store() -> LexiconStore:
    store = LexiconStore()

    s = store.add_axis(Axis("rel_distance", name="relative distance",
                            scale_note="relative"))
    t = store.add_axis(Axis("rel_time", name="relative time",
                            scale_note="relative"))
    st = Context("st", (s, t), parent="root")
    fast_st = Region(st, ((grid_from_function(
        fast_surface, ("rel_distance", "rel_time")), 1.0),), label="fast")
    store.regions["fast_st"] = fast_st

    q = store.add_axis(Axis("quickness", name="quickness", kind="derived",
                            reference=fast_st))
    store.add_axis(Axis("weight", name="relative weight"))
    store.add_axis(Axis("east", name="relative easting"))
    store.add_axis(Axis("north", name="relative northing"))
    store.add_axis(Axis("goal", name="goal satisfaction degree"))

    qctx = store.context_for(("quickness",), "quickness-space")

    def qregion(fn, label):
        return Region(qctx, ((grid_from_function(fn, ("quickness",)), 1.0),),
                      label=label)

    fast_q = qregion(lambda x: x, "fast")
    slow_q = qregion(lambda x: 1.0 - x, "slow")       # slow = not(fast)
    store.regions["fast_q"] = fast_q
    store.regions["slow_q"] = slow_q

    def adjective(word, axes, region):
        internal = store.context_for(axes, f"{word}-internal")
        op = Parametric(word, internal, region, builder="project_param",
                        axes=tuple(axes))
        store.add_entry(word, "qual_adjective", [Sense(op, tuple(axes))])

    adjective("fast", ("quickness",), fast_q)
    adjective("slow", ("quickness",), slow_q)
    adjective("moderately-paced", ("quickness",),
              qregion(bump(0.5, 0.15), "moderately paced"))
    wctx = store.context_for(("weight",), "weight-space")
    adjective("heavy", ("weight",), Region(
        wctx, ((grid_from_function(lambda x: x, ("weight",)), 1.0),), "heavy"))

    xy = store.context_for(("east", "north"), "map-space")
    adjective("northeast", ("east", "north"), Region(
        xy, ((grid_from_function(bump2(0.8, 0.8), ("east", "north")), 1.0),), "NE"))
    adjective("southwest", ("east", "north"), Region(
        xy, ((grid_from_function(bump2(0.2, 0.2), ("east", "north")), 1.0),), "SW"))

    store.add_entry("very", "adverb_hedge", [Sense(Pointwise("very"))])
    store.add_entry("not", "negation", [Sense(Pointwise("not"))])
    store.add_entry("and", "conjunction", [Sense(Conjunction("and"))])
    store.add_entry("or", "conjunction", [Sense(Conjunction("or"))])
    store.add_entry("but", "conjunction", [Sense(Conjunction("but"))])

    # verbs: internal speed parameter; external action region over (s, t)
    walk_param = qregion(bump(0.35), "walking speed")
    store.add_entry("walk", "verb", [Sense(
        Parametric("walk", qctx, walk_param, builder="walk_ridge",
                   axes=("rel_distance", "rel_time")),
        ("quickness",))])

    stand_grid = grid_from_function(
        lambda sd, td: np.exp(-((sd / 0.18) ** 2)) * np.ones_like(td),
        ("rel_distance", "rel_time"))
    store.add_entry("stand-still", "verb", [Sense(
        Projection(("rel_distance", "rel_time"), stand_grid, label="stand-still"),
        ())])

    drive_param = qregion(bump(0.55), "driving speed")
    store.add_entry("drive", "verb", [Sense(
        Parametric("drive", qctx, drive_param, builder="project_param",
                   axes=("quickness", "rel_time")),
        ("quickness",))])

    store.add_entry("faster", "comp_adjective", [Sense(
        Rescale("rel_time", RESCALE_FASTER, label="faster"), ())])

    store.add_entry("car", "noun", [Sense(
        Composed((), label="car"), ("quickness", "weight"))])
    store.add_entry("boat", "noun", [Sense(
        Composed((), label="boat"), ("quickness", "weight"))])
    store.add_entry("robot", "noun", [Sense(
        Composed((), label="robot"), ("east", "north"))])

    store.inflections = {
        "slowly": "slow", "quickly": "fast", "fastly": "fast",
        "cars": "car", "boats": "boat", "robots": "robot",
        "drives": "drive", "walks": "walk", "driving": "drive",
        "walking": "walk",
    }
    store.multiwords = {
        ("stand", "still"): "stand-still",
        ("moderately", "paced"): "moderately-paced",
        ("forget", "everything"): "forget-everything",
    }
    return store


RESCALE_FASTER = 2.0


def push_spare(buffer: list, item, limit: int) -> list:
    """Ring of at most `limit` spare-context snapshots, most recent first."""
    if limit < 0:
        raise ValueError("spare limit must be >= 0")
    return ([item] + list(buffer))[:limit]


def pop_spare(buffer: list):
    """(most recent snapshot or None, remaining buffer)."""
    if not buffer:
        return None, []
    return buffer[0], list(buffer[1:])


def resolve_lexicon_path(explicit: Optional[str] = None) -> Optional[str]:
    """CLI flag first, then the MEANING_LEXICON environment variable."""
    if explicit:
        return explicit
    return os.environ.get("MEANING_LEXICON")


def load_or_seed(path: Optional[str] = None) -> LexiconStore:
    path = resolve_lexicon_path(path)
    if path:
        return LexiconStore.load(path)
    return seed_store()
