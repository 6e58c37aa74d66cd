"""Phrase pipeline: tokenize, enumerate parses, build operators, score, select.

The controlled grammar is the smallest one covering the working phrase set:

    Phrase      := Simple ("but" Simple)?
    Simple      := "if" Core | Core | Reset
    Core        := Command | Statement | BareChain
    Command     := Verb Chain?
    Statement   := NounPhrase "is" Chain
    NounPhrase  := Chain? Noun
    BareChain   := Chain                     (continues the active context)
    Chain       := Term (("and" | "or") Term)?
    Term        := ("not" | Hedge)* Adjective

Mood is imperative iff the phrase leads with a verb, conditional iff it
starts with "if", realis otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

from .regions import (
    Context, Region, RegionError, empty_region, region_distance,
)
from .operators import (
    Composed, Conjunction, MeaningOperator, Negation, OperatorError,
    PhraseOperator, Pointwise, apply_but, compose_block,
)
from .lexicon import (
    ContextHierarchy, LexiconStore, Sense, pop_spare, push_spare,
)
from .comprehension import (
    ComprehensionConfig, ComprehensionReport, EffectorResult, all_pass_report,
    score_interpretation,
)

RESET_LEMMA = "forget-everything"
CANDIDATE_GUARD = 32
TIME_AXIS = "rel_time"


class UnknownWordError(ValueError):
    def __init__(self, words):
        self.words = tuple(words)
        super().__init__("unknown words: " + ", ".join(self.words))


# ---------------------------------------------------------------------------
# parse structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    head: str
    wrappers: tuple[str, ...] = ()      # "not" / hedges, utterance order


@dataclass(frozen=True)
class Chain:
    terms: tuple[Term, ...]
    conj: Optional[str] = None          # "and" | "or" when two terms


@dataclass(frozen=True)
class Command:
    verb: str
    chain: Optional[Chain] = None


@dataclass(frozen=True)
class Statement:
    noun: str
    pre_chain: Optional[Chain] = None
    post_chain: Optional[Chain] = None


@dataclass(frozen=True)
class BareChain:
    chain: Chain


@dataclass(frozen=True)
class Conditional:
    inner: object


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class ButPhrase:
    first: object
    second: object


@dataclass(frozen=True)
class ParseCandidate:
    tokens: tuple[str, ...]
    structure: object
    mood: str                           # imperative | realis | conditional
    sense_choices: tuple[int, ...]      # aligned with content_words(structure)

    def describe(self) -> str:
        words = content_words(self.structure)
        senses = ",".join(f"{w}:{s}" for (w, _), s
                          in zip(words, self.sense_choices))
        return f"{render(self.structure)} [{senses}]" if senses \
            else render(self.structure)


def render(node) -> str:
    if isinstance(node, Term):
        out = node.head
        for w in reversed(node.wrappers):
            out = f"{w}({out})"
        return out
    if isinstance(node, Chain):
        if node.conj:
            return f"{node.conj}({render(node.terms[0])}, {render(node.terms[1])})"
        return render(node.terms[0])
    if isinstance(node, Command):
        return f"command({node.verb}" + (
            f", {render(node.chain)})" if node.chain else ")")
    if isinstance(node, Statement):
        noun = node.noun if not node.pre_chain \
            else f"{render(node.pre_chain)}+{node.noun}"
        if node.post_chain is None:
            return f"statement({noun})"
        return f"statement({noun} is {render(node.post_chain)})"
    if isinstance(node, BareChain):
        return f"continue({render(node.chain)})"
    if isinstance(node, Conditional):
        return f"if({render(node.inner)})"
    if isinstance(node, Reset):
        return "reset"
    if isinstance(node, ButPhrase):
        return f"but({render(node.first)}, {render(node.second)})"
    return repr(node)


def content_words(node) -> list[tuple[str, str]]:
    """(lemma, role) for every sense-bearing word, in a fixed walk order."""
    out: list[tuple[str, str]] = []
    if isinstance(node, Term):
        out.append((node.head, "head"))
    elif isinstance(node, Chain):
        for t in node.terms:
            out.extend(content_words(t))
    elif isinstance(node, Command):
        out.append((node.verb, "verb"))
        if node.chain:
            out.extend(content_words(node.chain))
    elif isinstance(node, Statement):
        if node.pre_chain:
            out.extend(content_words(node.pre_chain))
        out.append((node.noun, "noun"))
        if node.post_chain:
            out.extend(content_words(node.post_chain))
    elif isinstance(node, BareChain):
        out.extend(content_words(node.chain))
    elif isinstance(node, Conditional):
        out.extend(content_words(node.inner))
    elif isinstance(node, ButPhrase):
        out.extend(content_words(node.first))
        out.extend(content_words(node.second))
    return out


# ---------------------------------------------------------------------------
# tokenizing and parsing
# ---------------------------------------------------------------------------

def tokenize(text: str, store: LexiconStore) -> list[str]:
    raw = [t for t in text.lower().replace(",", " ").replace(".", " ")
           .replace("!", " ").replace("?", " ").split() if t]
    merged: list[str] = []
    i = 0
    while i < len(raw):
        if i + 1 < len(raw) and (raw[i], raw[i + 1]) in store.multiwords:
            merged.append(store.multiwords[(raw[i], raw[i + 1])])
            i += 2
        else:
            merged.append(store.lemma(raw[i]))
            i += 1
    unknown = [t for t in merged if not store.known(t)]
    if unknown:
        raise UnknownWordError(unknown)
    return merged


def parse(tokens, store: LexiconStore) -> list[ParseCandidate]:
    """All structures licensed by the controlled grammar, crossed with the
    per-word sense choices, in deterministic order."""
    tokens = list(tokens)
    if not tokens:
        raise ValueError("empty input")
    if "but" in tokens:
        cut = tokens.index("but")
        left, right = tokens[:cut], tokens[cut + 1:]
        structures = [ButPhrase(a, b)
                      for a in _parse_simple(left, store)
                      for b in _parse_simple(right, store)]
        mood_src = left
    else:
        structures = _parse_simple(tokens, store)
        mood_src = tokens
    candidates = []
    for s in structures:
        mood = _mood(s, mood_src, store)
        words = content_words(s)
        options = []
        for lemma, _ in words:
            n = max(1, len(store.lookup(lemma)))
            options.append(range(n))
        for choice in itertools.product(*options):
            candidates.append(ParseCandidate(tuple(tokens), s, mood, choice))
    return candidates


def _mood(structure, tokens, store) -> str:
    core = structure
    if isinstance(core, Conditional):
        return "conditional"
    if isinstance(core, ButPhrase):
        return _mood(core.first, tokens, store)
    if isinstance(core, Command):
        return "imperative"
    return "realis"


def _parse_simple(tokens, store) -> list:
    if not tokens:
        return []
    if tokens == [RESET_LEMMA]:
        return [Reset()]
    if tokens[0] == "if":
        return [Conditional(s) for s in _parse_core(tokens[1:], store)]
    return _parse_core(tokens, store)


def _parse_core(tokens, store) -> list:
    out = []
    if not tokens:
        return out
    entry0 = store.entry(tokens[0])
    if entry0 is not None and entry0.pos == "verb":
        chain = None
        ok = len(tokens) == 1
        if len(tokens) > 1:
            chain = _parse_chain(tokens[1:], store)
            ok = chain is not None
        if ok:
            out.append(Command(tokens[0], chain))
    if "is" in tokens:
        cut = tokens.index("is")
        np_part, chain_part = tokens[:cut], tokens[cut + 1:]
        noun_phrase = _parse_noun_phrase(np_part, store)
        chain = _parse_chain(chain_part, store)
        if noun_phrase is not None and chain is not None:
            noun, pre = noun_phrase
            out.append(Statement(noun, pre, chain))
    else:
        noun_phrase = _parse_noun_phrase(tokens, store)
        if noun_phrase is not None:
            noun, pre = noun_phrase
            out.append(Statement(noun, pre, None))
    if not out:
        chain = _parse_chain(tokens, store)
        if chain is not None:
            out.append(BareChain(chain))
    return out


def _parse_noun_phrase(tokens, store):
    if not tokens:
        return None
    entry = store.entry(tokens[-1])
    if entry is None or entry.pos != "noun":
        return None
    pre = None
    if len(tokens) > 1:
        pre = _parse_chain(tokens[:-1], store)
        if pre is None:
            return None
    return tokens[-1], pre


def _parse_chain(tokens, store) -> Optional[Chain]:
    terms, conj = [], None
    cur_wrappers: list[str] = []
    for tok in tokens:
        entry = store.entry(tok)
        if entry is None:
            return None
        if entry.pos in ("adverb_hedge", "negation"):
            cur_wrappers.append(tok)
        elif entry.pos in ("qual_adjective", "comp_adjective"):
            terms.append(Term(tok, tuple(cur_wrappers)))
            cur_wrappers = []
        elif entry.pos == "conjunction" and tok in ("and", "or"):
            if conj is not None or not terms or cur_wrappers:
                return None
            conj = tok
        else:
            return None
    if cur_wrappers or not terms:
        return None
    if conj is not None and len(terms) != 2:
        return None
    if conj is None and len(terms) != 1:
        return None
    return Chain(tuple(terms), conj)


# ---------------------------------------------------------------------------
# building phrase operators
# ---------------------------------------------------------------------------

@dataclass
class Plan:
    kind: str                               # phrase | but | reset
    context_request: tuple = ("active",)
    line: tuple = ()
    head_ops: int = 0
    mood: str = "realis"
    notes: list = field(default_factory=list)
    sub: Optional[tuple] = None             # (Plan, Plan) for "but"


def build(candidate: ParseCandidate, store: LexiconStore) -> Plan:
    """Turn a parse candidate into a context request plus an operator line.

    Operators that modify another operator's internal context do so here
    (via compose_block, yielding block-operators); the rest form the line.
    """
    senses = _sense_iter(candidate, store)
    plan = _build_node(candidate.structure, store, senses)
    plan.mood = candidate.mood
    if plan.sub:
        for sp in plan.sub:
            sp.mood = candidate.mood
    return plan


def _sense_iter(candidate, store):
    words = content_words(candidate.structure)
    assignments = {}
    for (lemma, role), sense_idx in zip(words, candidate.sense_choices):
        assignments.setdefault(lemma, []).append(sense_idx)
    iters = {w: iter(v) for w, v in assignments.items()}

    def next_sense(lemma) -> tuple[int, Optional[Sense]]:
        idx = next(iters[lemma])
        senses = store.lookup(lemma)
        return idx, (senses[idx] if idx < len(senses) else None)
    return next_sense


def _term_operator(term: Term, store, next_sense) -> tuple[MeaningOperator, str]:
    idx, sense = next_sense(term.head)
    if sense is None:
        raise OperatorError(f"{term.head!r} has no sense {idx}")
    op = sense.operator
    pos = store.entry(term.head).pos
    for wrapper in reversed(term.wrappers):
        wop = store.lookup(wrapper)[0].operator
        op = compose_block(wop, op)
    return op, pos


def _chain_operator(chain: Chain, store, next_sense) -> tuple[MeaningOperator, str]:
    """Operator for a chain plus its kind: 'qual' or 'comp' heads."""
    ops, kinds = [], set()
    for term in chain.terms:
        op, pos = _term_operator(term, store, next_sense)
        ops.append(op)
        kinds.add("comp" if pos == "comp_adjective" else "qual")
    if len(kinds) != 1:
        raise OperatorError("chain mixes qualitative and comparative words")
    if chain.conj:
        return Conjunction(chain.conj, tuple(ops)), kinds.pop()
    return ops[0], kinds.pop()


def _build_node(node, store, next_sense) -> Plan:
    if isinstance(node, Reset):
        return Plan(kind="reset")
    if isinstance(node, ButPhrase):
        first = _build_node(node.first, store, next_sense)
        second = _build_node(node.second, store, next_sense)
        return Plan(kind="but", sub=(first, second))
    if isinstance(node, Conditional):
        return _build_node(node.inner, store, next_sense)
    if isinstance(node, Command):
        idx, sense = next_sense(node.verb)
        if sense is None:
            raise OperatorError(f"{node.verb!r} has no sense {idx}")
        verb_op = sense.operator
        line: list[MeaningOperator] = []
        notes = []
        if node.chain is not None:
            chain_op, kind = _chain_operator(node.chain, store, next_sense)
            internal_ok = (kind == "qual"
                           and verb_op.internal_context is not None
                           and set(chain_op.external_axes)
                           <= set(verb_op.internal_context.axis_ids))
            if internal_ok:
                verb_op = compose_block(chain_op, verb_op)
                notes.append(f"modifier {chain_op.name} composed into "
                             f"{node.verb}'s internal context")
            else:
                line.append(chain_op)
                notes.append(f"{chain_op.name} applied on the external context")
        plan = Plan(kind="phrase",
                    context_request=("verb", node.verb, idx),
                    line=(verb_op, *line), head_ops=1, notes=notes)
        return plan
    if isinstance(node, Statement):
        line = []
        pre = None
        if node.pre_chain is not None:
            pre, _ = _chain_operator(node.pre_chain, store, next_sense)
        idx, _sense = next_sense(node.noun)
        if node.post_chain is not None:
            post, _k = _chain_operator(node.post_chain, store, next_sense)
            line.append(post)
        if pre is not None:
            line.insert(0, pre)
        return Plan(kind="phrase", context_request=("noun", node.noun, idx),
                    line=tuple(line), head_ops=0)
    if isinstance(node, BareChain):
        op, _kind = _chain_operator(node.chain, store, next_sense)
        return Plan(kind="phrase", context_request=("active",),
                    line=(op,), head_ops=0)
    raise OperatorError(f"cannot build {node!r}")


# ---------------------------------------------------------------------------
# session state
# ---------------------------------------------------------------------------

@dataclass
class SessionState:
    hierarchy: ContextHierarchy = field(default_factory=ContextHierarchy)
    regions: dict = field(default_factory=dict)      # ctx id -> Region
    active: Optional[str] = None
    spare: list = field(default_factory=list)        # [(ctx id, Region)]
    counters: dict = field(default_factory=dict)
    reset_pending: bool = False

    def clone(self) -> "SessionState":
        return SessionState(self.hierarchy.clone(), dict(self.regions),
                            self.active, list(self.spare),
                            dict(self.counters), self.reset_pending)


_session_ids = itertools.count(1)


class Session:
    """One narrative: knowledge regions per context plus interpret history."""

    def __init__(self, store: LexiconStore,
                 config: Optional[ComprehensionConfig] = None,
                 effector_axes=("quickness",)):
        self.id = f"session-{next(_session_ids)}"
        self.store = store
        self.config = config or ComprehensionConfig()
        self.effector_axes = tuple(effector_axes)
        self.state = SessionState()
        self.history: list[tuple[str, dict]] = []
        self.checkpoints: list[SessionState] = []
        self.version = 0
        self.last_outcome: Optional[InterpretationOutcome] = None

    def region(self, ctx_id: str) -> Optional[Region]:
        return self.state.regions.get(ctx_id)

    def active_region(self) -> Optional[Region]:
        if self.state.active is None:
            return None
        return self.state.regions.get(self.state.active)


def actualize_noun(state: SessionState, store: LexiconStore, lemma: str,
                   sense: Sense, force_new: bool = False) -> str:
    """Find the object context for a noun or create one with its axes."""
    return _actualize(state, store, lemma, sense, "objects", force_new)


def actualize_verb(state: SessionState, store: LexiconStore, lemma: str,
                   sense: Sense, force_new: bool = False) -> str:
    """Find or create the action context; verbs always get the time axis."""
    return _actualize(state, store, lemma, sense, "actions", force_new,
                      ensure_axes=(TIME_AXIS,))


def _actualize(state, store, lemma, sense, index, force_new,
               ensure_axes=()) -> str:
    axes = list(sense.operator.external_axes or sense.internal_axes)
    for ax in ensure_axes:
        if ax not in axes:
            axes.append(ax)
    if not force_new:
        existing = state.hierarchy.find(index, lemma)
        if existing is not None and set(axes) <= set(existing.axis_ids):
            return existing.id
    n = state.counters.get(lemma, 0) + 1
    state.counters[lemma] = n
    ctx = Context(id=f"{lemma}#{n}",
                  axes=tuple(store.axis(a) for a in axes), parent="root")
    state.hierarchy.add(ctx, index, lemma)
    state.regions[ctx.id] = empty_region(ctx)
    return ctx.id


# ---------------------------------------------------------------------------
# interpreting
# ---------------------------------------------------------------------------

@dataclass
class CandidateResult:
    candidate: ParseCandidate
    plan: Optional[Plan]
    context_id: Optional[str]
    before: Optional[Region]
    after: Optional[Region]
    report: Optional[ComprehensionReport]
    state: Optional[SessionState]
    error: Optional[str] = None
    phrase_name: str = ""

    @property
    def score(self) -> float:
        return self.report.aggregate if self.report else 0.0


@dataclass
class InterpretationOutcome:
    action: str                   # accepted | retried_spare_context | clarification_requested
    chosen: Optional[CandidateResult]
    alternatives_kept: int
    trace: list
    clarification: Optional[str] = None
    version: int = 0

    @property
    def flags(self):
        return set(self.chosen.report.flags) if self.chosen else set()

    @property
    def effector(self) -> Optional[EffectorResult]:
        return self.chosen.report.effector if self.chosen else None

    def digest(self) -> dict:
        return {
            "action": self.action,
            "context": self.chosen.context_id if self.chosen else None,
            "flags": sorted(self.flags),
            "score": round(self.chosen.score, 6) if self.chosen else 0.0,
        }


def _execute_plan(plan: Plan, state: SessionState, session: Session,
                  force_new: bool = False) -> CandidateResult:
    """Run a plan against a staged state; never touches the live session."""
    if plan.kind == "reset":
        state.reset_pending = True
        ctx_id = state.active
        region = state.regions.get(ctx_id) if ctx_id else None
        return CandidateResult(None, plan, ctx_id, region, region,
                               all_pass_report(), state, phrase_name="reset")
    if plan.kind == "but":
        first, second = plan.sub
        base = state.clone()
        res_first = _execute_plan(first, state, session, force_new)
        if res_first.error:
            return res_first
        res_second = _execute_plan(second, base, session, force_new)
        if res_second.error:
            return res_second
        # keep both results: F(A) becomes current, B stays as a subspace
        final = res_second.state
        if res_first.context_id != res_second.context_id:
            final.regions[res_first.context_id] = res_first.after
            if res_first.context_id not in final.hierarchy.nodes and \
                    res_first.context_id in res_first.state.hierarchy.nodes:
                node = res_first.state.hierarchy.nodes[res_first.context_id]
                final.hierarchy.nodes[res_first.context_id] = node
        final.spare = push_spare(final.spare,
                                 (res_first.context_id, res_first.after),
                                 max(1, session.config.spare_limit))
        res_second.plan = plan
        res_second.phrase_name = f"but({res_first.phrase_name}, {res_second.phrase_name})"
        return res_second

    # plain phrase
    kind = plan.context_request[0]
    try:
        if kind == "active":
            if state.active is None:
                raise OperatorError("no active context to continue")
            ctx_id = state.active
        else:
            _, lemma, sense_idx = plan.context_request
            senses = session.store.lookup(lemma)
            sense = senses[sense_idx]
            if kind == "verb":
                ctx_id = actualize_verb(state, session.store, lemma, sense,
                                        force_new)
            else:
                ctx_id = actualize_noun(state, session.store, lemma, sense,
                                        force_new)
        ctx = state.hierarchy.nodes.get(ctx_id)
        before = state.regions.get(ctx_id)
        if before is None:
            if ctx is None:
                raise OperatorError(f"context {ctx_id} has no region")
            before = empty_region(ctx)
        phrase = PhraseOperator(line=plan.line, context=before.context)
        steps = phrase.apply_with_steps(before)
        after = steps[-1]
        step_distances = [region_distance(steps[i], steps[i + 1])
                          for i in range(plan.head_ops, len(steps) - 1)]
        state.regions[ctx_id] = after
        state.active = ctx_id
        report = score_interpretation(
            before, after, plan.mood, session.effector_axes,
            reset_phrase=state.reset_pending, step_distances=step_distances,
            cfg=session.config)
        return CandidateResult(None, plan, ctx_id, before, after, report,
                               state, phrase_name=phrase.name)
    except (RegionError, OperatorError, IndexError) as exc:
        return CandidateResult(None, plan, None, None, None, None, None,
                               error=str(exc))


def _evaluate_candidates(candidates, session: Session, base: SessionState,
                         trace: list, stage_name: str,
                         force_new: bool = False) -> list[CandidateResult]:
    results = []
    for i, cand in enumerate(candidates):
        try:
            plan = build(cand, session.store)
        except (OperatorError, RegionError, IndexError) as exc:
            trace.append({"stage": stage_name, "candidate": i,
                          "structure": cand.describe(),
                          "error": str(exc), "score": 0.0})
            results.append(CandidateResult(cand, None, None, None, None,
                                           None, None, error=str(exc)))
            continue
        res = _execute_plan(plan, base.clone(), session, force_new)
        res.candidate = cand
        entry = {"stage": stage_name, "candidate": i,
                 "structure": cand.describe(), "mood": cand.mood,
                 "score": round(res.score, 6)}
        if res.error:
            entry["error"] = res.error
        else:
            entry["flags"] = sorted(res.report.flags)
            entry["context"] = res.context_id
            entry["scores"] = {k: round(v, 6)
                               for k, v in res.report.per_check_scores.items()}
            if _sense_matches_active(cand, session, base):
                entry["sense_axis_match"] = True
        trace.append(entry)
        results.append(res)
    return results


def _sense_matches_active(cand, session, state) -> bool:
    if state.active is None or state.active not in state.hierarchy.nodes:
        return False
    active_axes = set(state.hierarchy.nodes[state.active].axis_ids)
    words = content_words(cand.structure)
    matched = False
    for (lemma, _), idx in zip(words, cand.sense_choices):
        senses = session.store.lookup(lemma)
        if idx >= len(senses):
            return False
        axes = set(senses[idx].internal_axes)
        if axes:
            if not axes <= active_axes:
                return False
            matched = True
    return matched


def _prefilter(candidates, session: Session, trace: list):
    """Sense-compatibility prefilter for candidate explosions (>= 32)."""
    if len(candidates) < CANDIDATE_GUARD:
        return candidates
    state = session.state
    kept = [c for c in candidates
            if _sense_matches_active(c, session, state)]
    if not kept:
        kept = candidates[:CANDIDATE_GUARD]
    trace.append({"stage": "prefilter", "kept": len(kept),
                  "dropped": len(candidates) - len(kept)})
    return kept


def _select(results) -> Optional[CandidateResult]:
    best = None
    for res in results:
        if res.report is None:
            continue
        if best is None or res.score > best.score:
            best = res
    return best


def interpret(session: Session, phrase_text: str) -> InterpretationOutcome:
    """Parse, build, apply, score, and select; retry spare and fresh contexts
    when nothing reaches the comprehension threshold."""
    trace: list = []
    pre_state = session.state.clone()
    threshold = session.config.acceptance_threshold

    try:
        tokens = tokenize(phrase_text, session.store)
        candidates = parse(tokens, session.store)
    except (UnknownWordError, ValueError) as exc:
        trace.append({"stage": "parse", "error": str(exc)})
        outcome = InterpretationOutcome(
            action="clarification_requested", chosen=None,
            alternatives_kept=0, trace=trace, clarification=str(exc))
        _commit_history(session, phrase_text, outcome, pre_state)
        return outcome

    candidates = _prefilter(candidates, session, trace)
    results = _evaluate_candidates(candidates, session, session.state,
                                   trace, "current")
    viable = [r for r in results if r.report and r.score >= threshold]

    action = "accepted"
    chosen = None
    if viable:
        chosen = _select(viable)
    else:
        # spare-context retries, most recent first
        for k, (ctx_id, saved_region) in enumerate(session.state.spare):
            retry_base = session.state.clone()
            retry_base.regions[ctx_id] = saved_region
            retry_base.active = ctx_id
            retry = _evaluate_candidates(candidates, session, retry_base,
                                         trace, f"spare[{k}]")
            retry_viable = [r for r in retry
                            if r.report and r.score >= threshold]
            if retry_viable:
                chosen = _select(retry_viable)
                action = "retried_spare_context"
                break
        if chosen is None:
            fresh = _evaluate_candidates(candidates, session, session.state,
                                         trace, "fresh", force_new=True)
            fresh_viable = [r for r in fresh
                            if r.report and r.score >= threshold]
            if fresh_viable:
                chosen = _select(fresh_viable)
                action = "accepted"
                trace.append({"stage": "fresh", "note":
                              "accepted in a freshly created context"})

    if chosen is None:
        flags = set()
        for r in results:
            if r.report:
                flags |= set(r.report.flags)
        msg = "no interpretation reached the comprehension threshold"
        if flags:
            msg += " (flags: " + ", ".join(sorted(flags)) + ")"
        outcome = InterpretationOutcome(
            action="clarification_requested", chosen=None,
            alternatives_kept=0, trace=trace, clarification=msg)
        _commit_history(session, phrase_text, outcome, pre_state)
        return outcome

    # commit the winner's staged state
    new_state = chosen.state
    was_reset = session.state.reset_pending and chosen.plan.kind != "reset"
    runners = [r for r in viable
               if r is not chosen and r.report and r.context_id]
    for r in runners:
        new_state.spare = push_spare(new_state.spare,
                                     (r.context_id, r.after),
                                     session.config.spare_limit)
    if was_reset:
        new_state.reset_pending = False
    session.state = new_state
    session.version += 1

    clarification = None
    if chosen.report.effector.kind == "clarification":
        clarification = (f"which value on axis "
                         f"{chosen.report.effector.axis!r}? the region has "
                         f"{chosen.report.effector.runs} separate high spots")
    outcome = InterpretationOutcome(
        action=action, chosen=chosen, alternatives_kept=len(runners),
        trace=trace, clarification=clarification, version=session.version)
    _commit_history(session, phrase_text, outcome, pre_state)
    return outcome


def _commit_history(session, phrase_text, outcome, pre_state):
    session.checkpoints.append(pre_state)
    session.history.append((phrase_text, outcome.digest()))
    session.last_outcome = outcome
    outcome.version = session.version


def reinterpret_window(session: Session, spare_limit: int,
                       window: int) -> Optional[InterpretationOutcome]:
    """Replay the last `window` phrases with a larger spare-context limit.

    The session is replaced only when the replay ends without a
    clarification request; otherwise it is left untouched.
    """
    if window > len(session.history):
        raise ValueError(f"window {window} exceeds history "
                         f"{len(session.history)}")
    if window == 0:
        return session.last_outcome
    saved = (session.state, list(session.history), list(session.checkpoints),
             session.version, session.config, session.last_outcome)
    phrases = [text for text, _ in session.history[-window:]]
    cut = len(session.history) - window
    session.state = session.checkpoints[cut].clone()
    session.history = session.history[:cut]
    session.checkpoints = session.checkpoints[:cut]
    session.config = replace(session.config, spare_limit=spare_limit)
    outcome = None
    for text in phrases:
        outcome = interpret(session, text)
    if outcome is not None and outcome.action != "clarification_requested":
        return outcome          # keep the replayed state and the new limit
    (session.state, session.history, session.checkpoints, session.version,
     session.config, session.last_outcome) = saved
    return outcome
