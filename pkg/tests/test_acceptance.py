"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
"""

import functools
import itertools
import json

import numpy as np
import pytest

from meaningspace.regions import (
    Axis, Context, MembershipGrid, Point, Region, empty_region, evaluate,
    grid_from_function, membership, nodes, quantize, region_distance,
    regions_equal,
)
from meaningspace.operators import (
    Composed, DirectSum, Negation, Parametric, Pointwise, Projection,
    apply_and, apply_but, apply_hedge, apply_not, apply_or, centroid,
)
from meaningspace.lexicon import LexiconStore, Sense, seed_store
from meaningspace.comprehension import (
    ComprehensionConfig, check_contradiction, check_vacuity,
    score_interpretation,
)
from meaningspace.interpreter import Session, content_words, interpret
from meaningspace.abstraction import (
    AbstractionParams, Blur, DescribeProblem, NoDescription,
    default_probe_set, describe, describe_own_concept, is_abstracting,
    refine_composition, similarity_test_operator,
)
from meaningspace.service import run_scenario

CFG = ComprehensionConfig()


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {name}: FAIL")
                raise
            print(f"[ACCEPTANCE] {name}: PASS")
        return wrapper
    return deco


def qctx():
    return Context("quickness-space", (Axis("quickness"),))


def qreg(fn):
    return Region(qctx(), ((grid_from_function(fn, ("quickness",)), 1.0),))


# ---------------------------------------------------------------------------

@criterion("operator laws (not involution, very contraction, De Morgan, "
           "direct-sum equality)")
def test_operator_laws():
    rng = np.random.default_rng(1)
    ctx = qctx()
    for _ in range(20):
        r = Region(ctx, ((MembershipGrid(("quickness",), rng.random(64)), 1.0),))
        # not . not = id, sample-exact
        back = apply_not(apply_not(r))
        assert np.array_equal(back.factors[0][0].values, r.factors[0][0].values)
        # very(x) <= x with equality only at 0 and 1
        v = r.factors[0][0].values
        very = apply_hedge("very", r).factors[0][0].values
        assert np.all(very <= v)
        interior = (v > 0) & (v < 1)
        assert np.all(very[interior] < v[interior])
        boundary = ~interior
        assert np.array_equal(very[boundary], v[boundary])
    for _ in range(20):
        f = Region(ctx, ((MembershipGrid(("quickness",), rng.random(64)), 1.0),))
        g = Region(ctx, ((MembershipGrid(("quickness",), rng.random(64)), 1.0),))
        lhs = apply_or(f, g).factors[0][0].values
        rhs = apply_not(apply_and(apply_not(f), apply_not(g))).factors[0][0].values
        assert np.max(np.abs(lhs - rhs)) <= 1e-9
    # (A (+) B)(X (+) Y) = A(X) (+) B(Y) on all samples
    qw = Context("qw", (Axis("quickness"), Axis("weight")))
    A = Pointwise("very", target_axes=("quickness",))
    B = Negation(Projection(("weight",),
                            grid_from_function(lambda x: x, ("weight",))))
    gq = grid_from_function(lambda x: np.exp(-(((x - 0.4) / 0.2) ** 2)),
                            ("quickness",))
    gw = grid_from_function(lambda x: 1 - x, ("weight",))
    region = Region(qw, ((gq, 0.5), (gw, 0.5)))
    combined = DirectSum((A, B)).apply(region)
    part_q = A.apply(Region(qw, ((gq, 0.5),)))
    part_w = B.apply(Region(qw, ((gw, 0.5),)))
    recombined = Region(qw, (part_q.factors[0], part_w.factors[0]))
    assert regions_equal(combined, recombined)


@criterion("weighted-product properties a-d (zero, unit, level-set exact, "
           "no radical drop)")
def test_weighted_product_properties():
    ab = Context("ab", (Axis("a"), Axis("b")))
    zero = grid_from_function(lambda x: np.zeros_like(x), ("a",))
    anything = grid_from_function(lambda x: np.full_like(x, 0.73), ("b",))
    r = Region(ab, ((zero, 0.5), (anything, 0.5)))
    assert membership(r, Point(ab, {"a": 0.5, "b": 0.5})) == 0.0   # a) zero
    ones_a = grid_from_function(lambda x: np.ones_like(x), ("a",))
    ones_b = grid_from_function(lambda x: np.ones_like(x), ("b",))
    r1 = Region(ab, ((ones_a, 0.5), (ones_b, 0.5)))
    assert membership(r1, Point(ab, {"a": 0.1, "b": 0.9})) == 1.0  # b) unit
    # c) level-set law, exact, for sum(alpha) = 1
    for x in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        xq = float(quantize(x))
        ga = grid_from_function(lambda t: np.full_like(t, xq), ("a",))
        gb = grid_from_function(lambda t: np.full_like(t, xq), ("b",))
        two = Region(ab, ((ga, 0.5), (gb, 0.5)))
        assert membership(two, Point(ab, {"a": 0.2, "b": 0.7})) == xq
    # d) adding a combined axis with renormalized exponents never drops a
    #    sample below min(previous membership, new factor value)
    rng = np.random.default_rng(2)
    abc = Context("abc", (Axis("a"), Axis("b"), Axis("c")))
    from meaningspace.regions import add_factor_renormalized, make_region
    for _ in range(20):
        ga = MembershipGrid(("a",), rng.random(64))
        gb = MembershipGrid(("b",), rng.random(64))
        gc = MembershipGrid(("c",), rng.random(64))
        base = make_region(abc, [(ga, 1.0), (gb, 1.0)])
        grown = add_factor_renormalized(base, gc, 1.0)
        for _ in range(10):
            p = Point(abc, {"a": float(rng.random()), "b": float(rng.random()),
                            "c": float(rng.random())})
            before = membership(base, p)
            newval = gc.sample_point([p.coords["c"]])
            assert membership(grown, p) >= min(before, newval) - 1e-12


@criterion("axis expansion matches function-composition oracle within 0.05")
def test_axis_expansion_oracle():
    store = seed_store()
    q_axis = store.axis("quickness")
    qspace = Context("qspace", (q_axis,))
    mp = lambda q: np.exp(-(((q - 0.5) / 0.15) ** 2))
    region = Region(qspace, ((grid_from_function(mp, ("quickness",)), 1.0),))
    from meaningspace.regions import expand_axis
    out = expand_axis(region, "quickness")
    xs = nodes(64)
    u, v = np.meshgrid(xs, xs, indexing="ij")
    fast = np.clip((u - v + 1.0) / 2.0, 0.0, 1.0)
    oracle = mp(fast)
    _, got = evaluate(out, axes=["rel_distance", "rel_time"])
    assert got.shape == (64, 64)
    assert np.max(np.abs(got - oracle)) <= 0.05


@criterion("figure flags: contradiction / vacuity / no-change / vagueness "
           "with reset suppression")
def test_figure_flag_reproduction():
    # Fig 6-1: and(slow, fast) is a contradiction with max ~ 0.5
    both = apply_and(qreg(lambda x: 1 - x), qreg(lambda x: x))
    from meaningspace.regions import region_stats
    st = region_stats(both)
    assert abs(st.max_membership - 0.5) <= 0.02
    assert check_contradiction(both, CFG) < 1.0
    # Fig 6-2: or(slow, fast) says nothing
    either = apply_or(qreg(lambda x: 1 - x), qreg(lambda x: x))
    assert check_vacuity(either, CFG) < 1.0
    assert check_vacuity(both, CFG) == 1.0
    # Fig 6-4: "stand still faster" is flagged, "walk faster" is not
    store = seed_store()
    session = Session(store)
    out = interpret(session, "stand still faster")
    assert out.action == "clarification_requested"
    assert any("no_change" in t.get("flags", []) for t in out.trace)
    session2 = Session(store)
    interpret(session2, "walk")
    ok = interpret(session2, "walk faster")
    assert ok.action == "accepted" and "no_change" not in ok.flags
    # Fig 6-5: NE -> anywhere-except-SW grows vaguer; reset suppresses
    session3 = Session(store)
    interpret(session3, "robot is northeast")
    vague = interpret(session3, "robot is not southwest")
    flagged = [t for t in vague.trace if t.get("stage") == "current"]
    assert any("vagueness_increase" in t.get("flags", []) for t in flagged)
    session4 = Session(store)
    interpret(session4, "robot is northeast")
    ctx_before = session4.state.active
    interpret(session4, "forget everything")
    calm = interpret(session4, "robot is not southwest")
    assert calm.action == "accepted"
    assert calm.chosen.context_id == ctx_before
    assert "vagueness_increase" not in calm.flags


@criterion("'but' second conjunct applies to the pre-first region, "
           "bit-identical")
def test_but_contract():
    store = seed_store()
    session = Session(store)
    out = interpret(session, "drive fast but drive slow")
    assert out.action == "accepted"
    final = session.active_region()
    fresh = Session(store)
    interpret(fresh, "drive slow")
    expected = fresh.active_region()
    assert regions_equal(final, expected)
    assert np.array_equal(final.factor_on("quickness")[0].values,
                          expected.factor_on("quickness")[0].values)


@criterion("effector: command in top quartile / or-clarification / "
           "conditional none")
def test_effector_extraction():
    store = seed_store()
    s1 = Session(store)
    out = interpret(s1, "drive fast")
    assert out.effector.kind == "command"
    assert out.effector.axis == "quickness"
    assert out.effector.value > 0.75
    s2 = Session(store)
    out2 = interpret(s2, "drive very fast or very slowly")
    assert out2.effector.kind == "clarification"
    assert out2.clarification is not None
    s3 = Session(store)
    out3 = interpret(s3, "if drive very fast or very slowly")
    assert out3.chosen.candidate.mood == "conditional"
    assert out3.effector.kind == "none"
    assert out3.clarification is None


@criterion("polysemy: internal-axis match without spare retry; merged "
           "senses give one candidate")
def test_polysemy():
    store = seed_store()
    store.add_axis(Axis("brightness", name="relative brightness"))
    wctx = store.context_for(("weight",), "light1-internal")
    bctx = store.context_for(("brightness",), "light2-internal")
    store.add_entry("light", "qual_adjective", [
        Sense(Parametric("light", wctx, Region(
            wctx, ((grid_from_function(lambda x: 1 - x, ("weight",)), 1.0),)),
            "project_param", axes=("weight",)), ("weight",)),
        Sense(Parametric("light", bctx, Region(
            bctx, ((grid_from_function(lambda x: x, ("brightness",)), 1.0),)),
            "project_param", axes=("brightness",)), ("brightness",)),
    ], merge_similar=False)
    session = Session(store)
    interpret(session, "car is fast")
    out = interpret(session, "car is light")
    assert out.action == "accepted"            # no spare-context retry
    assert all(t.get("stage") in ("current",) or "structure" not in t
               for t in out.trace)
    words = content_words(out.chosen.candidate.structure)
    choice = dict(zip([w for w, _ in words],
                      out.chosen.candidate.sense_choices))
    assert choice["light"] == 0                # the weight sense fits the car
    # merged senses: same internal axes collapse to one fuzzier operator
    store2 = seed_store()
    qx = store2.context_for(("quickness",), "quick-internal")
    mk = lambda fn: Region(qx, ((grid_from_function(fn, ("quickness",)), 1.0),))
    store2.add_entry("quick", "qual_adjective", [
        Sense(Parametric("quick", qx, mk(lambda x: x), "project_param",
                         axes=("quickness",)), ("quickness",)),
        Sense(Parametric("quick", qx, mk(lambda x: x ** 2), "project_param",
                         axes=("quickness",)), ("quickness",)),
    ])
    assert len(store2.lookup("quick")) == 1
    session2 = Session(store2)
    out2 = interpret(session2, "car is quick")
    candidates = [t for t in out2.trace if t.get("stage") == "current"]
    assert len(candidates) == 1


def _oracle_is_abstracting(candidate, family, y_axes, delta, eps, probes):
    from meaningspace.regions import project
    offsets = [k * delta / 4.0 for k in range(-3, 4)]
    worst = 0.0
    for member in family:
        for probe in probes:
            lhs_r = candidate.apply(project(
                probe, [a for a in probe.context.axis_ids if a in y_axes]))
            out = member.apply(probe)
            rhs_r = project(out, [a for a in out.context.axis_ids
                                  if a in y_axes])
            res = {a: 64 for a in y_axes}
            _, lv = evaluate(lhs_r, axes=list(y_axes), resolutions=res)
            _, rv = evaluate(rhs_r, axes=list(y_axes), resolutions=res)
            best = np.inf
            for dy in itertools.product(offsets, repeat=len(y_axes)):
                moved = rv
                for dim, d in enumerate(dy):
                    if d == 0.0:
                        continue
                    n = moved.shape[dim]
                    x = np.clip(np.linspace(0, 1, n) - d, 0, 1) * (n - 1)
                    i0 = np.clip(np.floor(x).astype(int), 0, n - 2)
                    fr = x - i0
                    v0 = np.take(moved, i0, axis=dim)
                    v1 = np.take(moved, i0 + 1, axis=dim)
                    shp = [1] * moved.ndim
                    shp[dim] = n
                    moved = v0 * (1 - fr.reshape(shp)) + v1 * fr.reshape(shp)
                best = min(best, float(np.max(np.abs(lv - moved))))
            worst = max(worst, best)
    return worst < eps, worst


@criterion("abstracting-operator verdicts equal the enumeration oracle on "
           "all three fixtures")
def test_abstraction_three_fixtures():
    from meaningspace.abstraction import restrict
    params = AbstractionParams(delta=0.05, epsilon=0.05)
    qw = Context("qw", (Axis("quickness"), Axis("weight")))
    ramp_q = Projection(("quickness",),
                        grid_from_function(lambda x: x, ("quickness",)))
    ramp_w = Projection(("weight",),
                        grid_from_function(lambda x: x, ("weight",)))
    fixtures = []
    # 1) exact commuting case
    A1 = DirectSum((ramp_q, ramp_w))
    fixtures.append((restrict(A1, ("quickness",)), [A1], ("quickness",),
                     default_probe_set(qw)))
    # 2) identity vs hedges: negative
    probes_1d = default_probe_set(Context("q1", (Axis("quickness"),)))[3:5]
    fixtures.append((Composed((), label="id"),
                     [Pointwise("very"), Pointwise("not")], ("quickness",),
                     probes_1d))
    # 3) two nearby translates: positive via the delta-shift search
    bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.15) ** 2)))
    A3 = Projection(("quickness",),
                    grid_from_function(bump(0.5), ("quickness",)))
    B3 = Projection(("quickness",),
                    grid_from_function(bump(0.525), ("quickness",)))
    fixtures.append((B3, [A3], ("quickness",),
                     default_probe_set(Context("q2", (Axis("quickness"),)))))
    expected = [True, False, True]
    for (B, family, y, probes), expect in zip(fixtures, expected):
        ok, res = is_abstracting(B, family, y, params, probes)
        oracle_ok, oracle_res = _oracle_is_abstracting(
            B, family, y, 0.05, 0.05, probes)
        assert ok == oracle_ok == expect
        assert res == pytest.approx(oracle_res, abs=1e-9)


@criterion("describe: toy pool refined composition, monotone trace, node "
           "bound; slow = [not, fast]")
def test_describe_with_words():
    store = seed_store()
    ctx = store.context_for(("east", "north"), "toy-map")
    SHIFT, LAG = 19.0 / 63.0, 2.0 / 63.0
    bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.12) ** 2)))
    A = Region(ctx, ((grid_from_function(bump(0.35), ("east",)), 1.0),
                     (grid_from_function(bump(0.35), ("north",)), 1.0)))
    target = Region(ctx, (
        (grid_from_function(bump(0.35 + SHIFT), ("east",)), 1.0),
        (grid_from_function(bump(0.35 + SHIFT), ("north",)), 1.0)))
    from meaningspace.operators import Shift
    pool = ((Shift("north", SHIFT, label="go-north"), 0),
            (Shift("east", SHIFT, label="go-east"), 0),
            (Shift("north", -SHIFT, label="go-south"), 0),
            (Shift("east", -SHIFT, label="go-west"), 0),
            (Composed((Shift("east", SHIFT - LAG), Shift("north", SHIFT - LAG)),
                      label="relocate"), 1),
            (Blur(0.2, label="wander"), 1))
    problem = DescribeProblem(
        source_context=ctx, source_region=A, pool=pool,
        test_operator=similarity_test_operator(target), goal_threshold=0.1,
        abstraction=AbstractionParams(delta=8.0 / 63.0, epsilon=0.1),
        probes=default_probe_set(ctx))
    result = describe(problem)
    assert result.met
    assert result.goal_membership >= 0.9
    assert result.names == ["go-north", "go-east"]
    assert all(b > a for a, b in zip(result.goal_means, result.goal_means[1:]))
    assert any(n.get("replaced") for n in result.refinements)
    exhaustive = sum(len(pool) ** k for k in range(1, len(result.ops) + 1))
    assert result.nodes_visited < exhaustive
    # the seed lexicon can explain "slow" in its own words
    own = describe_own_concept("slow", seed_store())
    assert own.names == ["not", "fast"]
    assert own.met


@criterion("persistence: lexicon and session round-trips lossless; scenario "
           "runner byte-deterministic")
def test_persistence(tmp_path):
    store = seed_store()
    path = tmp_path / "lexicon.json"
    store.save(path)
    back = LexiconStore.load(path)
    path2 = tmp_path / "lexicon2.json"
    back.save(path2)
    assert path.read_text() == path2.read_text()
    # session regions survive a save/load round trip bit-exactly
    session = Session(store)
    interpret(session, "walk very fast")
    interpret(session, "car is fast and heavy")
    from meaningspace.service import save_session, load_session_doc
    from meaningspace.regions import region_from_doc
    spath = tmp_path / "session.json"
    save_session(session, spath)
    doc = load_session_doc(spath)
    for ctx_id, region in session.state.regions.items():
        assert regions_equal(region_from_doc(doc["regions"][ctx_id]), region)
    assert doc["config"] == session.config.to_doc()
    # scenario determinism, byte for byte
    scen = tmp_path / "scenario.json"
    scen.write_text(json.dumps({"phrases": [
        {"text": "walk"}, {"text": "walk faster"},
        {"text": "drive fast", "expect": {"effector": "command"}}]}))
    a, b = [], []
    assert run_scenario(str(scen), seed_store(), print_fn=a.append) == 0
    assert run_scenario(str(scen), seed_store(), print_fn=b.append) == 0
    assert "\n".join(a) == "\n".join(b)
