import itertools

import numpy as np
import pytest

from meaningspace.regions import (
    Axis, Context, MembershipGrid, Region, empty_region, evaluate,
    grid_from_function, nodes, project, regions_equal,
)
from meaningspace.operators import (
    Composed, DirectSum, Negation, OperatorError, Pointwise, Projection,
    Shift,
)
from meaningspace.lexicon import seed_store
from meaningspace.abstraction import (
    AbstractionParams, Blur, DescribeProblem, FailureCandidate, NoDescription,
    blur, default_probe_set, describe, describe_failure, describe_own_concept,
    describe_region, is_abstracting, jaccard, lexicon_pool, refine_composition,
    restrict, similarity_test_operator,
)

Q = Context("quickness-space", (Axis("quickness"),))
QW = Context("qw", (Axis("quickness"), Axis("weight")))


def qreg(fn, label=""):
    return Region(Q, ((grid_from_function(fn, ("quickness",)), 1.0),), label)


# --------------------------------------------------------------------- blur

def test_blur_radius_zero_identity():
    r = qreg(lambda x: x)
    assert blur(r, 0.0) is r


def test_blur_step_edge_becomes_half():
    step = qreg(lambda x: (x >= 0.5).astype(float))
    out = blur(step, 0.1)
    vals = out.factors[0][0].values
    # independent oracle: direct normalized convolution with reflect padding
    half = int(round(0.1 * 63))
    kern = np.ones(2 * half + 1) / (2 * half + 1)
    oracle = np.convolve(np.pad(step.factors[0][0].values, half, "reflect"),
                         kern, "valid")
    assert np.max(np.abs(vals - oracle)) < 2e-6
    at_edge = out.factors[0][0].sample_point([0.5])
    assert abs(at_edge - 0.5) <= 1.0 / 64


def test_blur_constant_region_unchanged():
    r = qreg(lambda x: np.full_like(x, 0.625))
    out = blur(r, 0.2)
    assert np.array_equal(out.factors[0][0].values, r.factors[0][0].values)


def test_blur_never_sharpens_total_variation():
    rng = np.random.default_rng(31)
    for _ in range(10):
        r = Region(Q, ((MembershipGrid(("quickness",), rng.random(64)), 1.0),))
        once = blur(r, 0.05)
        twice = blur(once, 0.05)
        tv = lambda reg: float(np.sum(np.abs(np.diff(reg.factors[0][0].values))))
        assert tv(once) <= tv(r) + 1e-12
        assert tv(twice) <= tv(once) + 1e-12


def test_blur_rejects_negative_radius():
    with pytest.raises(Exception):
        blur(qreg(lambda x: x), -0.1)


# ----------------------------------------------------------------- restrict

def ramp_projection(axis="quickness"):
    return Projection((axis,), grid_from_function(lambda x: x, (axis,)),
                      label=f"ramp-{axis}")


def test_restrict_full_axis_set_identical():
    op = ramp_projection()
    r = restrict(op, ("quickness",))
    for probe in default_probe_set(Q):
        assert regions_equal(r.apply(probe), op.apply(probe))


def test_restrict_direct_sum_to_one_part():
    part_q = ramp_projection("quickness")
    part_w = ramp_projection("weight")
    op = DirectSum((part_q, part_w))
    assert restrict(op, ("quickness",)) is part_q


def test_restrict_matches_project_apply_oracle():
    op = DirectSum((ramp_projection("quickness"), ramp_projection("weight")))
    restricted = restrict(op, ("quickness",))
    probe = Region(QW, (
        (grid_from_function(lambda x: 1 - x, ("quickness",)), 1.0),
        (grid_from_function(lambda x: x, ("weight",)), 1.0)))
    got = restricted.apply(project(probe, ("quickness",)))
    oracle = project(op.apply(probe), ("quickness",))
    _, gv = evaluate(got, axes=["quickness"])
    _, ov = evaluate(oracle, axes=["quickness"])
    assert np.max(np.abs(gv - ov)) <= 0.05


def test_restrict_empty_subspace_rejected():
    with pytest.raises(OperatorError):
        restrict(ramp_projection(), ())


# ------------------------------------------------------------ is_abstracting

def oracle_is_abstracting(candidate, family, y_axes, delta, eps, probes):
    """Independent exhaustive probe x shift enumeration of the inequality."""
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
                    n = moved.shape[dim]
                    coords = np.clip(np.linspace(0, 1, n) - d, 0, 1)
                    moved = np.apply_along_axis(
                        lambda col: np.interp(coords, np.linspace(0, 1, n), col),
                        dim, moved)
                best = min(best, float(np.max(np.abs(lv - moved))))
            worst = max(worst, best)
    return worst < eps, worst


PARAMS = AbstractionParams(delta=0.05, epsilon=0.05)


def test_abstracting_exact_commuting_projection():
    # B = restriction of A to the subspace: the defining identity holds
    A = DirectSum((ramp_projection("quickness"), ramp_projection("weight")))
    B = restrict(A, ("quickness",))
    probes = default_probe_set(QW)
    ok, residual = is_abstracting(B, [A], ("quickness",), PARAMS, probes)
    oracle_ok, oracle_res = oracle_is_abstracting(
        B, [A], ("quickness",), 0.05, 0.05, probes)
    assert ok is True and oracle_ok is True
    assert residual < 1e-9 and oracle_res < 1e-9


def test_abstracting_identity_vs_hedges_negative():
    family = [Pointwise("very"), Pointwise("not")]
    B = Composed((), label="identity")
    probes = (qreg(lambda x: x, "ramp"), qreg(lambda x: 1 - x, "ramp-down"))
    ok, residual = is_abstracting(B, family, ("quickness",), PARAMS, probes)
    oracle_ok, oracle_res = oracle_is_abstracting(
        B, family, ("quickness",), 0.05, 0.05, probes)
    assert ok is False and oracle_ok is False
    assert residual == pytest.approx(oracle_res, abs=1e-9)
    assert residual > 0.05


def test_abstracting_small_translate_positive():
    bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.15) ** 2)))
    A = Projection(("quickness",), grid_from_function(bump(0.5), ("quickness",)))
    B = Projection(("quickness",), grid_from_function(bump(0.525), ("quickness",)))
    probes = default_probe_set(Q)
    ok, residual = is_abstracting(B, [A], ("quickness",), PARAMS, probes)
    oracle_ok, oracle_res = oracle_is_abstracting(
        B, [A], ("quickness",), 0.05, 0.05, probes)
    assert ok is True and oracle_ok is True
    assert residual == pytest.approx(oracle_res, abs=1e-9)


def test_abstracting_reflexive():
    A = ramp_projection()
    ok, residual = is_abstracting(A, [A], ("quickness",),
                                  AbstractionParams(0.01, 0.01),
                                  default_probe_set(Q))
    assert ok is True and residual == 0.0


def test_abstracting_dimension_mismatch():
    A = ramp_projection("weight")
    with pytest.raises(OperatorError, match="outside the subspace"):
        is_abstracting(A, [A], ("quickness",), PARAMS, default_probe_set(Q))


# ---------------------------------------------------------------- describing

SHIFT = 19.0 / 63.0          # sample-aligned translation
LAG = 2.0 / 63.0             # the abstract operator undershoots by this


def toy_problem(store):
    ctx = store.context_for(("east", "north"), "toy-map")
    bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.12) ** 2)))
    A = Region(ctx, (
        (grid_from_function(bump(0.35), ("east",)), 1.0),
        (grid_from_function(bump(0.35), ("north",)), 1.0)), "start")
    target = Region(ctx, (
        (grid_from_function(bump(0.35 + SHIFT), ("east",)), 1.0),
        (grid_from_function(bump(0.35 + SHIFT), ("north",)), 1.0)), "goal")
    go_north = Shift("north", SHIFT, label="go-north")
    go_east = Shift("east", SHIFT, label="go-east")
    go_south = Shift("north", -SHIFT, label="go-south")
    go_west = Shift("east", -SHIFT, label="go-west")
    relocate = Composed((Shift("east", SHIFT - LAG), Shift("north", SHIFT - LAG)),
                        label="relocate")
    wander = Blur(0.2, label="wander")
    pool = ((go_north, 0), (go_east, 0), (go_south, 0), (go_west, 0),
            (relocate, 1), (wander, 1))
    problem = DescribeProblem(
        source_context=ctx, source_region=A, pool=pool,
        test_operator=similarity_test_operator(target),
        goal_threshold=0.1,
        abstraction=AbstractionParams(delta=8.0 / 63.0, epsilon=0.1),
        probes=default_probe_set(ctx))
    return problem, target


def test_describe_single_operator_reaches_goal():
    store = seed_store()
    ctx = store.context_for(("east", "north"), "jump-map")
    bump = lambda c: (lambda x: np.exp(-(((x - c) / 0.12) ** 2)))
    A = Region(ctx, ((grid_from_function(bump(0.2), ("east",)), 1.0),), "start")
    target = Region(ctx, ((grid_from_function(bump(0.8), ("east",)), 1.0),), "goal")
    jump = Projection(("east",), target.factors[0][0], label="jump")
    problem = DescribeProblem(
        source_context=ctx, source_region=A, pool=((jump, 0),),
        test_operator=similarity_test_operator(target))
    result = describe(problem)
    assert result.names == ["jump"]
    assert result.met and result.goal_membership >= 0.9


def test_describe_toy_two_level_pool():
    store = seed_store()
    problem, target = toy_problem(store)
    result = describe(problem)
    # the abstract step is refined into the concrete pair
    assert result.names == ["go-north", "go-east"]
    assert result.met
    assert result.goal_membership >= 0.9
    # goal-mean trace strictly increases
    assert all(b > a for a, b in zip(result.goal_means, result.goal_means[1:]))
    # refinement passed the abstracting test
    assert any(n.get("replaced") for n in result.refinements)
    # beam + refinement visit strictly fewer nodes than exhaustive search
    exhaustive = sum(len(problem.pool) ** k
                     for k in range(1, len(result.ops) + 1))
    assert result.nodes_visited < exhaustive


def test_describe_refinement_reduces_goal_fuzziness():
    store = seed_store()
    problem, target = toy_problem(store)
    result = describe(problem)
    relocate = problem.pool[4][0]
    abstract_region = relocate.apply(problem.source_region)
    refined_region = problem.source_region
    for op in result.ops:
        refined_region = op.apply(refined_region)

    def fuzz(region):
        g = problem.test_operator.apply(region)
        _, vals = evaluate(g, axes=["goal"], resolutions={"goal": 64})
        return float(np.mean(np.minimum(vals, 1.0 - vals)))

    assert fuzz(refined_region) < fuzz(abstract_region)


def test_describe_no_reachable_operator():
    store = seed_store()
    ctx = store.context_for(("east", "north"), "stuck-map")
    A = empty_region(ctx)
    pool = ((Shift("weight", 0.3, label="drift"), 0),)
    problem = DescribeProblem(
        source_context=ctx, source_region=A, pool=pool,
        test_operator=similarity_test_operator(A))
    with pytest.raises(NoDescription):
        describe(problem)


def test_refine_composition_level_zero_unchanged():
    store = seed_store()
    problem, _ = toy_problem(store)
    comp = [(problem.pool[0][0], 0), (problem.pool[1][0], 0)]
    out, notes, _ = refine_composition(comp, problem.pool,
                                       problem.abstraction, problem.probes)
    assert [op for op, _ in out] == [op for op, _ in comp]
    assert notes == []


def test_refine_composition_relocate_pair_passes_oracle():
    store = seed_store()
    problem, _ = toy_problem(store)
    relocate = problem.pool[4][0]
    out, notes, _ = refine_composition([(relocate, 1)], problem.pool,
                                       problem.abstraction, problem.probes)
    assert [op.name for op, _ in out] == ["go-east", "go-north"]  # application order
    assert notes[0]["replaced"] and notes[0]["sequence"] == ["go-north", "go-east"]
    seq = Composed(tuple(op for op, _ in out))
    ok, _res = oracle_is_abstracting(relocate, [seq], ("east", "north"),
                                     8.0 / 63.0, 0.1, problem.probes)
    assert ok


# -------------------------------------------------- describing own concepts

def test_describe_own_concept_slow_is_not_fast():
    store = seed_store()
    result = describe_own_concept("slow", store)
    assert result.names == ["not", "fast"]
    assert result.met
    # uniqueness oracle: exhaustive enumeration over the eligible pool
    target = store.lookup("slow")[0].operator.apply(
        empty_region(store.context_for(("quickness",), "probe")))
    pool_ops = [s.operator for w in ("fast", "moderately-paced", "very", "not")
                for s in store.lookup(w)]
    best_names, best_sigma = None, -1.0
    src = empty_region(store.context_for(("quickness",), "probe"))
    for depth in (1, 2):
        for combo in itertools.product(pool_ops, repeat=depth):
            region = src
            try:
                for op in combo:
                    region = op.apply(region)
            except Exception:
                continue
            sigma = jaccard(region, target)
            if sigma > best_sigma + 1e-9:
                best_sigma = sigma
                best_names = [op.name for op in reversed(combo)]
    assert best_names == ["not", "fast"]
    assert best_sigma == pytest.approx(1.0, abs=1e-6)


def test_describe_own_concept_very_fast_fixture():
    from meaningspace.lexicon import Sense
    from meaningspace.operators import Parametric
    store = seed_store()
    qctx = store.context_for(("quickness",), "veryfast-internal")
    sharp = Region(qctx, ((grid_from_function(
        lambda x: x * x, ("quickness",)), 1.0),), "very fast")
    store.add_entry("veryfast", "qual_adjective", [Sense(
        Parametric("veryfast", qctx, sharp, "project_param",
                   axes=("quickness",)), ("quickness",))])
    result = describe_own_concept("veryfast", store)
    assert result.names == ["very", "fast"]


def test_describe_own_concept_no_decomposition():
    store = seed_store()
    with pytest.raises(NoDescription):
        describe_own_concept("northeast", store)


# ------------------------------------------------------------ failure report

def test_describe_failure_report():
    store = seed_store()
    ctx = store.context_for(("quickness",), "story")
    fast_region = store.lookup("fast")[0].operator.apply(empty_region(ctx))
    from meaningspace.operators import apply_and
    clash = apply_and(
        store.lookup("slow")[0].operator.apply(empty_region(ctx)),
        fast_region)
    report = describe_failure([
        FailureCandidate("candidate-0", "contradiction", fast_region, clash),
    ], store)
    assert len(report) == 1
    assert report[0]["failing_check"] == "contradiction"
    assert report[0]["passing_description"] == ["fast"]
    assert report[0]["failing_description"]


def test_describe_failure_all_pass_empty():
    store = seed_store()
    assert describe_failure([
        FailureCandidate("ok", None, None,
                         empty_region(store.context_for(("quickness",), "x"))),
    ], store) == []


def test_describe_failure_two_candidates_stable_order():
    store = seed_store()
    ctx = store.context_for(("quickness",), "story2")
    r = store.lookup("fast")[0].operator.apply(empty_region(ctx))
    cands = [FailureCandidate("a", "vacuous", None, r),
             FailureCandidate("b", "no_change", None, r)]
    report = describe_failure(cands, store)
    assert [e["candidate"] for e in report] == ["a", "b"]
