"""meaningspace: word and phrase meanings as operators on fuzzy regions.

Knowledge lives in contexts (unit hypercubes of property axes) as products
of low-dimensional membership grids; words act on those regions; phrases are
operator lines; comprehension heuristics score how much sense an
interpretation makes; the describe machinery puts regions back into words.
"""

from .regions import (
    Axis, Context, MembershipGrid, Point, Region, RegionError,
    NonSeparableError, ContextMismatchError, build_grid, empty_region,
    evaluate, expand_axis, grid_from_function, make_region, membership,
    project, region_distance, region_stats, write_pgm,
)
from .operators import (
    Composed, Conjunction, DirectSum, MeaningOperator, Negation,
    OperatorError, Parametric, PhraseOperator, Pointwise, Projection,
    Rescale, Shift, Trajectory, apply_and, apply_but, apply_hedge, apply_not,
    apply_or, apply_phrase, apply_projection_adjective, centroid,
    compose_block,
)
from .lexicon import (
    ContextHierarchy, LexiconEntry, LexiconStore, Sense, load_or_seed,
    seed_store,
)
from .comprehension import (
    ComprehensionConfig, ComprehensionReport, check_contradiction,
    check_mood, check_no_change, check_vacuity, check_vagueness,
    extract_effector, score_interpretation,
)
from .interpreter import (
    InterpretationOutcome, ParseCandidate, Session, build, interpret, parse,
    reinterpret_window, tokenize,
)
from .abstraction import (
    AbstractionParams, DescribeProblem, NoDescription, blur, describe,
    describe_failure, describe_own_concept, is_abstracting,
    refine_composition, restrict,
)
from .service import Engine, repl_loop, run_scenario, export_figure, serve

__version__ = "0.1.0"
