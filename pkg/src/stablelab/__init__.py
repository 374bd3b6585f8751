"""Finite-domain lab for stable and list-replicable PAC learning."""

__version__ = "0.1.0"

from stablelab._kernels import BACKEND
from stablelab.core import (
    DomainError,
    Example,
    FiniteDistribution,
    Hypothesis,
    HypothesisClass,
    Sample,
    class_loss,
    condition_on_consistency,
    derive_seed,
    derive_seeds,
    draw_sample,
    empirical_loss,
    full_cube,
    median_threshold_distribution,
    mix_with_point_mass,
    population_loss,
    random_class,
    threshold_class,
)
from stablelab.dims import (
    DeskScaleError,
    DimensionReport,
    MistakeTree,
    check_log_threshold_bound,
    deepest_shattered_tree,
    dimension_report,
    littlestone_dimension,
    shatters_tree,
    threshold_dimension,
    vc_dimension,
)
from stablelab.harness import (
    JumpProbeReport,
    ListReport,
    OutputFrequencyTable,
    StabilityReport,
    empirical_list,
    empirical_stability,
    jump_probe,
    ord_statistic,
    output_distribution,
    uniform_convergence_gap,
)
from stablelab.learners import (
    ERM,
    ClassErrorWrapper,
    ConstantLearner,
    Learner,
    LearnerOutput,
    ListFromStable,
    ListLearnerOutput,
    MajorityBoost,
    RandomThresholdStable,
    StabilityParams,
    ThreeWayRule,
    agnostic_from_realizable,
    agnostic_rho,
    class_error_wrapper,
    erm,
    list_from_stable,
    majority_boost,
    majority_vote,
    random_threshold_stable,
    three_way_rule,
)

__all__ = [name for name in dir() if not name.startswith("_")]
