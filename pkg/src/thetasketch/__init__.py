"""Threshold sketches for distinct counting on streams and set expressions."""

from .errors import (
    DomainError,
    EmptyInput,
    IdsUnavailable,
    InvariantError,
    ParseError,
    ResourceLimit,
    SeedMismatch,
    ThetaSketchError,
    UnsupportedQ,
    WrongKind,
)
from .experiments import (
    ComparativeVariance,
    Estimator,
    PerItemCovariance,
    StreamSpec,
    TrialStats,
    run_accuracy_profile,
    run_comparative_variance,
    run_estimator_trials,
    run_overlap_scatter,
    run_per_item_covariance,
)
from .goodness import (
    ProjectionReport,
    biased_tcf,
    check_monotonicity,
    check_one_goodness,
    check_two_goodness,
    min_composed_tcf,
    tcf_for_kind,
)
from .hashing import UnitHash, derive_trial_seed, hash_identifier
from .io import deserialize_sketch, read_sketch, read_stream, serialize_sketch, write_sketch
from .oracles import (
    LevelDistribution,
    adaptive_variance_approx,
    alpha_estimator_variance,
    alpha_level_distribution,
    alpha_sample_size_moments,
    g_closed,
    g_moment_dp,
    hip_mean_var,
    kmv_subpop_variance,
    kmv_variance,
)
from .samplers import (
    AlphaSampler,
    SamplerConfig,
    Sampler,
    adaptive_threshold,
    alpha_hip_estimate,
    alpha_threshold,
    kmv_threshold,
    make_sampler,
    pkmv_threshold,
)
from .setops import theta_a_not_b, theta_intersect, theta_union
from .sketch import (
    Entry,
    Predicate,
    TcfKind,
    ThetaSketch,
    estimate_distinct,
    estimate_subpopulation,
    validate,
)

__version__ = "0.1.0"
