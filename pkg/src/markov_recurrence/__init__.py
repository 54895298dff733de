"""Exact recurrence analysis for finite Markov chains.

Kernels are row-stochastic matrices carried together with their support
masks. Recurrence questions are answered on the masks: iterated preimage and
image sets of a finite space are eventually periodic, so infinite series and
"for some t" quantifiers reduce to finite searches.
"""

__version__ = "0.1.0"

from .chain import (
    GeneratorMatrix,
    FunctionOnStates,
    KernelSchedule,
    ReferenceMeasure,
    StateSpace,
    StochasticKernel,
    compose,
    identity_kernel,
    kernel_from_generator,
    kernel_from_map,
    power,
    pullback,
    pushforward,
    reachability,
    schedule_step,
    validate_kernel,
)
from .errors import (
    DimensionMismatch,
    EmptySet,
    FamilyTooLarge,
    InhomogeneousChain,
    InvalidGamma,
    InvalidGenerator,
    InvalidPartition,
    NegativeEntry,
    NonStochasticRow,
    ParseError,
    RecurrenceError,
    SupportUnderflowWarning,
)
from .sets import (
    DivergenceVerdict,
    SetTrace,
    SupportSet,
    image,
    image_trace,
    iterate_trace,
    preimage,
    preimage_trace,
    scc_decomposition,
    series_forward,
    series_main,
    series_pushforward,
)
from .recurrence import (
    ALL_SUBSETS,
    Property,
    PropertyVerdict,
    RecurrenceReport,
    cons_backward_check,
    cons_forward_check,
    e_main_check,
    e_main_mes_check,
    e_main_plus_check,
    metrically_recurrent_points,
    poincare_recurrent_set,
    poincare_recurrent_set_at,
    prp_check,
    recurrence_report,
    strong_recurrent_set,
    topologically_recurrent_points,
    verify_theorem1,
    verify_theorem2,
    verify_theorem4,
)
from .multirec import MultiRecResult, furstenberg_oracle, furstenberg_probe
from .maps import (
    GridKernelPair,
    Interval,
    PiecewiseMap,
    classify_with_refinement,
    discretize_map,
    ex5_map,
    ex6_map,
    identity_map,
    orbit_return_test,
)
from .sim import (
    EstimateWithCI,
    PathSample,
    empirical_vs_exact,
    estimate_return_prob,
    sample_path,
    wilson_interval,
)
from .specfile import ChainSpec, load_bundled, parse_chain_spec

__all__ = [
    "__version__",
    "GeneratorMatrix",
    "FunctionOnStates",
    "KernelSchedule",
    "ReferenceMeasure",
    "StateSpace",
    "StochasticKernel",
    "compose",
    "identity_kernel",
    "kernel_from_generator",
    "kernel_from_map",
    "power",
    "pullback",
    "pushforward",
    "reachability",
    "schedule_step",
    "validate_kernel",
    "DimensionMismatch",
    "EmptySet",
    "FamilyTooLarge",
    "InhomogeneousChain",
    "InvalidGamma",
    "InvalidGenerator",
    "InvalidPartition",
    "NegativeEntry",
    "NonStochasticRow",
    "ParseError",
    "RecurrenceError",
    "SupportUnderflowWarning",
    "DivergenceVerdict",
    "SetTrace",
    "SupportSet",
    "image",
    "image_trace",
    "iterate_trace",
    "preimage",
    "preimage_trace",
    "scc_decomposition",
    "series_forward",
    "series_main",
    "series_pushforward",
    "ALL_SUBSETS",
    "Property",
    "PropertyVerdict",
    "RecurrenceReport",
    "cons_backward_check",
    "cons_forward_check",
    "e_main_check",
    "e_main_mes_check",
    "e_main_plus_check",
    "metrically_recurrent_points",
    "poincare_recurrent_set",
    "poincare_recurrent_set_at",
    "prp_check",
    "recurrence_report",
    "strong_recurrent_set",
    "topologically_recurrent_points",
    "verify_theorem1",
    "verify_theorem2",
    "verify_theorem4",
    "MultiRecResult",
    "furstenberg_oracle",
    "furstenberg_probe",
    "GridKernelPair",
    "Interval",
    "PiecewiseMap",
    "classify_with_refinement",
    "discretize_map",
    "ex5_map",
    "ex6_map",
    "identity_map",
    "orbit_return_test",
    "EstimateWithCI",
    "PathSample",
    "empirical_vs_exact",
    "estimate_return_prob",
    "sample_path",
    "wilson_interval",
    "ChainSpec",
    "load_bundled",
    "parse_chain_spec",
]
