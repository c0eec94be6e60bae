"""Iterative hard/soft thresholding for sparse recovery, with the top-k
thresholding policy, greedy and fixed-threshold baselines, and checks of the
coherence-based recovery guarantees against solver traces."""

from .analysis import (
    BoundViolation,
    TheoremReport,
    check_condition,
    compute_ell,
    detection_schedule,
    kkt_residual,
    restricted_gram_deviation,
    theorem_report,
    verify_trace_bounds,
)
from .core import (
    hard_threshold,
    landweber_step,
    lemma_sequence,
    soft_threshold,
    spectral_norm_symmetric,
    top_k_threshold_value,
)
from .dictionaries import (
    Dictionary,
    SparseSignal,
    coherence,
    gen_gaussian,
    gen_identity_plus_hadamard,
    gen_signal,
    load_matrix,
    load_signal,
    save_matrix,
    save_signal,
)
from .estimators import (
    FixedThresholdIST,
    IterativeHardThresholding,
    IterativeSoftThresholding,
    OrthogonalMatchingPursuit,
    ScheduledThresholding,
)
from .exceptions import ArgumentError, FormatError, NotDetectedError, NumericalError
from .solvers import (
    IterationStep,
    SolveResult,
    SolverConfig,
    geometric_schedule,
    iht_solve,
    ist_fixed,
    ist_solve,
    ita_schedule_solve,
    omp_solve,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BoundViolation",
    "check_condition",
    "coherence",
    "compute_ell",
    "detection_schedule",
    "Dictionary",
    "FixedThresholdIST",
    "FormatError",
    "gen_gaussian",
    "gen_identity_plus_hadamard",
    "gen_signal",
    "geometric_schedule",
    "hard_threshold",
    "iht_solve",
    "ist_fixed",
    "ist_solve",
    "ita_schedule_solve",
    "IterationStep",
    "IterativeHardThresholding",
    "IterativeSoftThresholding",
    "kkt_residual",
    "landweber_step",
    "lemma_sequence",
    "load_matrix",
    "load_signal",
    "NotDetectedError",
    "NumericalError",
    "omp_solve",
    "OrthogonalMatchingPursuit",
    "restricted_gram_deviation",
    "save_matrix",
    "save_signal",
    "ScheduledThresholding",
    "soft_threshold",
    "SolverConfig",
    "SolveResult",
    "SparseSignal",
    "spectral_norm_symmetric",
    "theorem_report",
    "TheoremReport",
    "top_k_threshold_value",
    "verify_trace_bounds",
    "__version__",
]
