"""Maximum-likelihood estimation for Rayleigh mixture life data observed
under progressive Type-II censoring, with prior component-label knowledge
expressed as belief-function plausibilities (soft labels)."""

__version__ = "0.1.0"

from .belief import (
    ContourFunction,
    Frame,
    MassFunction,
    ProbabilityVector,
    TotalConflictError,
    bayes_contour_combine,
    bel,
    contour_of,
    dempster_combine,
    pl,
)
from .censoring import (
    CensoredDataset,
    CensoringScheme,
    SchemeError,
    conventional_scheme,
    progressive_loglik,
    run_life_test,
    scheme_from_censor_frac,
)
from .estimator import (
    ComponentStarvedError,
    DegenerateLikelihoodError,
    E2MConfig,
    E2MTrace,
    EstimationError,
    LabelMode,
    SoftLabeledDataset,
    e_step,
    fit,
    generalized_loglik,
    m_step,
    make_soft_labels,
)
from .rayleigh import MixtureParams, RayleighParam, mixture_pdf, sample_labeled
from .simulation import (
    CorruptionConfig,
    ExperimentConfig,
    RABiasReport,
    SweepSpec,
    corrupt_labels,
    draw_error_probs,
    rabias,
    run_replication,
    run_sweep,
)

__all__ = [
    "__version__",
    "Frame",
    "MassFunction",
    "ContourFunction",
    "ProbabilityVector",
    "TotalConflictError",
    "bel",
    "pl",
    "contour_of",
    "dempster_combine",
    "bayes_contour_combine",
    "CensoringScheme",
    "CensoredDataset",
    "SchemeError",
    "conventional_scheme",
    "scheme_from_censor_frac",
    "run_life_test",
    "progressive_loglik",
    "MixtureParams",
    "RayleighParam",
    "mixture_pdf",
    "sample_labeled",
    "LabelMode",
    "SoftLabeledDataset",
    "E2MConfig",
    "E2MTrace",
    "EstimationError",
    "ComponentStarvedError",
    "DegenerateLikelihoodError",
    "generalized_loglik",
    "e_step",
    "m_step",
    "fit",
    "make_soft_labels",
    "CorruptionConfig",
    "ExperimentConfig",
    "SweepSpec",
    "RABiasReport",
    "draw_error_probs",
    "corrupt_labels",
    "rabias",
    "run_replication",
    "run_sweep",
]
