"""Anytime-valid confidence sequences via sequential likelihood mixing."""

from seqmix.models import (
    ModelFamily,
    ModelKind,
    Observation,
    finite_categorical,
    gaussian_linear,
    logistic_bernoulli,
)
from seqmix.spaces import ParameterSpace, ball_grid, make_finite
from seqmix.mixing import (
    Dirac,
    FiniteWeights,
    GaussianMixing,
    GaussianPosteriorState,
    Particles,
    ew_update,
    gaussian_conjugate_update,
    laplace_approximate,
    predictive_log_mixture,
)
from seqmix.evidence import (
    EvidenceMethod,
    EvidenceResult,
    elbo,
    gaussian_log_evidence,
    grid_log_evidence,
    kl_divergence,
)
from seqmix.trackers import (
    ConfidenceSet,
    Construction,
    GaussianEllipsoidSet,
    EllipsoidForm,
    MartingaleTracker,
    TrackerKind,
    new_tracker,
    prior_mixing_set,
    prior_posterior_ratio_membership,
    regret_to_confidence_threshold,
    rls_ellipsoid,
    set_from_tracker,
    tracker_step,
    union_bound_threshold,
)
from seqmix.tempered import (
    TemperedState,
    TemperedVariant,
    VAWState,
    hellinger_sq_gaussian,
    online_to_confidence_threshold,
    renyi_gaussian,
    tempered_threshold,
    vaw_predict,
    vaw_update,
)
from seqmix.online import (
    RegretCertificate,
    finite_ew_certificate,
    logistic_regret_certificate,
    mle_fit,
    running_mle_sequence,
    sparse_shape_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "ModelFamily",
    "ModelKind",
    "Observation",
    "finite_categorical",
    "gaussian_linear",
    "logistic_bernoulli",
    "ParameterSpace",
    "ball_grid",
    "make_finite",
    "Dirac",
    "FiniteWeights",
    "GaussianMixing",
    "GaussianPosteriorState",
    "Particles",
    "ew_update",
    "gaussian_conjugate_update",
    "laplace_approximate",
    "predictive_log_mixture",
    "EvidenceMethod",
    "EvidenceResult",
    "elbo",
    "gaussian_log_evidence",
    "grid_log_evidence",
    "kl_divergence",
    "ConfidenceSet",
    "Construction",
    "GaussianEllipsoidSet",
    "EllipsoidForm",
    "MartingaleTracker",
    "TrackerKind",
    "new_tracker",
    "prior_mixing_set",
    "prior_posterior_ratio_membership",
    "regret_to_confidence_threshold",
    "rls_ellipsoid",
    "set_from_tracker",
    "tracker_step",
    "union_bound_threshold",
    "TemperedState",
    "TemperedVariant",
    "VAWState",
    "hellinger_sq_gaussian",
    "online_to_confidence_threshold",
    "renyi_gaussian",
    "tempered_threshold",
    "vaw_predict",
    "vaw_update",
    "RegretCertificate",
    "finite_ew_certificate",
    "logistic_regret_certificate",
    "mle_fit",
    "running_mle_sequence",
    "sparse_shape_certificate",
    "__version__",
]
