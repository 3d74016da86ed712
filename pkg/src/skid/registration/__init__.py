from skid.registration.features import FeatureCloud, extract_features
from skid.registration.fine import RegistrationResult, refine_fine
from skid.registration.matching import CorrespondenceSet, match_features
from skid.registration.pipeline import RegistrationConfig, register
from skid.registration.solve import (
    solve_coarse,
    suppress_correspondences,
    weighted_alignment,
)

__all__ = [
    "FeatureCloud",
    "extract_features",
    "CorrespondenceSet",
    "match_features",
    "suppress_correspondences",
    "weighted_alignment",
    "solve_coarse",
    "refine_fine",
    "RegistrationResult",
    "RegistrationConfig",
    "register",
]
