"""Certified global robustness scoring from classifier confidences."""

from ._core import (
    GAP_TO_RADIUS,
    SMOOTHED_LIPSCHITZ,
    InvalidInput,
    __version__,
    apply_transform,
    certified_radius_from_lipschitz,
    cumulative_certified_ra,
    great_score_mean,
    local_great_score,
    sample_complexity,
    spearman,
)

__all__ = [
    "GAP_TO_RADIUS",
    "SMOOTHED_LIPSCHITZ",
    "InvalidInput",
    "__version__",
    "apply_transform",
    "certified_radius_from_lipschitz",
    "cumulative_certified_ra",
    "great_score_mean",
    "local_great_score",
    "sample_complexity",
    "spearman",
]
