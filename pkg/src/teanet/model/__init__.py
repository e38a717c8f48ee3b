"""Network builder: blocks, TEA layers, ablation variants and the full model."""

from teanet.model.config import (
    DEFAULT_SCHEDULE,
    VARIANTS,
    FilterTriple,
    TeanetConfig,
)
from teanet.model.network import (
    FEATURE_TAP,
    INPUT_LENGTH,
    Model,
    build_ab,
    build_cb,
    build_classifier,
    build_dsb,
    build_tcb,
    build_tea_layer,
    build_teanet,
    feature_maps,
)

__all__ = [
    "DEFAULT_SCHEDULE", "FEATURE_TAP", "INPUT_LENGTH", "VARIANTS", "FilterTriple",
    "Model", "TeanetConfig", "build_ab", "build_cb", "build_classifier", "build_dsb",
    "build_tcb", "build_tea_layer", "build_teanet", "feature_maps",
]
