from .adam import AdamState, adam_step
from .dropout import DropoutMask, ones_mask, sample_masks
from .mlp import (
    MlpConfig,
    MlpParams,
    add_l2_grads,
    backward,
    forward,
    init_params,
    l2_value,
    variance_map,
    variance_map_inverse,
    zeros_like_params,
)

__all__ = [
    "AdamState",
    "adam_step",
    "DropoutMask",
    "ones_mask",
    "sample_masks",
    "MlpConfig",
    "MlpParams",
    "add_l2_grads",
    "backward",
    "forward",
    "init_params",
    "l2_value",
    "variance_map",
    "variance_map_inverse",
    "zeros_like_params",
]
