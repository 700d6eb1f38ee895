"""Bernoulli dropout masks over hidden-layer units."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DropoutMask:
    """One binary vector per hidden layer plus the keep probability."""

    layers: tuple
    keep_prob: float


def ones_mask(widths) -> DropoutMask:
    return DropoutMask(tuple(np.ones(w) for w in widths), 1.0)


def sample_masks(rng, widths, keep_prob, count) -> list:
    """Draw `count` independent Bernoulli(keep_prob) mask sets."""
    if not (0.0 < keep_prob <= 1.0):
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if count < 1:
        raise ValueError("count must be >= 1")
    masks = []
    for _ in range(count):
        layers = tuple((rng.random(w) < keep_prob).astype(float) for w in widths)
        masks.append(DropoutMask(layers, keep_prob))
    return masks
