"""Dataset-level normalization of states and actions.

Means and standard deviations are recomputed over the full collected
dataset before every model update; the networks only ever see normalized
inputs and predict the normalized next state.
"""

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-6


@dataclass(frozen=True)
class NormalizerStats:
    state_mean: np.ndarray
    state_std: np.ndarray
    action_mean: np.ndarray
    action_std: np.ndarray

    def normalize_state(self, s):
        return (s - self.state_mean) / self.state_std

    def denormalize_state(self, s):
        return self.state_mean + self.state_std * s

    def normalize_action(self, a):
        return (a - self.action_mean) / self.action_std


def fit_normalizer(states, actions) -> NormalizerStats:
    """Per-dimension mean/std over every observed state and action.

    Population std, floored at STD_FLOOR so constant features stay usable.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    if states.shape[0] == 0 or actions.shape[0] == 0:
        raise ValueError("cannot fit normalizer on an empty dataset")
    return NormalizerStats(
        state_mean=states.mean(axis=0),
        state_std=np.maximum(states.std(axis=0), STD_FLOOR),
        action_mean=actions.mean(axis=0),
        action_std=np.maximum(actions.std(axis=0), STD_FLOOR),
    )
