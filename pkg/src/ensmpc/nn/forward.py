"""Batched ensemble mean-forward with a compiled core and numpy fallback.

The CEM planner spends nearly all of its time evaluating the ensemble on
candidate rollouts, so this single kernel is the package hot path. The
compiled Cython backend is used when its extension imported cleanly; set
ENSMPC_FORWARD_BACKEND=numpy or =ext to force one side (see
benchmarks/bench_forward.py for the comparison).
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _forward_np

try:
    from . import _forward_ext
except ImportError:
    _forward_ext = None

_ACT_CODES = {"silu": 0, "identity": 1}

_forced = os.environ.get("ENSMPC_FORWARD_BACKEND")
if _forced == "numpy":
    _impl = _forward_np
elif _forced == "ext":
    if _forward_ext is None:
        raise ImportError(
            "ENSMPC_FORWARD_BACKEND=ext but the compiled extension is unavailable"
        )
    _impl = _forward_ext
elif _forced is None:
    _impl = _forward_ext if _forward_ext is not None else _forward_np
else:
    raise ImportError(f"unknown ENSMPC_FORWARD_BACKEND {_forced!r}")

BACKEND = "ext" if _impl is _forward_ext else "numpy"


@dataclass(frozen=True)
class ForwardPack:
    """Member weights stacked along a leading axis, masks pre-scaled by 1/p."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    wm: np.ndarray
    bm: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    act: int


def build_pack(members, masks_per_member, activation) -> ForwardPack:
    """Pack member MlpParams and their inference masks for the kernel."""

    def stack(group):
        return np.ascontiguousarray(np.stack(group))

    w = [stack([mem.weights[i] for mem in members]) for i in range(4)]
    b = [stack([mem.biases[i] for mem in members]) for i in range(4)]
    masks = []
    for layer in range(3):
        masks.append(
            stack(
                [
                    np.stack([mk.layers[layer] / mk.keep_prob for mk in member_masks])
                    for member_masks in masks_per_member
                ]
            )
        )
    return ForwardPack(
        w[0], b[0], w[1], b[1], w[2], b[2], w[3], b[3],
        masks[0], masks[1], masks[2], _ACT_CODES[activation],
    )


def mean_forward(pack: ForwardPack, X, impl=None):
    """Normalized next-state mean, averaged over every (member, mask) pair."""
    X = np.ascontiguousarray(X, dtype=float)
    impl = impl or _impl
    return impl.mean_forward(
        pack.w1, pack.b1, pack.w2, pack.b2, pack.w3, pack.b3,
        pack.wm, pack.bm, pack.m1, pack.m2, pack.m3, pack.act, X,
    )


def available_backends():
    out = {"numpy": _forward_np}
    if _forward_ext is not None:
        out["ext"] = _forward_ext
    return out
