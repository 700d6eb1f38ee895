"""Pure-numpy batched ensemble forward (fallback backend).

Stacked weights let one broadcasted matmul evaluate every member; the
first hidden layer is computed once per member and reused across masks
because dropout applies after the activation.
"""

import numpy as np


def _silu(x):
    return x * (1.0 / (1.0 + np.exp(-x)))


def mean_forward(w1, b1, w2, b2, w3, b3, wm, bm, m1, m2, m3, act, X):
    f = _silu if act == 0 else (lambda a: a)
    A1 = f(np.matmul(X, w1) + b1[:, None, :])               # (B, n, h1)
    H1 = A1[:, None, :, :] * m1[:, :, None, :]              # (B, M, n, h1)
    H2 = f(np.matmul(H1, w2[:, None]) + b2[:, None, None, :]) * m2[:, :, None, :]
    H3 = f(np.matmul(H2, w3[:, None]) + b3[:, None, None, :]) * m3[:, :, None, :]
    MU = np.matmul(H3, wm[:, None]) + bm[:, None, None, :]  # (B, M, n, ds)
    return MU.mean(axis=(0, 1))
