"""Fixed-topology MLP with a Gaussian output head and manual backprop.

Topology: input -> three hidden layers -> (mean, raw variance) heads.
Hidden activations pass through inverted dropout (kept units scaled by
1/keep_prob). The raw variance head is mapped through a smooth double
softplus clamp so predicted variances stay inside [var_floor, var_ceil]
with nonzero gradient everywhere.
"""

from dataclasses import dataclass

import numpy as np

from .dropout import DropoutMask, ones_mask


def sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(x):
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def inverse_softplus(y):
    # valid for y > 0
    return np.log(np.expm1(y))


def silu(x):
    return x * sigmoid(x)


def silu_grad(x):
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


_ACTIVATIONS = {
    "silu": (silu, silu_grad),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
}


@dataclass(frozen=True)
class MlpConfig:
    in_dim: int
    out_dim: int
    hidden: tuple = (512, 512, 512)
    activation: str = "silu"
    var_floor: float = 1e-6
    var_ceil: float = 1e2

    def __post_init__(self):
        if len(self.hidden) != 3:
            raise ValueError("expected exactly three hidden layers")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (0.0 < self.var_floor < self.var_ceil):
            raise ValueError("need 0 < var_floor < var_ceil")

    @property
    def layer_dims(self):
        """Dims of the five weight groups: three hidden, mean head, var head."""
        h1, h2, h3 = self.hidden
        return [
            (self.in_dim, h1),
            (h1, h2),
            (h2, h3),
            (h3, self.out_dim),
            (h3, self.out_dim),
        ]


@dataclass
class MlpParams:
    """Weight matrices (in, out) and bias vectors for the five groups."""

    config: MlpConfig
    weights: list
    biases: list

    def copy(self):
        return MlpParams(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def flat(self):
        return self.weights + self.biases

    def check_finite(self):
        for i, a in enumerate(self.flat()):
            if not np.all(np.isfinite(a)):
                raise FloatingPointError(f"non-finite parameter in group {i}")


def init_params(config: MlpConfig, rng) -> MlpParams:
    """Fan-in scaled Gaussian weights, zero biases."""
    weights, biases = [], []
    for din, dout in config.layer_dims:
        weights.append(rng.standard_normal((din, dout)) / np.sqrt(din))
        biases.append(np.zeros(dout))
    return MlpParams(config, weights, biases)


def zeros_like_params(params: MlpParams):
    return MlpParams(
        params.config,
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def variance_map(raw, config: MlpConfig):
    """Smooth clamp of the raw variance head into [var_floor, var_ceil].

    Returns (variance, d variance / d raw). Both softplus stages keep the
    gradient nonzero, so saturated variances can still recover in training.
    """
    lv_max = np.log(config.var_ceil)
    lv_min = np.log(config.var_floor)
    u1 = lv_max - softplus(lv_max - raw)
    u2 = lv_min + softplus(u1 - lv_min)
    var = np.exp(u2)
    dvar = var * sigmoid(u1 - lv_min) * sigmoid(lv_max - raw)
    return var, dvar


def variance_map_inverse(var, config: MlpConfig):
    """Raw head value that variance_map sends to `var` (floor < var < ceil)."""
    lv_max = np.log(config.var_ceil)
    lv_min = np.log(config.var_floor)
    u2 = np.log(var)
    u1 = lv_min + inverse_softplus(u2 - lv_min)
    return lv_max - inverse_softplus(lv_max - u1)


def _validate_input(config: MlpConfig, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != config.in_dim:
        raise ValueError(f"input shape {x.shape} incompatible with in_dim {config.in_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x


def forward(params: MlpParams, x, mask: DropoutMask | None = None, cache=False):
    """Run the network on a batch (n, in_dim) or a single vector.

    Returns (mean, variance) shaped like the input batch; with cache=True
    also returns the intermediate values needed by `backward`.
    """
    cfg = params.config
    single = np.asarray(x).ndim == 1
    X = _validate_input(cfg, x)
    if mask is None:
        mask = ones_mask(cfg.hidden)
    act, _ = _ACTIVATIONS[cfg.activation]
    scale = 1.0 / mask.keep_prob

    pre, post = [], []
    h = X
    for layer in range(3):
        m = mask.layers[layer]
        if m.shape[0] != cfg.hidden[layer]:
            raise ValueError("mask width mismatch")
        a = h @ params.weights[layer] + params.biases[layer]
        h = act(a) * (m * scale)
        pre.append(a)
        post.append(h)
    mean = h @ params.weights[3] + params.biases[3]
    raw = h @ params.weights[4] + params.biases[4]
    var, dvar = variance_map(raw, cfg)

    if single:
        out = (mean[0], var[0])
    else:
        out = (mean, var)
    if not cache:
        return out
    ctx = {"X": X, "pre": pre, "post": post, "mask": mask, "dvar": dvar}
    return out, ctx


def backward(params: MlpParams, ctx, dmean, dvar):
    """Backprop given gradients wrt mean and variance outputs.

    Output grads are used as-is (no implicit batch averaging); the caller
    scales them. Returns (grads: MlpParams-shaped, dX) where dX is the
    gradient wrt the network input, needed to chain a second prediction
    step through the first step's mean.
    """
    cfg = params.config
    _, dact = _ACTIVATIONS[cfg.activation]
    mask, scale = ctx["mask"], 1.0 / ctx["mask"].keep_prob
    dmean = np.atleast_2d(dmean)
    draw = np.atleast_2d(dvar) * ctx["dvar"]

    grads = zeros_like_params(params)
    h3 = ctx["post"][2]
    grads.weights[3] = h3.T @ dmean
    grads.biases[3] = dmean.sum(axis=0)
    grads.weights[4] = h3.T @ draw
    grads.biases[4] = draw.sum(axis=0)
    dh = dmean @ params.weights[3].T + draw @ params.weights[4].T

    for layer in (2, 1, 0):
        da = dh * (mask.layers[layer] * scale) * dact(ctx["pre"][layer])
        h_in = ctx["X"] if layer == 0 else ctx["post"][layer - 1]
        grads.weights[layer] = h_in.T @ da
        grads.biases[layer] = da.sum(axis=0)
        dh = da @ params.weights[layer].T
    return grads, dh


def group_lambdas(lams):
    """Expand the four per-layer L2 coefficients to the five weight groups.

    The two output heads share the final coefficient.
    """
    lams = list(lams)
    if len(lams) != 4:
        raise ValueError("expected four L2 coefficients (three hidden + output)")
    return [lams[0], lams[1], lams[2], lams[3], lams[3]]


def l2_value(params: MlpParams, lams):
    """Sum_l lambda_l (||W_l||^2 + ||b_l||^2) over the five weight groups."""
    gl = group_lambdas(lams)
    total = 0.0
    for lam, w, b in zip(gl, params.weights, params.biases):
        total += lam * (np.sum(w * w) + np.sum(b * b))
    return total


def add_l2_grads(params: MlpParams, grads: MlpParams, lams):
    gl = group_lambdas(lams)
    for lam, w, b, gw, gb in zip(gl, params.weights, params.biases, grads.weights, grads.biases):
        gw += 2.0 * lam * w
        gb += 2.0 * lam * b
