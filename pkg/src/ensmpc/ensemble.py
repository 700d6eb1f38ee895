"""Probabilistic dynamics ensemble: B dropout MLPs with Gaussian heads.

Prediction averages the mean outputs of every (member, inference mask)
pair on normalized inputs. Training minimizes a two-step loss per member:
Gaussian NLL of the first prediction, NLL of a second prediction whose
input state is the member's own first-step mean, a penalty on the summed
predicted variances, and per-layer L2.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    AdamState,
    DropoutMask,
    MlpConfig,
    adam_step,
    add_l2_grads,
    backward,
    forward,
    init_params,
    l2_value,
    sample_masks,
    zeros_like_params,
)
from .nn.forward import ForwardPack, build_pack, mean_forward
from .normalizer import NormalizerStats, fit_normalizer


class TrainingFault(RuntimeError):
    """Non-finite value encountered while fitting a member network."""


@dataclass(frozen=True)
class EnsembleConfig:
    state_dim: int
    action_dim: int
    members: int = 5
    particles: int = 5
    hidden: tuple = (512, 512, 512)
    keep_prob: float = 0.95
    activation: str = "silu"
    var_floor: float = 1e-6
    var_ceil: float = 1e2
    var_penalty: float = 30.0
    l2: tuple = (1e-4, 1e-4, 1e-4, 1e-4)
    lr: float = 1e-3
    epochs: int = 20
    batch_size: int = 256
    patience: int = 5

    def mlp_config(self) -> MlpConfig:
        return MlpConfig(
            in_dim=self.state_dim + self.action_dim,
            out_dim=self.state_dim,
            hidden=tuple(self.hidden),
            activation=self.activation,
            var_floor=self.var_floor,
            var_ceil=self.var_ceil,
        )


@dataclass
class Transition:
    """Two consecutive steps of one episode: (s_t, a_t, s_{t+1}, a_{t+1}, s_{t+2})."""

    s0: np.ndarray
    a0: np.ndarray
    s1: np.ndarray
    a1: np.ndarray
    s2: np.ndarray
    episode_id: int = -1
    goal_id: int = -1


@dataclass
class TransitionBatch:
    s0: np.ndarray
    a0: np.ndarray
    s1: np.ndarray
    a1: np.ndarray
    s2: np.ndarray
    episode_id: np.ndarray | None = None
    goal_id: np.ndarray | None = None

    def __len__(self):
        return self.s0.shape[0]

    def select(self, idx):
        return TransitionBatch(
            self.s0[idx], self.a0[idx], self.s1[idx], self.a1[idx], self.s2[idx]
        )


@dataclass
class TrainReport:
    member_losses: list
    breakdown: dict
    epochs_run: list
    fault: str | None = None
    wall_time: float = field(default=0.0, compare=False)


class EnsembleModel:
    """Immutable between updates; update_model returns a fresh instance."""

    def __init__(self, config: EnsembleConfig, members, masks, stats: NormalizerStats):
        if len(members) != config.members:
            raise ValueError("member count mismatch")
        if any(len(ms) != config.particles for ms in masks):
            raise ValueError("inference mask count mismatch")
        self.config = config
        self.members = members
        self.masks = masks
        self.stats = stats
        self._pack = build_pack(members, masks, config.activation)

    # -- prediction ------------------------------------------------------

    def _normalized_input(self, S, A):
        S = np.atleast_2d(np.asarray(S, dtype=float))
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if S.shape[1] != self.config.state_dim or A.shape[1] != self.config.action_dim:
            raise ValueError("state/action dimension mismatch")
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(A))):
            raise ValueError("non-finite prediction input")
        return np.concatenate(
            [self.stats.normalize_state(S), self.stats.normalize_action(A)], axis=1
        )

    def predict_batch(self, S, A):
        """Next-state prediction for a batch: ensemble-averaged mean."""
        Xn = self._normalized_input(S, A)
        return self.stats.denormalize_state(mean_forward(self._pack, Xn))

    def predict(self, s, a):
        return self.predict_batch(s, a)[0]

    def predict_members(self, s, a):
        """Per-(member, mask) Gaussians in native units, for diagnostics."""
        Xn = self._normalized_input(s, a)
        comps = []
        svar = self.stats.state_std**2
        for params, member_masks in zip(self.members, self.masks):
            for mask in member_masks:
                mu, var = forward(params, Xn, mask)
                comps.append(
                    (self.stats.denormalize_state(mu[0]), var[0] * svar)
                )
        return comps

    def disagreement(self, s, a):
        """Mean per-dimension std of the component means (native units)."""
        means = np.stack([m for m, _ in self.predict_members(s, a)])
        return float(means.std(axis=0).mean())


def init_model(config: EnsembleConfig, stats: NormalizerStats, rng) -> EnsembleModel:
    mlp_cfg = config.mlp_config()
    members = [init_params(mlp_cfg, rng) for _ in range(config.members)]
    masks = [
        sample_masks(rng, config.hidden, config.keep_prob, config.particles)
        for _ in range(config.members)
    ]
    return EnsembleModel(config, members, masks, stats)


# -- training loss --------------------------------------------------------


def two_step_loss(params, batch: TransitionBatch, mask: DropoutMask, delta, lams,
                  want_grads=False):
    """Two-step Gaussian NLL + variance penalty + L2, on normalized data.

    Per batch mean over samples of
        sum_d E1_d^2/var1_d + log var1_d        (first step)
      + sum_d E2_d^2/var2_d + log var2_d        (second step, input state =
                                                 first-step predicted mean)
      + delta * sum_d (var1_d + var2_d)
    plus sum_l lambda_l ||W_l||^2 added once. The same dropout mask drives
    both steps of one term.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    ds = batch.s0.shape[1]
    X1 = np.concatenate([batch.s0, batch.a0], axis=1)
    (mu1, var1), ctx1 = forward(params, X1, mask, cache=True)
    X2 = np.concatenate([mu1, batch.a1], axis=1)
    (mu2, var2), ctx2 = forward(params, X2, mask, cache=True)

    e1 = mu1 - batch.s1
    e2 = mu2 - batch.s2
    nll1 = float(np.mean(np.sum(e1**2 / var1 + np.log(var1), axis=1)))
    nll2 = float(np.mean(np.sum(e2**2 / var2 + np.log(var2), axis=1)))
    penalty = delta * float(np.mean(np.sum(var1 + var2, axis=1)))
    l2 = float(l2_value(params, lams))
    total = nll1 + nll2 + penalty + l2
    breakdown = {"nll_step1": nll1, "nll_step2": nll2, "var_penalty": penalty, "l2": l2}
    if not np.isfinite(total):
        raise TrainingFault(f"non-finite loss: {breakdown}")
    if not want_grads:
        return total, breakdown

    dmu2 = 2.0 * e2 / var2 / n
    dvar2 = (-(e2**2) / var2**2 + 1.0 / var2 + delta) / n
    g2, dx2 = backward(params, ctx2, dmu2, dvar2)
    dmu1 = 2.0 * e1 / var1 / n + dx2[:, :ds]
    dvar1 = (-(e1**2) / var1**2 + 1.0 / var1 + delta) / n
    g1, _ = backward(params, ctx1, dmu1, dvar1)

    grads = zeros_like_params(params)
    for g, ga, gb in zip(grads.flat(), g1.flat(), g2.flat()):
        g += ga + gb
    add_l2_grads(params, grads, lams)
    return total, breakdown, grads


# -- model update ----------------------------------------------------------


def update_model(model: EnsembleModel, dataset, rng, optimizers=None, epochs=None):
    """Refit the normalizer, retrain every member, resample inference masks.

    Returns (model', TrainReport, optimizers'). On a training fault the
    previous model is kept and the report carries the fault message.
    `dataset` needs .transitions(), .state_occurrences(), .action_occurrences().
    """
    t0 = time.perf_counter()
    cfg = model.config
    stats = fit_normalizer(dataset.state_occurrences(), dataset.action_occurrences())
    raw = dataset.transitions()
    data = TransitionBatch(
        stats.normalize_state(raw.s0),
        stats.normalize_action(raw.a0),
        stats.normalize_state(raw.s1),
        stats.normalize_action(raw.a1),
        stats.normalize_state(raw.s2),
    )
    n = len(data)
    if n == 0:
        raise ValueError("dataset holds no transitions")
    epochs = cfg.epochs if epochs is None else epochs
    batch_size = min(cfg.batch_size, n)

    if optimizers is None:
        optimizers = [AdamState(lr=cfg.lr) for _ in range(cfg.members)]

    new_members = [m.copy() for m in model.members]
    member_losses, epochs_run = [], []
    agg = {"nll_step1": 0.0, "nll_step2": 0.0, "var_penalty": 0.0, "l2": 0.0}
    try:
        for b, params in enumerate(new_members):
            best, since_best = np.inf, 0
            epoch_loss, epoch_terms = np.nan, {}
            ep = 0
            for ep in range(1, epochs + 1):
                perm = rng.permutation(n)
                losses, terms = [], []
                for start in range(0, n, batch_size):
                    idx = perm[start : start + batch_size]
                    mask = sample_masks(rng, cfg.hidden, cfg.keep_prob, 1)[0]
                    loss, bd, grads = two_step_loss(
                        params, data.select(idx), mask, cfg.var_penalty, cfg.l2,
                        want_grads=True,
                    )
                    adam_step(params, grads, optimizers[b])
                    losses.append(loss)
                    terms.append(bd)
                epoch_loss = float(np.mean(losses))
                epoch_terms = {k: float(np.mean([t[k] for t in terms])) for k in agg}
                if epoch_loss < best - 1e-8:
                    best, since_best = epoch_loss, 0
                else:
                    since_best += 1
                    if since_best >= cfg.patience:
                        break
            params.check_finite()
            member_losses.append(epoch_loss)
            epochs_run.append(ep)
            for k in agg:
                agg[k] += epoch_terms[k] / cfg.members
    except (TrainingFault, FloatingPointError) as err:
        report = TrainReport([], {}, [], fault=str(err),
                             wall_time=time.perf_counter() - t0)
        return model, report, optimizers

    new_masks = [
        sample_masks(rng, cfg.hidden, cfg.keep_prob, cfg.particles)
        for _ in range(cfg.members)
    ]
    new_model = EnsembleModel(cfg, new_members, new_masks, stats)
    report = TrainReport(member_losses, agg, epochs_run,
                         wall_time=time.perf_counter() - t0)
    return new_model, report, optimizers
