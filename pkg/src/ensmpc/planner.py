"""Receding-horizon action optimization against a learned dynamics model.

Rollouts chain the ensemble's deterministic mean prediction; the objective
is cumulative reward minus a smoothness penalty on step-to-step state
change; the search is a cross-entropy method over bounded action
sequences, optionally warm-started from the previous plan shifted by the
executed chunk.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int
    action_low: tuple
    action_high: tuple
    population: int = 400
    elites: int = 40
    iterations: int = 5
    init_std_scale: float = 0.25
    smooth_weight: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not (0 < self.elites < self.population):
            raise ValueError("need 0 < elites < population")
        lo, hi = self.bounds()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise ValueError("action bounds must be finite with low < high")

    def bounds(self):
        return np.asarray(self.action_low, dtype=float), np.asarray(
            self.action_high, dtype=float
        )


@dataclass
class PlanResult:
    actions: np.ndarray        # (H, action_dim)
    states: np.ndarray         # (H+1, state_dim) predicted under the model
    objective: float
    trace: list                # best-so-far objective after each CEM iteration
    valid: bool = True


def rollout(model, s0, actions):
    """Chain model predictions along one action sequence.

    Returns (states, valid): H+1 states starting at s0. If an intermediate
    state goes non-finite the remainder is zero-filled and valid is False.
    """
    states, valid = rollout_batch(model, s0, np.asarray(actions, dtype=float)[None])
    return states[0], bool(valid[0])


def rollout_batch(model, s0, actions):
    """Vectorized rollout of (pop, H, action_dim) action sequences."""
    actions = np.asarray(actions, dtype=float)
    pop, horizon = actions.shape[0], actions.shape[1]
    s0 = np.asarray(s0, dtype=float)
    states = np.zeros((pop, horizon + 1, s0.shape[0]))
    states[:, 0] = s0
    valid = np.ones(pop, dtype=bool)
    cur = states[:, 0].copy()
    for h in range(horizon):
        safe = np.where(valid[:, None], cur, 0.0)
        nxt = model.predict_batch(safe, actions[:, h])
        bad = ~np.isfinite(nxt).all(axis=1)
        valid &= ~bad
        nxt[~valid] = 0.0
        states[:, h + 1] = nxt
        cur = nxt
    return states, valid


def smoothness(states):
    """Total L1 state motion: sum_h ||s_{h+1} - s_h||_1."""
    return np.abs(np.diff(states, axis=-2)).sum(axis=(-2, -1))


def objective(states, actions, reward_fn, smooth_weight):
    """Cumulative reward minus the weighted L1 smoothness penalty.

    reward_fn maps (n, state_dim), (n, action_dim) -> (n,) and is applied
    to (s_h, a_h) for h = 0..H-1.
    """
    states = np.asarray(states, dtype=float)
    actions = np.asarray(actions, dtype=float)
    if states.shape[0] != actions.shape[0] + 1:
        raise ValueError("need len(states) == len(actions) + 1")
    rewards = reward_fn(states[:-1], actions)
    return float(np.sum(rewards) - smooth_weight * smoothness(states))


def _objective_batch(states, actions, reward_fn, smooth_weight):
    pop, horizon = actions.shape[0], actions.shape[1]
    flat_r = reward_fn(
        states[:, :-1].reshape(pop * horizon, -1),
        actions.reshape(pop * horizon, -1),
    )
    return flat_r.reshape(pop, horizon).sum(axis=1) - smooth_weight * smoothness(states)


def shift_warm_start(prev, executed):
    """Drop the executed prefix; pad the tail by repeating the last action."""
    if executed <= 0:
        return np.array(prev, dtype=float)
    return np.concatenate(
        [prev[executed:], np.tile(prev[-1], (executed, 1))], axis=0
    )


def cem_plan(model, s0, reward_fn, config: PlannerConfig, rng=None,
             warm_start=None, shift=0) -> PlanResult:
    """Cross-entropy search over action sequences from state s0.

    Deterministic given (model, inputs, rng state). Returns the best
    sequence ever evaluated; valid=False if every rollout diverged.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    s0 = np.asarray(s0, dtype=float)
    if not np.all(np.isfinite(s0)):
        raise ValueError("non-finite planning start state")
    lo, hi = config.bounds()
    horizon, dim = config.horizon, lo.shape[0]

    if warm_start is not None:
        if len(warm_start) != horizon:
            raise ValueError("warm start length must equal the horizon")
        mean = shift_warm_start(warm_start, shift)
    else:
        mean = np.tile(0.5 * (lo + hi), (horizon, 1))
    std = np.tile(config.init_std_scale * (hi - lo), (horizon, 1))

    best_obj = -np.inf
    best_actions = best_states = None
    trace = []
    for _ in range(config.iterations):
        eps = rng.standard_normal((config.population, horizon, dim))
        cands = np.clip(mean + std * eps, lo, hi)
        states, valid = rollout_batch(model, s0, cands)
        objs = _objective_batch(states, cands, reward_fn, config.smooth_weight)
        objs = np.where(valid, objs, -np.inf)
        order = np.argsort(-objs, kind="stable")
        top = order[0]
        if objs[top] > best_obj:
            best_obj = float(objs[top])
            best_actions = cands[top].copy()
            best_states = states[top].copy()
        trace.append(best_obj)
        elite_objs = objs[order[: config.elites]]
        finite = np.isfinite(elite_objs)
        if not finite.any():
            continue
        elites = cands[order[: config.elites]][finite]
        mean = elites.mean(axis=0)
        std = np.maximum(elites.std(axis=0), 1e-8)

    if best_actions is None:
        return PlanResult(
            np.tile(0.5 * (lo + hi), (horizon, 1)),
            np.tile(s0, (horizon + 1, 1)),
            -np.inf,
            trace,
            valid=False,
        )
    return PlanResult(best_actions, best_states, best_obj, trace, valid=True)
