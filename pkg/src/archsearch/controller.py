"""LSTM controller: samples architectures and learns from episode rewards.

One rollout makes one decision per space slot. The input at each step is
the one-hot encoding of the previous choice (zeros at the first step); the
LSTM hidden state feeds a per-slot-type linear head whose softmax is
sampled. Updates follow the episode-reward policy gradient: the gradient
of the sequence log-probability scaled by the reward, applied as one ADAM
ascent step per sampled architecture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn_core import (AdamState, LstmCellParams, LstmStepCache, adam_step,
                      clip_by_global_norm, global_norm, init_lstm, lstm_backward,
                      lstm_forward, softmax_probs, softmax_sample)
from .search_space import (ActionSequence, SearchSpace, build_space, one_hot_input,
                           validate_sequence)

DEFAULT_HIDDEN = {"alexnet": 24, "condensenet": 20, "macro": 64}
DEFAULT_LR = {"alexnet": 0.03, "condensenet": 0.008, "macro": 0.0075}
DEFAULT_CLIP_NORM = 5.0
DEFAULT_BASELINE_DECAY = 0.95
CHECKPOINT_VERSION = 1


@dataclass
class RolloutStep:
    cache: LstmStepCache
    head: str
    probs: np.ndarray
    action: int


@dataclass
class Rollout:
    """Everything recorded while sampling, enough for exact gradients."""

    steps: list[RolloutStep]
    revision: int


@dataclass
class ControllerState:
    space: SearchSpace
    hidden_dim: int
    lstm: LstmCellParams
    params: dict[str, np.ndarray]  # lstm tensors + head tensors, shared arrays
    adam: AdamState
    rng: np.random.Generator
    clip_norm: float | None = DEFAULT_CLIP_NORM
    use_baseline: bool = False
    baseline_decay: float = DEFAULT_BASELINE_DECAY
    baseline: float = 0.0
    revision: int = 0

    def head(self, head_type: str) -> tuple[np.ndarray, np.ndarray]:
        return self.params[f"head.{head_type}.w"], self.params[f"head.{head_type}.b"]


def create_controller(space: SearchSpace, seed: int, hidden_dim: int | None = None,
                      lr: float | None = None, init_scale: float = 0.08,
                      clip_norm: float | None = DEFAULT_CLIP_NORM,
                      use_baseline: bool = False,
                      baseline_decay: float = DEFAULT_BASELINE_DECAY) -> ControllerState:
    """Fresh controller for a space.

    ``init_scale=0`` gives an all-zero controller (uniform policy), handy
    for tests. Hidden size and learning rate default per space kind.
    """
    if hidden_dim is None:
        hidden_dim = DEFAULT_HIDDEN.get(space.kind, 32)
    if lr is None:
        lr = DEFAULT_LR.get(space.kind, 0.01)
    rng = np.random.default_rng(seed)
    lstm = init_lstm(space.vocab_size, hidden_dim, rng, scale=init_scale)
    params = lstm.tensors()
    for head_type in space.head_types():
        arity = next(len(s.candidates) for s in space.slots if s.head == head_type)
        params[f"head.{head_type}.w"] = rng.uniform(-init_scale, init_scale,
                                                    size=(arity, hidden_dim))
        params[f"head.{head_type}.b"] = rng.uniform(-init_scale, init_scale, size=arity)
    adam = AdamState.for_params(params, lr=lr)
    return ControllerState(space=space, hidden_dim=hidden_dim, lstm=lstm,
                           params=params, adam=adam, rng=rng, clip_norm=clip_norm,
                           use_baseline=use_baseline, baseline_decay=baseline_decay)


def _check_space(state: ControllerState, space: SearchSpace) -> None:
    if space.vocab_size != state.space.vocab_size or len(space) != len(state.space):
        raise ValueError("controller was built for a different space")


def sample_sequence(state: ControllerState, space: SearchSpace
                    ) -> tuple[ActionSequence, Rollout]:
    """Sample one architecture, one decision per slot, autoregressively."""
    _check_space(state, space)
    h = np.zeros(state.hidden_dim)
    c = np.zeros(state.hidden_dim)
    x = one_hot_input(space)
    actions: list[int] = []
    log_probs: list[float] = []
    steps: list[RolloutStep] = []
    for t, slot in enumerate(space.slots):
        h, c, cache = lstm_forward(state.lstm, x, h, c)
        w, b = state.head(slot.head)
        action, lp, probs = softmax_sample(w @ h + b, state.rng)
        actions.append(action)
        log_probs.append(lp)
        steps.append(RolloutStep(cache=cache, head=slot.head, probs=probs, action=action))
        x = one_hot_input(space, (t, action))
    seq = ActionSequence(actions=tuple(actions), log_probs=tuple(log_probs))
    return seq, Rollout(steps=steps, revision=state.revision)


def action_log_prob(state: ControllerState, seq: ActionSequence) -> float:
    """Sum of log P(a_t | a_1..t-1) for a fixed sequence (teacher forcing).

    Recomputes exactly what sampling computed, so it matches recorded
    log-probabilities bit for bit as long as parameters are unchanged.
    """
    validate_sequence(state.space, seq)
    h = np.zeros(state.hidden_dim)
    c = np.zeros(state.hidden_dim)
    x = one_hot_input(state.space)
    total = 0.0
    for t, (slot, action) in enumerate(zip(state.space.slots, seq.actions)):
        h, c, _ = lstm_forward(state.lstm, x, h, c)
        w, b = state.head(slot.head)
        probs = softmax_probs(w @ h + b)
        total += float(np.log(probs[action]))
        x = one_hot_input(state.space, (t, action))
    return total


def policy_gradients(state: ControllerState, rollout: Rollout,
                     scale: float) -> dict[str, np.ndarray]:
    """Gradient of scale * sum_t log P(a_t) w.r.t. every parameter.

    The softmax/log-prob gradient at the chosen action is
    scale * (one_hot(action) - probs); head gradients come directly from
    it, the rest flows through the unrolled LSTM.
    """
    grads = {name: np.zeros_like(p) for name, p in state.params.items()}
    caches = [step.cache for step in rollout.steps]
    dh_list: list[np.ndarray] = []
    for step in rollout.steps:
        dlogits = -step.probs * scale
        dlogits[step.action] += scale
        w, _ = state.head(step.head)
        grads[f"head.{step.head}.w"] += np.outer(dlogits, step.cache.h)
        grads[f"head.{step.head}.b"] += dlogits
        dh_list.append(w.T @ dlogits)
    lstm_grads, _ = lstm_backward(state.lstm, caches, dh_list)
    for name, g in lstm_grads.items():
        grads[name] += g
    return grads


def reinforce_update(state: ControllerState, seq: ActionSequence,
                     rollout: Rollout, reward: float) -> float:
    """One policy-gradient ascent step from a sampled sequence and its reward.

    Returns the global L2 norm of the gradient (before clipping) for
    logging. Refuses rollouts recorded under older parameters.
    """
    if len(rollout.steps) != len(seq.actions):
        raise ValueError("rollout does not match sequence length")
    return reinforce_update_batch(state, [rollout], [reward])


def reinforce_update_batch(state: ControllerState, rollouts: list[Rollout],
                           rewards: list[float]) -> float:
    """Policy-gradient step averaged over a batch of sampled sequences.

    The gradient is the mean over rollouts of reward-scaled log-probability
    gradients, so a batch of one reduces to the plain per-sample update.
    """
    if not rollouts or len(rollouts) != len(rewards):
        raise ValueError("need one reward per rollout")
    for rollout in rollouts:
        if rollout.revision != state.revision:
            raise ValueError("stale rollout: controller parameters changed since sampling")

    grads = {name: np.zeros_like(p) for name, p in state.params.items()}
    for rollout, reward in zip(rollouts, rewards):
        scale = reward - state.baseline if state.use_baseline else reward
        sample = policy_gradients(state, rollout, scale / len(rollouts))
        for name, g in sample.items():
            grads[name] += g
    if state.clip_norm is not None:
        norm = clip_by_global_norm(grads, state.clip_norm)
    else:
        norm = global_norm(grads)
    adam_step(state.params, grads, state.adam)
    state.revision += 1
    if state.use_baseline:
        decay = state.baseline_decay
        mean_reward = sum(rewards) / len(rewards)
        state.baseline = decay * state.baseline + (1.0 - decay) * mean_reward
    return norm


# ---------------------------------------------------------------------------
# Checkpointing (single .npz: parameter/moment arrays plus a JSON header)


def save_checkpoint(state: ControllerState, path: str | Path) -> None:
    """Write a resumable snapshot. Only the shipped space kinds can resume."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "space_kind": state.space.kind,
        "hidden_dim": state.hidden_dim,
        "adam": {"lr": state.adam.lr, "beta1": state.adam.beta1,
                 "beta2": state.adam.beta2, "eps": state.adam.eps, "t": state.adam.t},
        "clip_norm": state.clip_norm,
        "use_baseline": state.use_baseline,
        "baseline_decay": state.baseline_decay,
        "baseline": state.baseline,
        "revision": state.revision,
        "rng_state": state.rng.bit_generator.state,
    }
    arrays: dict[str, np.ndarray] = {}
    for name, p in state.params.items():
        arrays[f"param/{name}"] = p
        arrays[f"adam_m/{name}"] = state.adam.m[name]
        arrays[f"adam_v/{name}"] = state.adam.v[name]
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)


def load_checkpoint(path: str | Path) -> ControllerState:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {meta.get('version')}")
        arrays = {key: np.array(data[key]) for key in data.files if key != "meta"}

    space = build_space(meta["space_kind"])
    state = create_controller(space, seed=0, hidden_dim=meta["hidden_dim"],
                              lr=meta["adam"]["lr"], clip_norm=meta["clip_norm"],
                              use_baseline=meta["use_baseline"],
                              baseline_decay=meta["baseline_decay"])
    for name, p in state.params.items():
        p[...] = arrays[f"param/{name}"]
        state.adam.m[name][...] = arrays[f"adam_m/{name}"]
        state.adam.v[name][...] = arrays[f"adam_v/{name}"]
    state.adam.beta1 = meta["adam"]["beta1"]
    state.adam.beta2 = meta["adam"]["beta2"]
    state.adam.eps = meta["adam"]["eps"]
    state.adam.t = meta["adam"]["t"]
    state.baseline = meta["baseline"]
    state.revision = meta["revision"]
    rng_state = meta["rng_state"]
    # JSON turns the inner state ints into plain ints, which numpy accepts
    state.rng.bit_generator.state = rng_state
    return state
