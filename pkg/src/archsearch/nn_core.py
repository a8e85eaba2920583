"""Minimal numeric kernel: one LSTM cell with exact BPTT, softmax sampling, ADAM.

Everything runs in float64 numpy so analytic gradients can be checked against
central finite differences to tight tolerances. Parameters are passed around
as flat ``{name: ndarray}`` dicts, which keeps the optimizer and the gradient
checks generic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INIT_SCALE = 0.08  # uniform init range, keeps early softmax near-uniform

GATE_NAMES = ("i", "f", "o", "g")


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmCellParams:
    """Weights of a single LSTM cell.

    Gate order is input (i), forget (f), output (o), candidate (g). ``w_*``
    act on the input vector, ``u_*`` on the previous hidden state.
    """

    input_dim: int
    hidden_dim: int
    w_i: np.ndarray
    w_f: np.ndarray
    w_o: np.ndarray
    w_g: np.ndarray
    u_i: np.ndarray
    u_f: np.ndarray
    u_o: np.ndarray
    u_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    def __post_init__(self) -> None:
        d_in, d_h = self.input_dim, self.hidden_dim
        for gate in GATE_NAMES:
            if getattr(self, f"w_{gate}").shape != (d_h, d_in):
                raise ValueError(f"w_{gate} must have shape ({d_h}, {d_in})")
            if getattr(self, f"u_{gate}").shape != (d_h, d_h):
                raise ValueError(f"u_{gate} must have shape ({d_h}, {d_h})")
            if getattr(self, f"b_{gate}").shape != (d_h,):
                raise ValueError(f"b_{gate} must have shape ({d_h},)")

    def tensors(self) -> dict[str, np.ndarray]:
        """Flat name -> array view of all weights (shared references)."""
        out: dict[str, np.ndarray] = {}
        for gate in GATE_NAMES:
            for kind in ("w", "u", "b"):
                name = f"{kind}_{gate}"
                out[f"lstm.{name}"] = getattr(self, name)
        return out


def init_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator,
              scale: float = INIT_SCALE) -> LstmCellParams:
    """LSTM cell with all weights drawn uniformly from [-scale, scale]."""

    def u(*shape: int) -> np.ndarray:
        return rng.uniform(-scale, scale, size=shape)

    kw = {}
    for gate in GATE_NAMES:
        kw[f"w_{gate}"] = u(hidden_dim, input_dim)
        kw[f"u_{gate}"] = u(hidden_dim, hidden_dim)
        kw[f"b_{gate}"] = u(hidden_dim)
    return LstmCellParams(input_dim=input_dim, hidden_dim=hidden_dim, **kw)


def zero_lstm(input_dim: int, hidden_dim: int) -> LstmCellParams:
    kw = {}
    for gate in GATE_NAMES:
        kw[f"w_{gate}"] = np.zeros((hidden_dim, input_dim))
        kw[f"u_{gate}"] = np.zeros((hidden_dim, hidden_dim))
        kw[f"b_{gate}"] = np.zeros(hidden_dim)
    return LstmCellParams(input_dim=input_dim, hidden_dim=hidden_dim, **kw)


@dataclass
class LstmStepCache:
    """Everything from one forward step needed for exact backprop."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    pre_i: np.ndarray
    pre_f: np.ndarray
    pre_o: np.ndarray
    pre_g: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    h: np.ndarray


def lstm_forward(params: LstmCellParams, x: np.ndarray, h_prev: np.ndarray,
                 c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray, LstmStepCache]:
    """One LSTM step.

    i, f, o are sigmoid gates, g the tanh candidate:
        c = f * c_prev + i * g
        h = o * tanh(c)
    """
    if x.shape != (params.input_dim,):
        raise ValueError(f"input must have shape ({params.input_dim},), got {x.shape}")
    if h_prev.shape != (params.hidden_dim,) or c_prev.shape != (params.hidden_dim,):
        raise ValueError(f"state must have shape ({params.hidden_dim},)")

    pre_i = params.w_i @ x + params.u_i @ h_prev + params.b_i
    pre_f = params.w_f @ x + params.u_f @ h_prev + params.b_f
    pre_o = params.w_o @ x + params.u_o @ h_prev + params.b_o
    pre_g = params.w_g @ x + params.u_g @ h_prev + params.b_g
    i = sigmoid(pre_i)
    f = sigmoid(pre_f)
    o = sigmoid(pre_o)
    g = np.tanh(pre_g)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    cache = LstmStepCache(x=x, h_prev=h_prev, c_prev=c_prev,
                          pre_i=pre_i, pre_f=pre_f, pre_o=pre_o, pre_g=pre_g,
                          i=i, f=f, o=o, g=g, c=c, h=h)
    return h, c, cache


def lstm_zero_grads(params: LstmCellParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.tensors().items()}


def lstm_backward(params: LstmCellParams, caches: list[LstmStepCache],
                  output_grads: list[np.ndarray]) -> tuple[dict[str, np.ndarray], list[np.ndarray]]:
    """Backprop through time over a full forward pass.

    ``output_grads[t]`` is dLoss/dh_t. Returns accumulated parameter
    gradients (same keys as ``params.tensors()``) and per-step input
    gradients. No truncation: gradients are exact.
    """
    if len(caches) != len(output_grads):
        raise ValueError("need one output gradient per cached step")
    for t, cache in enumerate(caches):
        if cache.x.shape != (params.input_dim,) or cache.h.shape != (params.hidden_dim,):
            raise ValueError(f"cache at step {t} does not match params dimensions")

    grads = lstm_zero_grads(params)
    d_inputs: list[np.ndarray] = [np.zeros(0)] * len(caches)
    dh_next = np.zeros(params.hidden_dim)
    dc_next = np.zeros(params.hidden_dim)

    for t in range(len(caches) - 1, -1, -1):
        cc = caches[t]
        dh = output_grads[t] + dh_next
        tanh_c = np.tanh(cc.c)
        dc = dc_next + dh * cc.o * (1.0 - tanh_c * tanh_c)

        d_pre = {
            "o": dh * tanh_c * cc.o * (1.0 - cc.o),
            "i": dc * cc.g * cc.i * (1.0 - cc.i),
            "f": dc * cc.c_prev * cc.f * (1.0 - cc.f),
            "g": dc * cc.i * (1.0 - cc.g * cc.g),
        }

        dx = np.zeros(params.input_dim)
        dh_next = np.zeros(params.hidden_dim)
        for gate, dp in d_pre.items():
            grads[f"lstm.w_{gate}"] += np.outer(dp, cc.x)
            grads[f"lstm.u_{gate}"] += np.outer(dp, cc.h_prev)
            grads[f"lstm.b_{gate}"] += dp
            dx += getattr(params, f"w_{gate}").T @ dp
            dh_next += getattr(params, f"u_{gate}").T @ dp
        d_inputs[t] = dx
        dc_next = dc * cc.f

    return grads, d_inputs


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction)."""
    if logits.size == 0:
        raise ValueError("softmax of empty logits")
    shifted = logits - np.max(logits)
    exps = np.exp(shifted)
    return exps / np.sum(exps)


def softmax_sample(logits: np.ndarray, rng: np.random.Generator
                   ) -> tuple[int, float, np.ndarray]:
    """Sample an index from softmax(logits) with one uniform draw.

    Inverse CDF: the index is the first position whose cumulative
    probability exceeds the draw. Returns (index, log prob of index, probs).
    """
    probs = softmax_probs(logits)
    u = rng.random()
    index = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    index = min(index, len(probs) - 1)  # guard against cumsum rounding below 1
    return index, float(np.log(probs[index])), probs


@dataclass
class AdamState:
    """ADAM moment accumulators for a named parameter set (ascent convention)."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("decay rates must lie in [0, 1)")
        if self.t < 0:
            raise ValueError("timestep must be >= 0")

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], lr: float, **kw) -> "AdamState":
        state = cls(lr=lr, **kw)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> None:
    """One bias-corrected ADAM step, in place.

    Gradient ascent: callers pass reward gradients and the update is added,
    so params move toward higher reward.
    """
    if set(grads) != set(params):
        raise ValueError("gradient keys do not match parameter keys")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correct1 = 1.0 - b1 ** state.t
    correct2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p += state.lr * (m / correct1) / (np.sqrt(v / correct2) + state.eps)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    """L2 norm over all entries of all tensors."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale grads in place so their global norm is at most max_norm.

    Returns the norm before clipping.
    """
    norm = global_norm(grads)
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
