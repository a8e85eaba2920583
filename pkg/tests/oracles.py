"""Independent reference implementations used as test oracles.

Everything here is deliberately written straight-line (scalar loops, no
shared code with the package) so the tests compare two separate routes to
the same answer.
"""

from __future__ import annotations

import math

import numpy as np


def scalar_lstm_step(params, x, h_prev, c_prev):
    """One LSTM step computed scalar by scalar with math.* only."""
    n = params.hidden_dim

    def gate(w, u, b, squash):
        out = []
        for r in range(n):
            acc = b[r]
            for j in range(len(x)):
                acc += w[r, j] * x[j]
            for j in range(n):
                acc += u[r, j] * h_prev[j]
            out.append(squash(acc))
        return out

    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    i = gate(params.w_i, params.u_i, params.b_i, sig)
    f = gate(params.w_f, params.u_f, params.b_f, sig)
    o = gate(params.w_o, params.u_o, params.b_o, sig)
    g = gate(params.w_g, params.u_g, params.b_g, math.tanh)
    c = [f[r] * c_prev[r] + i[r] * g[r] for r in range(n)]
    h = [o[r] * math.tanh(c[r]) for r in range(n)]
    return np.array(h), np.array(c)


def central_diff_grads(loss_fn, tensors: dict[str, np.ndarray],
                       eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of loss_fn() w.r.t. every tensor entry.

    loss_fn takes no arguments and reads the (mutated in place) tensors.
    """
    grads = {}
    for name, arr in tensors.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + eps
            up = loss_fn()
            arr[ix] = orig - eps
            down = loss_fn()
            arr[ix] = orig
            g[ix] = (up - down) / (2.0 * eps)
        grads[name] = g
    return grads


def max_rel_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray],
                  floor: float = 1e-5) -> float:
    """Worst relative error across tensors.

    Entries below ``floor`` in both routes are held to absolute agreement of
    rtol*floor instead: central differences of an objective of magnitude |f|
    carry ~|f|*1e-16/(2*eps) cancellation noise, which would swamp a pure
    ratio on near-zero gradients. Pick the floor so rtol*floor sits well
    above that noise (1e-5 for unit-scale objectives, 1e-3 for full
    controller rollouts where |f| is tens).
    """
    worst = 0.0
    for name in analytic:
        a = analytic[name]
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def adam_reference(theta0: float, grads: list[float], lr: float,
                   beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> float:
    """Scalar ADAM ascent recurrence, step by step."""
    theta, m, v = theta0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        theta += lr * m_hat / (math.sqrt(v_hat) + eps)
    return theta


def brute_force_front(points):
    """O(n^2) non-dominated filter; duplicates keep the smallest iteration."""
    def dominated(p, q):
        return (q.accuracy >= p.accuracy and q.energy <= p.energy
                and (q.accuracy > p.accuracy or q.energy < p.energy))

    kept = []
    for p in points:
        if any(dominated(p, q) for q in points):
            continue
        twin = [q for q in points
                if q.accuracy == p.accuracy and q.energy == p.energy]
        if min(t.iteration for t in twin) < p.iteration:
            continue
        if any(k.accuracy == p.accuracy and k.energy == p.energy for k in kept):
            continue
        kept.append(p)
    kept.sort(key=lambda q: (q.energy, q.accuracy))
    return kept
