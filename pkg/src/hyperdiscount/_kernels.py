"""Compiled inner loops for the agent's per-step work.

The agent does a handful of tiny dense operations per environment step; as
separate numpy calls their dispatch overhead dominates.  These kernels fuse
them and operate directly on the flat parameter vectors of ``MLPHead`` (same
layout: ``w_in`` row-major, ``b_in``, ``w_out`` row-major, ``b_out``; a
linear head is ``w_out, b_out``).  The numpy methods of ``MLPHead`` remain
the reference implementation and the tests hold the two together.

Without numba the same code runs as plain Python (correct, much slower).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
    COMPILED = True
except ImportError:  # pragma: no cover
    COMPILED = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def forward(p, n, hdim, m, x, h, out):
    """Head outputs for one input row; hidden activations land in ``h``."""
    if hdim == 0:
        for k in range(m):
            s = p[m * n + k]
            base = k * n
            for i in range(n):
                s += p[base + i] * x[i]
            out[k] = s
        return
    off_b_in = hdim * n
    off_w_out = off_b_in + hdim
    off_b_out = off_w_out + m * hdim
    for j in range(hdim):
        s = p[off_b_in + j]
        base = j * n
        for i in range(n):
            s += p[base + i] * x[i]
        h[j] = math.tanh(s)
    for k in range(m):
        s = p[off_b_out + k]
        base = off_w_out + k * hdim
        for j in range(hdim):
            s += p[base + j] * h[j]
        out[k] = s


@njit(cache=True)
def backward(p, n, hdim, m, x, h, d_out, g):
    """Gradient of ``d_out . outputs`` w.r.t. the flat parameters, written into ``g``."""
    if hdim == 0:
        for k in range(m):
            base = k * n
            for i in range(n):
                g[base + i] = d_out[k] * x[i]
            g[m * n + k] = d_out[k]
        return
    off_b_in = hdim * n
    off_w_out = off_b_in + hdim
    off_b_out = off_w_out + m * hdim
    for j in range(hdim):
        acc = 0.0
        for k in range(m):
            acc += d_out[k] * p[off_w_out + k * hdim + j]
        d_pre = acc * (1.0 - h[j] * h[j])
        base = j * n
        for i in range(n):
            g[base + i] = d_pre * x[i]
        g[off_b_in + j] = d_pre
    for k in range(m):
        base = off_w_out + k * hdim
        for j in range(hdim):
            g[base + j] = d_out[k] * h[j]
        g[off_b_out + k] = d_out[k]


@njit(cache=True)
def critic_pair(p, n, hdim, x, x_next, h, grad):
    """Raw critic outputs at ``x`` and ``x_next`` plus the raw gradient at ``x``."""
    out = np.empty(1)
    forward(p, n, hdim, 1, x_next, h, out)
    raw_next = out[0]
    forward(p, n, hdim, 1, x, h, out)
    raw = out[0]
    out[0] = 1.0
    backward(p, n, hdim, 1, x, h, out, grad)
    return raw, raw_next


@njit(cache=True)
def softmax_into(scores, probs):
    top = scores[0]
    for k in range(1, scores.shape[0]):
        if scores[k] > top:
            top = scores[k]
    total = 0.0
    for k in range(scores.shape[0]):
        probs[k] = math.exp(scores[k] - top)
        total += probs[k]
    for k in range(scores.shape[0]):
        probs[k] /= total


@njit(cache=True)
def policy_sample(p, n, hdim, m, x, h, scores, u):
    """Forward the policy at ``x`` (scores and ``h`` kept) and invert the CDF at ``u``."""
    forward(p, n, hdim, m, x, h, scores)
    probs = np.empty(m)
    softmax_into(scores, probs)
    acc = 0.0
    for k in range(m):
        acc += probs[k]
        if acc > u:
            return k
    return m - 1


@njit(cache=True)
def log_prob_grad(p, n, hdim, m, x, h, scores, action, grad):
    """Gradient of log pi(action | x) given the scores and activations of a forward pass."""
    d = np.empty(m)
    softmax_into(scores, d)
    for k in range(m):
        d[k] = -d[k]
    d[action] += 1.0
    backward(p, n, hdim, m, x, h, d, grad)


@njit(cache=True)
def scaled_sq_norm(scale, g):
    acc = 0.0
    for i in range(g.shape[0]):
        acc += g[i] * g[i]
    return scale * scale * acc


@njit(cache=True)
def sgd_apply(params, step, g):
    for i in range(params.shape[0]):
        params[i] += step * g[i]


@njit(cache=True)
def adam_apply(params, m, v, t, lr, b1, b2, eps, scale, g):
    """Adam step on the ascent direction ``scale * g``; bias corrections folded into scalars."""
    c1 = 1.0 - b1 ** t
    c2 = math.sqrt(1.0 - b2 ** t)
    step = lr * c2 / c1
    eps_hat = eps * c2
    for i in range(params.shape[0]):
        d = scale * g[i]
        m[i] = b1 * m[i] + (1.0 - b1) * d
        v[i] = b2 * v[i] + (1.0 - b2) * (d * d)
        params[i] += step * m[i] / (math.sqrt(v[i]) + eps_hat)
