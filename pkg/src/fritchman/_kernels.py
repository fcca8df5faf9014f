"""Compiled inner loops for sequence sampling and forward-backward passes.

All kernels work on plain float64/uint8 arrays. Good states are indices
``0..n_good-1``; a good state emits 0 and a bad state emits 1.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sample_chain(cum_initial, cum_transition, uniforms, states):
    n = cum_initial.shape[0]
    length = uniforms.shape[0]
    if length == 0:
        return
    s = 0
    u = uniforms[0]
    while s < n - 1 and u >= cum_initial[s]:
        s += 1
    states[0] = s
    for t in range(1, length):
        u = uniforms[t]
        nxt = 0
        while nxt < n - 1 and u >= cum_transition[s, nxt]:
            nxt += 1
        s = nxt
        states[t] = s


@njit(cache=True)
def forward(transition, initial, obs, n_good, alpha, scale):
    """Scaled forward pass. Returns -1 on success or the 0-based failing step."""
    n = transition.shape[0]
    length = obs.shape[0]
    for t in range(length):
        total = 0.0
        for j in range(n):
            if (j < n_good) == (obs[t] == 0):
                if t == 0:
                    v = initial[j]
                else:
                    v = 0.0
                    for i in range(n):
                        v += alpha[t - 1, i] * transition[i, j]
            else:
                v = 0.0
            alpha[t, j] = v
            total += v
        if not total > 0.0:
            return t
        scale[t] = total
        for j in range(n):
            alpha[t, j] /= total
    return -1


@njit(cache=True)
def backward(transition, obs, n_good, scale, beta):
    n = transition.shape[0]
    length = obs.shape[0]
    for i in range(n):
        beta[length - 1, i] = 1.0
    for t in range(length - 2, -1, -1):
        nxt_bad = obs[t + 1] != 0
        for i in range(n):
            v = 0.0
            for j in range(n):
                if (j >= n_good) == nxt_bad:
                    v += transition[i, j] * beta[t + 1, j]
            beta[t, i] = v / scale[t + 1]


@njit(cache=True)
def expected_counts(transition, obs, n_good, alpha, beta, scale, xi_sum):
    """Accumulate sum over t of P(state_t=i, state_t+1=j | obs) into ``xi_sum``."""
    n = transition.shape[0]
    length = obs.shape[0]
    for t in range(length - 1):
        nxt_bad = obs[t + 1] != 0
        inv = 1.0 / scale[t + 1]
        for i in range(n):
            a = alpha[t, i]
            if a == 0.0:
                continue
            for j in range(n):
                if (j >= n_good) == nxt_bad:
                    xi_sum[i, j] += a * transition[i, j] * beta[t + 1, j] * inv
