"""Independent brute-force oracles shared by the unit and acceptance tests.

Each function restates its contract directly from the definitions with
plain Python loops, deliberately ignoring how the package computes the
same quantity.
"""

import math

import numpy as np


def brute_lag_diffs(frame, K):
    T = len(frame)
    out = np.zeros((T - K, 2 * K))
    for r, t in enumerate(range(K, T)):
        for lag in range(1, K + 1):
            out[r, lag - 1] = frame.i[t] - frame.i[t - lag]
            out[r, K + lag - 1] = frame.q[t] - frame.q[t - lag]
    return out


def brute_windowed_corr(frame, K, W):
    T = len(frame)
    t0 = W - 1 + K
    out = np.zeros((T - t0, 2 * K))
    for ch, c in enumerate((frame.i, frame.q)):
        for r, t in enumerate(range(t0, T)):
            for lag in range(1, K + 1):
                num = e1 = e2 = 0.0
                for s in range(t - W + 1, t + 1):
                    num += c[s] * c[s - lag]
                    e1 += c[s] ** 2
                    e2 += c[s - lag] ** 2
                if e1 < 1e-12 or e2 < 1e-12:
                    out[r, ch * K + lag - 1] = 0.0
                else:
                    out[r, ch * K + lag - 1] = num / np.sqrt(e1 * e2)
    return out


def brute_bin_index(v, size, value_range):
    """Scalar re-statement of the documented symmetric binning rule."""
    below = math.ceil(abs(v) * size / (2.0 * value_range)) - 1
    below = min(below, size // 2 - 1)
    if math.copysign(1.0, v) < 0:
        return size // 2 - 1 - below
    return size // 2 + below


def brute_histogram(z, size, value_range):
    counts = np.zeros((size, size))
    for a, b in zip(z[:-1], z[1:]):
        counts[brute_bin_index(a, size, value_range),
               brute_bin_index(b - a, size, value_range)] += 1
    return counts / counts.sum()


def scalar_adam_oracle(grads_per_step, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-rolled scalar Adam for a single parameter starting at 0."""
    theta, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(grads_per_step, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return theta
