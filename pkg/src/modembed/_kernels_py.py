"""Pure-numpy implementations of the per-timestep hot kernels.

This module mirrors ``modembed._kernels`` (the compiled Cython extension)
and is the import-time fallback when the extension is unavailable.  Both
backends honor the same contracts; ``modembed.kernels`` picks one at
import.

Contracts
---------
lag_diff_matrix(i, q, lag_count)
    Rows over t = lag_count..T-1.  Column layout:
    [i_t - i_{t-1}, ..., i_t - i_{t-K}, q_t - q_{t-1}, ..., q_t - q_{t-K}].

windowed_corr_matrix(i, q, lag_count, window)
    Rows over t = window - 1 + lag_count .. T-1.  For channel c and lag l,
    r = sum_{s=t-W+1..t} c_s * c_{s-l} / sqrt(sum c_s^2 * sum c_{s-l}^2)
    over the same trailing window of s; r = 0 when either window energy is
    below 1e-12; results clipped to [-1, 1].  Column layout:
    [i-corr lag 1..K, q-corr lag 1..K].

hist2d_counts(x, y, size, value_range)
    Unnormalized 2D bin counts over [-R, R]^2 with clip-to-edge and the
    sign-symmetric edge tie-break of ``bin_index_array``.
"""

import numpy as np

ENERGY_FLOOR = 1e-12


def lag_diff_matrix(i, q, lag_count):
    n = i.shape[0]
    rows = n - lag_count
    out = np.empty((rows, 2 * lag_count))
    base_i = i[lag_count:]
    base_q = q[lag_count:]
    for lag in range(1, lag_count + 1):
        out[:, lag - 1] = base_i - i[lag_count - lag:n - lag]
        out[:, lag_count + lag - 1] = base_q - q[lag_count - lag:n - lag]
    return out


def _moving_sum(x, window):
    return np.lib.stride_tricks.sliding_window_view(x, window).sum(axis=1)


def windowed_corr_matrix(i, q, lag_count, window):
    n = i.shape[0]
    t0 = window - 1 + lag_count
    rows = n - t0
    out = np.empty((rows, 2 * lag_count))
    for ch, c in enumerate((i, q)):
        energy = _moving_sum(c * c, window)
        for lag in range(1, lag_count + 1):
            prod = c[lag:] * c[:n - lag]
            num = _moving_sum(prod, window)[t0 - lag - window + 1:][:rows]
            e_cur = energy[t0 - window + 1:][:rows]
            e_lag = energy[t0 - lag - window + 1:][:rows]
            dead = (e_cur < ENERGY_FLOOR) | (e_lag < ENERGY_FLOOR)
            denom = np.sqrt(e_cur * e_lag)
            denom[dead] = 1.0
            r = np.clip(num / denom, -1.0, 1.0)
            r[dead] = 0.0
            out[:, ch * lag_count + lag - 1] = r
    return out


def bin_index_array(values, size, value_range):
    """Bin indices over [-R, R] with size/2 bins per sign.

    Computed from |v| so that v and -v always land in mirrored bins
    (index k and size-1-k), including values that fall exactly on a bin
    edge: positive edge values join the bin below, negative ones the bin
    above, and the sign of a floating-point zero picks its side.  Values
    beyond +-R clip to the edge bins.  ``size`` must be even.
    """
    scale = size / (2.0 * value_range)
    below = np.ceil(np.abs(values) * scale).astype(np.int64) - 1
    np.minimum(below, size // 2 - 1, out=below)
    half = size // 2
    return np.where(np.signbit(values), half - 1 - below, half + below)


def hist2d_counts(x, y, size, value_range):
    kx = bin_index_array(x, size, value_range)
    ky = bin_index_array(y, size, value_range)
    flat = np.bincount(kx * size + ky, minlength=size * size)
    return flat.reshape(size, size).astype(np.float64)
