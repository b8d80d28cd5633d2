"""Per-timestep feature vectors: raw I/Q, lag differences, windowed lagged
autocorrelations, and the aligned multi-lag prediction targets.

Row layout of an assembled feature matrix (N = 2 + 2K, + 2K with
correlations):

    [i_t, q_t | i-diffs lag 1..K | q-diffs lag 1..K
             | i-corrs lag 1..K | q-corrs lag 1..K]

Valid timesteps are t in [W-1+K, T-1-L]: the correlation warmup W-1+K is
always reserved, even when correlations are excluded, so that the row
count and alignment do not depend on the correlation toggle (this keeps
feature-set ablations row-for-row comparable).  Edge timesteps are
dropped, never padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from modembed import kernels
from modembed.signals import IqFrame


@dataclass(frozen=True)
class FeatureConfig:
    lag_count: int = 8
    include_correlations: bool = True
    corr_window: int = 16
    target_lag_count: int = 8

    def __post_init__(self):
        if self.lag_count < 1:
            raise ValueError("lag_count must be >= 1")
        if self.corr_window < 2:
            raise ValueError("corr_window must be >= 2")
        if self.target_lag_count < 1:
            raise ValueError("target_lag_count must be >= 1")

    @property
    def feature_dim(self) -> int:
        n = 2 + 2 * self.lag_count
        if self.include_correlations:
            n += 2 * self.lag_count
        return n

    @property
    def warmup(self) -> int:
        """First valid timestep: W - 1 + K."""
        return self.corr_window - 1 + self.lag_count

    @property
    def min_frame_len(self) -> int:
        return self.warmup + self.target_lag_count + 1

    def valid_rows(self, frame_len: int) -> int:
        return frame_len - self.warmup - self.target_lag_count


@dataclass
class FeatureSeries:
    values: np.ndarray  # (T_valid, N)
    t_offset: int
    config: FeatureConfig


@dataclass
class TargetSeries:
    """Row t holds [i_{t+1}..i_{t+L}, q_{t+1}..q_{t+L}], aligned with its
    FeatureSeries."""

    values: np.ndarray  # (T_valid, 2L)
    t_offset: int


def lag_differences(frame: IqFrame, lag_count: int) -> np.ndarray:
    """Rows over t = K..T-1; columns [i diffs lag 1..K | q diffs lag 1..K]."""
    if lag_count < 1:
        raise ValueError("lag_count must be >= 1")
    if len(frame) <= lag_count:
        raise ValueError(
            f"frame of length {len(frame)} too short for lag_count {lag_count}"
        )
    return kernels.lag_diff_matrix(frame.i, frame.q, lag_count)


def windowed_autocorrelation(frame: IqFrame, lag_count: int, window: int) -> np.ndarray:
    """Rows over t = W-1+K..T-1; columns [i corrs lag 1..K | q corrs 1..K].

    Each entry is the trailing-window normalized lagged product of one
    channel with itself, zero when either window energy is below 1e-12.
    """
    if lag_count < 1 or window < 2:
        raise ValueError("need lag_count >= 1 and window >= 2")
    if len(frame) < window + lag_count:
        raise ValueError(
            f"frame of length {len(frame)} too short for window {window} "
            f"plus lag {lag_count}"
        )
    return kernels.windowed_corr_matrix(frame.i, frame.q, lag_count, window)


def assemble_features(frame: IqFrame, cfg: FeatureConfig):
    """Build the aligned (FeatureSeries, TargetSeries) pair for one frame."""
    T = len(frame)
    if T < cfg.min_frame_len:
        raise ValueError(
            f"frame of length {T} too short for this feature config; "
            f"minimum is {cfg.min_frame_len}"
        )
    t0 = cfg.warmup
    rows = cfg.valid_rows(T)
    t_end = t0 + rows  # one past the last valid t

    cols = [frame.i[t0:t_end, None], frame.q[t0:t_end, None]]
    diffs = kernels.lag_diff_matrix(frame.i, frame.q, cfg.lag_count)
    cols.append(diffs[t0 - cfg.lag_count:t0 - cfg.lag_count + rows])
    if cfg.include_correlations:
        corrs = kernels.windowed_corr_matrix(
            frame.i, frame.q, cfg.lag_count, cfg.corr_window
        )
        cols.append(corrs[:rows])
    values = np.hstack(cols)

    L = cfg.target_lag_count
    targets = np.empty((rows, 2 * L))
    for lag in range(1, L + 1):
        targets[:, lag - 1] = frame.i[t0 + lag:t_end + lag]
        targets[:, L + lag - 1] = frame.q[t0 + lag:t_end + lag]

    return (
        FeatureSeries(values=values, t_offset=t0, config=cfg),
        TargetSeries(values=targets, t_offset=t0),
    )
