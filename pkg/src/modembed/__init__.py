"""Unsupervised 1-D embedding of radio I/Q signals.

A variational autoencoder maps per-timestep feature vectors (raw I/Q, lag
differences, windowed lagged correlations) to a scalar latent trajectory;
2D histograms of (z_t, z_{t+1} - z_t) act as modulation signatures that
are compared with a sign-flip-invariant total-variation distance.
"""

__version__ = "0.1.0"

from modembed.features import FeatureConfig, FeatureSeries, TargetSeries
from modembed.signals import (
    Dataset,
    DatasetSpec,
    IqFrame,
    ModulationKind,
    apply_awgn,
    generate_dataset,
    generate_frame,
    measure_snr,
)
from modembed.signature import EmbeddingSeries, Signature, embed_frame, histogram2d
from modembed.training import TrainConfig, train
from modembed.vae import Architecture, LossBreakdown, NetworkParams

__all__ = [
    "Architecture",
    "Dataset",
    "DatasetSpec",
    "EmbeddingSeries",
    "FeatureConfig",
    "FeatureSeries",
    "IqFrame",
    "LossBreakdown",
    "ModulationKind",
    "NetworkParams",
    "Signature",
    "TargetSeries",
    "TrainConfig",
    "apply_awgn",
    "embed_frame",
    "generate_dataset",
    "generate_frame",
    "histogram2d",
    "measure_snr",
    "train",
]
