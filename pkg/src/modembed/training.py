"""Mini-batch Adam training over per-timestep rows pooled from a dataset.

Rows from every frame are extracted once and pooled; each epoch shuffles
them with a seed-derived permutation and steps over full batches (the
trailing partial batch is dropped so step counts stay seed-stable).
Everything is driven by named sub-streams of the config seed, so a run is
bit-reproducible regardless of how feature extraction was parallelized.

Per-epoch progress prints as ``epoch=<n> train=<loss> holdout=<loss>``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from modembed import vae
from modembed.features import FeatureConfig, assemble_features
from modembed.signals import Dataset
from modembed.vae import Architecture, LossBreakdown, NetworkParams

# Sub-seed tags (SeedSequence((seed, tag, ...))).
_TAG_INIT = 2
_TAG_SHUFFLE = 3
_TAG_NOISE = 4
_TAG_SPLIT = 5


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta_kl: float = 1e-3
    batch_rows: int = 128
    epochs: int = 50
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_decay: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_rows < 1:
            raise ValueError("batch_rows must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class AdamState:
    m: NetworkParams
    v: NetworkParams
    step: int = 0

    @classmethod
    def zeros(cls, arch: Architecture) -> "AdamState":
        return cls(m=NetworkParams.zeros(arch), v=NetworkParams.zeros(arch))


@dataclass
class TrainHistory:
    """Per-epoch losses plus the pre-training snapshot the first epoch
    starts from (the baseline for relative-progress checks)."""

    train: List[LossBreakdown] = field(default_factory=list)
    holdout: List[LossBreakdown] = field(default_factory=list)
    initial_train: Optional[LossBreakdown] = None
    initial_holdout: Optional[LossBreakdown] = None


def adam_step(params: NetworkParams, grads: NetworkParams, state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8):
    """One bias-corrected Adam update; returns fresh (params, state)."""
    p_arrays = params.arrays()
    g_arrays = grads.arrays()
    m_arrays = state.m.arrays()
    v_arrays = state.v.arrays()
    for p, g in zip(p_arrays, g_arrays):
        if p.shape != g.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter {p.shape}"
            )
    t = state.step + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, m_arrays, v_arrays):
        m2 = beta1 * m + (1.0 - beta1) * g
        v2 = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m2 / (1.0 - beta1**t)
        v_hat = v2 / (1.0 - beta2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m2)
        new_v.append(v2)
    arch = params.arch
    return (
        vae._from_arrays(arch, new_p),
        AdamState(
            m=vae._from_arrays(arch, new_m),
            v=vae._from_arrays(arch, new_v),
            step=t,
        ),
    )


def split_holdout(dataset: Dataset, fraction: float, seed: int):
    """Per-cell stratified split into (train, holdout), deterministic."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    train_frames, holdout_frames = [], []
    for ci, ((kind, snr), frames) in enumerate(dataset.cells().items()):
        n = len(frames)
        n_hold = int(round(n * fraction))
        if not 0 < n_hold < n:
            raise ValueError(
                f"cell ({kind}, {snr}) with {n} frames too small to split "
                f"at fraction {fraction}"
            )
        rng = np.random.default_rng(
            np.random.SeedSequence((seed, _TAG_SPLIT, ci))
        )
        perm = rng.permutation(n)
        hold_idx = set(perm[:n_hold].tolist())
        for fi, frame in enumerate(frames):
            (holdout_frames if fi in hold_idx else train_frames).append(frame)
    return Dataset(train_frames), Dataset(holdout_frames)


def extract_rows(dataset: Dataset, feat_cfg: FeatureConfig, workers: int = 1):
    """Pool feature/target rows across all frames, in frame order."""
    if not dataset.frames:
        raise ValueError("dataset is empty")

    def one(frame):
        fs, ts = assemble_features(frame, feat_cfg)
        return fs.values, ts.values

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, dataset.frames))
    else:
        pairs = [one(f) for f in dataset.frames]
    X = np.concatenate([p[0] for p in pairs], axis=0)
    Y = np.concatenate([p[1] for p in pairs], axis=0)
    return X, Y


def build_architecture(feat_cfg: FeatureConfig, overrides: Optional[dict] = None
                       ) -> Architecture:
    """Architecture with input/target dims derived from the feature config."""
    fields = {
        "input_dim": feat_cfg.feature_dim,
        "target_dim": 2 * feat_cfg.target_lag_count,
    }
    for key, value in (overrides or {}).items():
        if key in ("input_dim", "target_dim"):
            raise ValueError(f"{key} is derived from the feature config")
        fields[key] = value
    return Architecture(**fields)


def train(dataset: Dataset, feat_cfg: FeatureConfig, cfg: TrainConfig,
          arch_overrides: Optional[dict] = None, holdout_fraction: float = 0.2,
          workers: int = 1, verbose: bool = True):
    """Run the full optimization loop; returns (params, history)."""
    train_ds, holdout_ds = split_holdout(dataset, holdout_fraction, cfg.seed)
    X, Y = extract_rows(train_ds, feat_cfg, workers)
    Xh, Yh = extract_rows(holdout_ds, feat_cfg, workers)
    arch = build_architecture(feat_cfg, arch_overrides)

    params = vae.init_params(
        arch, np.random.SeedSequence((cfg.seed, _TAG_INIT))
    )
    state = AdamState.zeros(arch)
    history = TrainHistory()
    lr = cfg.learning_rate
    n_batches = X.shape[0] // cfg.batch_rows
    if n_batches < 1:
        raise ValueError(
            f"batch_rows {cfg.batch_rows} exceeds the {X.shape[0]} pooled "
            "training rows"
        )

    history.initial_train = vae.loss(params, X, Y, beta_kl=cfg.beta_kl)
    history.initial_holdout = vae.loss(params, Xh, Yh, beta_kl=cfg.beta_kl)

    for epoch in range(cfg.epochs):
        perm = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, _TAG_SHUFFLE, epoch))
        ).permutation(X.shape[0])
        for step in range(n_batches):
            sel = perm[step * cfg.batch_rows:(step + 1) * cfg.batch_rows]
            _, grads = vae.grad(
                params, X[sel], Y[sel], beta_kl=cfg.beta_kl,
                seed=(cfg.seed, _TAG_NOISE, epoch, step),
            )
            params, state = adam_step(
                params, grads, state, lr,
                cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
            )
        lr *= cfg.lr_decay
        history.train.append(vae.loss(params, X, Y, beta_kl=cfg.beta_kl))
        history.holdout.append(vae.loss(params, Xh, Yh, beta_kl=cfg.beta_kl))
        if verbose:
            print(
                f"epoch={epoch + 1} train={history.train[-1].total:.6f} "
                f"holdout={history.holdout[-1].total:.6f}",
                flush=True,
            )
    return params, history
