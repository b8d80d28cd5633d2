"""Robustness experiments: train two pipeline conditions from one seed and
compare them cell by cell in signature space, plus a discrimination score
quantifying how well signatures separate modulations.

Latent spaces from separate trainings are not mutually aligned, so
conditions are always compared through their (z, dz) histograms, which are
well-defined whatever the feature dimension and quotient the sign
ambiguity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from modembed.features import FeatureConfig
from modembed.signals import Dataset, ModulationKind
from modembed.signature import (
    histogram2d,
    embed_frame,
    mean_signature,
    signature_distance,
)
from modembed.training import TrainConfig, split_holdout, train


@dataclass(frozen=True)
class LagChange:
    """Lag-difference features only, lag count A vs B."""

    lags_a: int = 8
    lags_b: int = 16


@dataclass(frozen=True)
class FeatureSetChange:
    """Lag differences plus correlations (A) vs differences only (B); the
    defaults 8-with-correlations vs 16-without give equal dimension."""

    lags_a: int = 8
    lags_b: int = 16


@dataclass(frozen=True)
class LeaveOneModulationOut:
    held: ModulationKind = ModulationKind.WBFM


@dataclass(frozen=True)
class LeaveOneSnrOut:
    held_db: float = 6.0


MismatchKind = Union[LagChange, FeatureSetChange,
                     LeaveOneModulationOut, LeaveOneSnrOut]


@dataclass
class MismatchReport:
    kind: str
    entries: List[Tuple[ModulationKind, float, float]]
    train_cells_a: List[Tuple[ModulationKind, float]]
    train_cells_b: List[Tuple[ModulationKind, float]]
    wall_time_s: float = 0.0

    def distance(self, kind: ModulationKind, snr_db: float) -> float:
        for k, s, d in self.entries:
            if k == kind and s == snr_db:
                return d
        raise KeyError(f"no entry for ({kind}, {snr_db})")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("modulation,snr_db,distance\n")
            for kind, snr, d in self.entries:
                fh.write(f"{kind.name},{float(snr)!r},{float(d)!r}\n")

    def heatmap(self) -> np.ndarray:
        """Distances as a (modulation x snr) gray image, 32x32 px per cell."""
        mods = sorted({k for k, _, _ in self.entries}, key=int)
        snrs = sorted({s for _, s, _ in self.entries})
        grid = np.zeros((len(mods), len(snrs)))
        for kind, snr, d in self.entries:
            grid[mods.index(kind), snrs.index(snr)] = d
        return np.kron(grid * 255.0, np.ones((32, 32)))


def _conditions(kind: MismatchKind, base: FeatureConfig):
    tgt = base.target_lag_count
    win = base.corr_window
    if isinstance(kind, LagChange):
        a = FeatureConfig(kind.lags_a, False, win, tgt)
        b = FeatureConfig(kind.lags_b, False, win, tgt)
        return a, b, None
    if isinstance(kind, FeatureSetChange):
        a = FeatureConfig(kind.lags_a, True, win, tgt)
        b = FeatureConfig(kind.lags_b, False, win, tgt)
        return a, b, None
    if isinstance(kind, LeaveOneModulationOut):
        return base, base, ("mod", ModulationKind(kind.held))
    if isinstance(kind, LeaveOneSnrOut):
        return base, base, ("snr", float(kind.held_db))
    raise TypeError(f"unknown mismatch kind {kind!r}")


def run_mismatch(kind: MismatchKind, dataset: Dataset,
                 feat_cfg: Optional[FeatureConfig] = None,
                 train_cfg: Optional[TrainConfig] = None,
                 arch_overrides: Optional[dict] = None,
                 bins: int = 64, value_range: float = 3.0,
                 holdout_fraction: float = 0.2,
                 workers: int = 1, verbose: bool = False) -> MismatchReport:
    """Train conditions A and B from the same seed and report per-cell
    signature distances over the shared evaluation split.

    Leave-one-out variants exclude the held modulation or SNR from
    condition B's training only; evaluation always covers the full grid,
    so the report shows how the network embeds signals it never saw.
    """
    started = time.monotonic()
    feat_cfg = feat_cfg or FeatureConfig()
    train_cfg = train_cfg or TrainConfig()
    feat_a, feat_b, held = _conditions(kind, feat_cfg)

    train_ds, eval_ds = split_holdout(dataset, holdout_fraction, train_cfg.seed)
    train_a = train_ds
    train_b = train_ds
    if held is not None:
        what, value = held
        if what == "mod":
            if value not in train_ds.modulations():
                raise ValueError(f"held modulation {value.name} not in dataset")
            train_b = train_ds.filtered(
                modulations=[m for m in train_ds.modulations() if m != value]
            )
        else:
            if value not in train_ds.snrs():
                raise ValueError(f"held SNR {value} dB not in dataset")
            train_b = train_ds.filtered(
                snrs_db=[s for s in train_ds.snrs() if s != value]
            )

    params_a, _ = train(train_a, feat_a, train_cfg,
                        arch_overrides=arch_overrides,
                        holdout_fraction=holdout_fraction,
                        workers=workers, verbose=verbose)
    params_b, _ = train(train_b, feat_b, train_cfg,
                        arch_overrides=arch_overrides,
                        holdout_fraction=holdout_fraction,
                        workers=workers, verbose=verbose)

    entries = []
    for (mod, snr), frames in eval_ds.cells().items():
        sig_a = mean_signature(
            histogram2d(embed_frame(params_a, f, feat_a), bins, value_range)
            for f in frames
        )
        sig_b = mean_signature(
            histogram2d(embed_frame(params_b, f, feat_b), bins, value_range)
            for f in frames
        )
        entries.append((mod, snr, signature_distance(sig_a, sig_b)))

    return MismatchReport(
        kind=type(kind).__name__,
        entries=entries,
        train_cells_a=sorted(train_a.cells().keys()),
        train_cells_b=sorted(train_b.cells().keys()),
        wall_time_s=time.monotonic() - started,
    )


INTRA_FLOOR = 1e-9


def discrimination_score(signatures: dict):
    """(inter, intra, ratio) over labeled signature groups at one SNR.

    intra: mean distance between the group means of the first and second
    half of each modulation's signatures.  inter: mean distance between
    whole-group means over modulation pairs.  ratio is inter/intra with
    intra floored at INTRA_FLOOR; when intra collapses below the floor the
    ratio is undefined and reported as nan.
    """
    labels = list(signatures.keys())
    if len(labels) < 2:
        raise ValueError("need at least 2 modulations")
    intra_vals = []
    means = {}
    for label in labels:
        sigs = signatures[label]
        if len(sigs) < 2:
            raise ValueError(f"group {label!r} needs at least 2 signatures")
        half = len(sigs) // 2
        intra_vals.append(signature_distance(
            mean_signature(sigs[:half]), mean_signature(sigs[half:])
        ))
        means[label] = mean_signature(sigs)
    inter_vals = [
        signature_distance(means[a], means[b])
        for idx, a in enumerate(labels) for b in labels[idx + 1:]
    ]
    inter = float(np.mean(inter_vals))
    intra = float(np.mean(intra_vals))
    ratio = float("nan")
    if intra > INTRA_FLOOR:
        ratio = inter / max(intra, INTRA_FLOOR)
    return inter, intra, ratio


def label_shuffle_ratios(signatures: dict, shuffles: int, rng) -> List[float]:
    """Discrimination ratios under random label permutations (the control
    experiment: shuffling should drive the ratio toward 1)."""
    pool = [s for sigs in signatures.values() for s in sigs]
    sizes = [len(sigs) for sigs in signatures.values()]
    labels = list(signatures.keys())
    ratios = []
    for _ in range(shuffles):
        perm = rng.permutation(len(pool))
        shuffled = {}
        at = 0
        for label, size in zip(labels, sizes):
            shuffled[label] = [pool[k] for k in perm[at:at + size]]
            at += size
        ratios.append(discrimination_score(shuffled)[2])
    return ratios
