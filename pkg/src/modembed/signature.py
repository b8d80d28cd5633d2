"""Modulation signatures: scalar embeddings, (z, dz) 2D histograms,
flip-invariant distances, and the colored-trajectory image artifact.

A signature bins the pairs (z_t, z_{t+1} - z_t) over [-R, R]^2 (clip to
edge) and normalizes to unit mass.  Independently trained latents agree
only up to sign, so ``signature_distance`` takes the minimum of the
total-variation distance against the plain and the sign-flipped histogram.
Binning uses a sign-symmetric edge rule (see ``kernels.bin_index_array``)
so negating an embedding mirrors its histogram exactly, except in the
degenerate case of exactly repeated consecutive z values, where the
difference +0.0 carries no sign to flip.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from modembed import kernels
from modembed.features import FeatureConfig, assemble_features
from modembed.signals import IqFrame
from modembed.vae import NetworkParams, encode

DEFAULT_BINS = 64
DEFAULT_RANGE = 3.0


@dataclass
class EmbeddingSeries:
    z: np.ndarray
    t_offset: int

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        if self.z.ndim != 1:
            raise ValueError("embedding must be a 1-D series")
        if not np.isfinite(self.z).all():
            raise ValueError("embedding entries must be finite")

    def __len__(self) -> int:
        return self.z.shape[0]


@dataclass
class Signature:
    bins: np.ndarray  # (size, size); axis 0 bins z_t, axis 1 bins dz_t
    size: int
    value_range: float
    normalized: bool = True


def embed_frame(params: NetworkParams, frame: IqFrame,
                feat_cfg: FeatureConfig) -> EmbeddingSeries:
    """Deterministic per-timestep latent trajectory (mu head, infer mode)."""
    if feat_cfg.feature_dim != params.arch.input_dim:
        raise ValueError(
            f"feature config produces dimension {feat_cfg.feature_dim} but "
            f"the checkpoint expects {params.arch.input_dim}"
        )
    fs, _ = assemble_features(frame, feat_cfg)
    mu, _ = encode(params, fs.values)
    return EmbeddingSeries(z=mu, t_offset=fs.t_offset)


def histogram2d(emb: EmbeddingSeries, size: int = DEFAULT_BINS,
                value_range: float = DEFAULT_RANGE) -> Signature:
    """Unit-mass histogram of (z_t, z_{t+1} - z_t) pairs."""
    if len(emb) < 2:
        raise ValueError("embedding must hold at least 2 values")
    if size < 2 or size % 2 != 0:
        raise ValueError("bin count must be even and >= 2")
    if value_range <= 0:
        raise ValueError("value_range must be > 0")
    z = emb.z
    counts = kernels.hist2d_counts(
        np.ascontiguousarray(z[:-1]),
        np.ascontiguousarray(z[1:] - z[:-1]),
        size, value_range,
    )
    return Signature(
        bins=counts / counts.sum(), size=size, value_range=value_range
    )


def flip_signature(sig: Signature) -> Signature:
    """The histogram of the sign-negated latent: both axes reversed."""
    return Signature(
        bins=sig.bins[::-1, ::-1].copy(), size=sig.size,
        value_range=sig.value_range, normalized=sig.normalized,
    )


def _check_compatible(a: Signature, b: Signature):
    if a.size != b.size or a.value_range != b.value_range:
        raise ValueError(
            f"signature mismatch: ({a.size}, R={a.value_range}) vs "
            f"({b.size}, R={b.value_range})"
        )


def signature_distance(a: Signature, b: Signature) -> float:
    """min over sign flips of the total-variation distance, in [0, 1]."""
    _check_compatible(a, b)
    plain = 0.5 * float(np.abs(a.bins - b.bins).sum())
    flipped = 0.5 * float(np.abs(a.bins - b.bins[::-1, ::-1]).sum())
    return min(plain, flipped)


def mean_signature(sigs) -> Signature:
    sigs = list(sigs)
    if not sigs:
        raise ValueError("cannot average an empty signature group")
    for s in sigs[1:]:
        _check_compatible(sigs[0], s)
    stack = np.stack([s.bins for s in sigs])
    return Signature(
        bins=stack.mean(axis=0), size=sigs[0].size,
        value_range=sigs[0].value_range,
    )


def distance_matrix(groups: dict):
    """Pairwise distances between per-group mean signatures.

    ``groups`` maps label -> list of signatures; returns (labels, matrix)
    with labels in input order.
    """
    if not groups:
        raise ValueError("no signature groups given")
    labels = list(groups.keys())
    means = []
    for label in labels:
        if not groups[label]:
            raise ValueError(f"group {label!r} is empty")
        means.append(mean_signature(groups[label]))
    n = len(labels)
    mat = np.zeros((n, n))
    for r in range(n):
        for c in range(r + 1, n):
            d = signature_distance(means[r], means[c])
            mat[r, c] = mat[c, r] = d
    return labels, mat


def colormap() -> np.ndarray:
    """256-entry diverging blue -> near-white -> red map, as (256, 3) uint8."""
    anchors = np.array([[33.0, 102.0, 172.0],
                        [247.0, 247.0, 247.0],
                        [178.0, 24.0, 43.0]])
    idx = np.arange(256)
    out = np.empty((256, 3))
    first = idx <= 128
    frac = idx[first] / 128.0
    out[first] = anchors[0] + (anchors[1] - anchors[0]) * frac[:, None]
    frac = (idx[~first] - 128) / 127.0
    out[~first] = anchors[1] + (anchors[2] - anchors[1]) * frac[:, None]
    return np.round(out).astype(np.uint8)


def color_index(z: float, value_range: float = DEFAULT_RANGE) -> int:
    """Colormap entry for a latent value clipped to [-R, R]."""
    clipped = min(max(z, -value_range), value_range)
    return int(round((clipped + value_range) / (2.0 * value_range) * 255.0))


def colorize_trajectory(frame: IqFrame, emb: EmbeddingSeries,
                        canvas: int = 256,
                        value_range: float = DEFAULT_RANGE) -> np.ndarray:
    """Scatter of the valid (i_t, q_t) samples colored by z_t.

    Returns an (canvas, canvas, 3) uint8 image on a black background;
    points are drawn in order of increasing |z| so extreme latents stay
    visible when samples collide.
    """
    t0 = emb.t_offset
    if t0 < 0 or t0 + len(emb) > len(frame):
        raise ValueError("embedding does not align with the frame")
    x = frame.i[t0:t0 + len(emb)]
    y = frame.q[t0:t0 + len(emb)]
    bound = 1.05 * max(float(np.abs(x).max()), float(np.abs(y).max()), 1e-9)
    cols = np.round((x + bound) / (2.0 * bound) * (canvas - 1)).astype(int)
    rows = (canvas - 1) - np.round((y + bound) / (2.0 * bound) * (canvas - 1)).astype(int)
    cmap = colormap()
    image = np.zeros((canvas, canvas, 3), dtype=np.uint8)
    order = np.argsort(np.abs(emb.z), kind="stable")
    for k in order:
        image[rows[k], cols[k]] = cmap[color_index(emb.z[k], value_range)]
    return image


def signature_to_pgm(sig: Signature) -> np.ndarray:
    """Grayscale rendering scaled so the fullest bin is white."""
    peak = sig.bins.max()
    if peak <= 0:
        return np.zeros((sig.size, sig.size))
    return sig.bins / peak * 255.0


def save_signature_csv(sig: Signature, path) -> None:
    """Row-major CSV with the header line ``# B=<B> R=<R>``."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# B={sig.size} R={sig.value_range!r}\n")
        writer = csv.writer(fh)
        for row in sig.bins:
            writer.writerow([repr(float(v)) for v in row])


def load_signature_csv(path) -> Signature:
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("# B="):
            raise ValueError(f"{path}: missing signature header")
        parts = dict(p.split("=", 1) for p in header[2:].split())
        size = int(parts["B"])
        value_range = float(parts["R"])
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    bins = np.asarray(rows)
    if bins.shape != (size, size):
        raise ValueError(f"{path}: expected {size}x{size} bins, got {bins.shape}")
    return Signature(bins=bins, size=size, value_range=value_range)
