"""Persistence: raw cf32 sample files, the dataset manifest, and network
checkpoints.

cf32 is the de-facto SDR interchange format: interleaved little-endian
IEEE-754 float32, order i0, q0, i1, q1, ...  A dataset directory holds one
cf32 file per (modulation, SNR) cell plus ``manifest.json``:

    {"version": 1,
     "entries": [{"path": ..., "modulation": <code 0..10>,
                  "snr_db": ..., "frame_len": ..., "frame_count": ...}]}

Checkpoint layout: magic ``DME1`` | uint32-LE header length | JSON header
(format version, architecture, feature config, train config echo, the
parameter order/shapes, payload count, and an FNV-1a 64 checksum of the
payload) | all parameter arrays as little-endian float64 in the order
``NetworkParams.named_arrays`` defines.
"""

from __future__ import annotations

import json
import os
from typing import List, Optional, Tuple

import numpy as np

from modembed.features import FeatureConfig
from modembed.signals import Dataset, IqFrame, ModulationKind
from modembed.training import TrainConfig
from modembed.vae import Architecture, NetworkParams, _from_arrays

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
CHECKPOINT_MAGIC = b"DME1"
CHECKPOINT_VERSION = 1


class Cf32FormatError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


def write_cf32(path, frames) -> None:
    """Concatenate frames as interleaved little-endian complex float32."""
    parts = []
    for frame in frames:
        inter = np.empty(2 * len(frame), dtype="<f4")
        inter[0::2] = frame.i
        inter[1::2] = frame.q
        parts.append(inter)
    blob = np.concatenate(parts) if parts else np.empty(0, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(blob.tobytes())


def read_cf32(path, frame_len: int) -> List[IqFrame]:
    """Slice a cf32 file into frames of ``frame_len`` complex samples."""
    if frame_len < 1:
        raise ValueError("frame_len must be >= 1")
    size = os.path.getsize(path)
    frame_bytes = 8 * frame_len
    if size % frame_bytes != 0:
        raise Cf32FormatError(
            f"{path}: {size} bytes is not a multiple of the "
            f"{frame_bytes}-byte frame ({size % frame_bytes} bytes over)"
        )
    raw = np.fromfile(path, dtype="<f4")
    frames = []
    for k in range(size // frame_bytes):
        chunk = raw[k * 2 * frame_len:(k + 1) * 2 * frame_len]
        frames.append(IqFrame(
            i=chunk[0::2].astype(np.float64),
            q=chunk[1::2].astype(np.float64),
        ))
    return frames


def _cell_filename(kind: ModulationKind, snr_db: float) -> str:
    return f"{kind.name}_snr{snr_db:+g}dB.cf32"


def write_dataset(directory, dataset: Dataset) -> List[dict]:
    """Write one cf32 file per cell plus the manifest; returns the entries."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for (kind, snr), frames in dataset.cells().items():
        if kind is None or snr is None:
            raise ValueError("dataset frames must carry label and snr_db")
        lengths = {len(f) for f in frames}
        if len(lengths) != 1:
            raise ValueError(f"cell ({kind.name}, {snr}) mixes frame lengths")
        name = _cell_filename(kind, snr)
        write_cf32(os.path.join(directory, name), frames)
        entries.append({
            "path": name,
            "modulation": int(kind),
            "snr_db": float(snr),
            "frame_len": lengths.pop(),
            "frame_count": len(frames),
        })
    manifest = {"version": MANIFEST_VERSION, "entries": entries}
    with open(os.path.join(directory, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return entries


def read_dataset(directory) -> Dataset:
    """Load a manifest directory back into a labeled Dataset."""
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != MANIFEST_VERSION:
        raise ValueError(
            f"{manifest_path}: unsupported manifest version "
            f"{manifest.get('version')!r}"
        )
    frames = []
    for entry in manifest["entries"]:
        path = os.path.join(directory, entry["path"])
        expected = entry["frame_count"] * entry["frame_len"] * 8
        actual = os.path.getsize(path)
        if actual != expected:
            raise ValueError(
                f"{path}: expected {expected} bytes per manifest, found {actual}"
            )
        kind = ModulationKind(entry["modulation"])
        for frame in read_cf32(path, entry["frame_len"]):
            frame.label = kind
            frame.snr_db = float(entry["snr_db"])
            frames.append(frame)
    return Dataset(frames)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _arch_to_dict(arch: Architecture) -> dict:
    return {
        "input_dim": arch.input_dim, "target_dim": arch.target_dim,
        "hidden_dim": arch.hidden_dim, "depth": arch.depth,
        "latent_dim": arch.latent_dim, "activation": arch.activation,
        "dropout_rate": arch.dropout_rate,
    }


def _feat_to_dict(cfg: FeatureConfig) -> dict:
    return {
        "lag_count": cfg.lag_count,
        "include_correlations": cfg.include_correlations,
        "corr_window": cfg.corr_window,
        "target_lag_count": cfg.target_lag_count,
    }


def save_checkpoint(path, params: NetworkParams, feat_cfg: FeatureConfig,
                    train_cfg: Optional[TrainConfig] = None) -> None:
    named = params.named_arrays()
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in named
    )
    header = {
        "format_version": CHECKPOINT_VERSION,
        "architecture": _arch_to_dict(params.arch),
        "feature_config": _feat_to_dict(feat_cfg),
        "train_config": None if train_cfg is None else {
            "learning_rate": train_cfg.learning_rate,
            "beta_kl": train_cfg.beta_kl,
            "batch_rows": train_cfg.batch_rows,
            "epochs": train_cfg.epochs,
            "seed": train_cfg.seed,
            "lr_decay": train_cfg.lr_decay,
        },
        "param_order": [name for name, _ in named],
        "param_shapes": [list(a.shape) for _, a in named],
        "payload_count": sum(a.size for _, a in named),
        "payload_fnv1a64": f"{fnv1a64(payload):016x}",
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        fh.write(payload)


def load_checkpoint(path) -> Tuple[NetworkParams, FeatureConfig,
                                   Optional[TrainConfig]]:
    """Load and audit a checkpoint; raises CheckpointError on any mismatch."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(
                f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}"
            )
        header_len = int.from_bytes(fh.read(4), "little")
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
        payload = fh.read()

    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {header.get('format_version')!r}"
        )
    count = header["payload_count"]
    if len(payload) != 8 * count:
        raise CheckpointError(
            f"{path}: payload holds {len(payload)} bytes, expected {8 * count}"
        )
    checksum = f"{fnv1a64(payload):016x}"
    if checksum != header["payload_fnv1a64"]:
        raise CheckpointError(
            f"{path}: payload checksum {checksum} does not match header "
            f"{header['payload_fnv1a64']}"
        )

    arch = Architecture(**header["architecture"])
    feat_cfg = FeatureConfig(**header["feature_config"])
    flat = np.frombuffer(payload, dtype="<f8")
    if not np.isfinite(flat).all():
        raise CheckpointError(f"{path}: payload holds non-finite values")
    arrays = []
    at = 0
    for shape in header["param_shapes"]:
        size = int(np.prod(shape)) if shape else 1
        arrays.append(flat[at:at + size].reshape(shape).astype(np.float64))
        at += size
    if at != count:
        raise CheckpointError(f"{path}: parameter shapes do not sum to payload")
    params = _from_arrays(arch, arrays)

    tc = header.get("train_config")
    train_cfg = None
    if tc is not None:
        train_cfg = TrainConfig(
            learning_rate=tc["learning_rate"], beta_kl=tc["beta_kl"],
            batch_rows=tc["batch_rows"], epochs=tc["epochs"],
            seed=tc["seed"], lr_decay=tc["lr_decay"],
        )
    return params, feat_cfg, train_cfg
