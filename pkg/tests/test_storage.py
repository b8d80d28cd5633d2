import json
import struct

import numpy as np
import pytest

from modembed import vae
from modembed.features import FeatureConfig
from modembed.signals import DatasetSpec, IqFrame, ModulationKind, generate_dataset
from modembed.storage import (
    CheckpointError,
    Cf32FormatError,
    fnv1a64,
    load_checkpoint,
    read_cf32,
    read_dataset,
    save_checkpoint,
    write_cf32,
    write_dataset,
)
from modembed.training import TrainConfig
from modembed.vae import Architecture


def random_frames(seed, count, length):
    rng = np.random.default_rng(seed)
    return [
        IqFrame(i=rng.standard_normal(length), q=rng.standard_normal(length))
        for _ in range(count)
    ]


class TestCf32:
    def test_round_trip_at_float32_precision(self, tmp_path):
        frames = random_frames(0, 3, 40)
        path = tmp_path / "x.cf32"
        write_cf32(path, frames)
        loaded = read_cf32(path, 40)
        assert len(loaded) == 3
        for orig, back in zip(frames, loaded):
            np.testing.assert_array_equal(
                back.i, orig.i.astype(np.float32).astype(np.float64)
            )
            np.testing.assert_array_equal(
                back.q, orig.q.astype(np.float32).astype(np.float64)
            )

    def test_empty_file_zero_frames(self, tmp_path):
        path = tmp_path / "empty.cf32"
        path.write_bytes(b"")
        assert read_cf32(path, 125) == []

    def test_hand_encoded_bytes(self, tmp_path):
        # two complex samples: (1.0, 0.5), (-1.0, 0.25) interleaved LE f32
        path = tmp_path / "hand.cf32"
        path.write_bytes(struct.pack("<4f", 1.0, 0.5, -1.0, 0.25))
        (frame,) = read_cf32(path, 2)
        np.testing.assert_array_equal(frame.i, [1.0, -1.0])
        np.testing.assert_array_equal(frame.q, [0.5, 0.25])

    def test_non_divisible_length_reports_offsets(self, tmp_path):
        path = tmp_path / "bad.cf32"
        path.write_bytes(b"\x00" * 44)
        with pytest.raises(Cf32FormatError, match="44 bytes"):
            read_cf32(path, 2)

    def test_interleaving_order_on_disk(self, tmp_path):
        frame = IqFrame(i=[1.0, 3.0], q=[2.0, 4.0])
        path = tmp_path / "order.cf32"
        write_cf32(path, [frame])
        assert struct.unpack("<4f", path.read_bytes()) == (1.0, 2.0, 3.0, 4.0)


class TestDatasetDir:
    def make_dataset(self):
        spec = DatasetSpec(
            (ModulationKind.BPSK, ModulationKind.WBFM), (0.0, 6.0), 3, 64,
            seed=1,
        )
        return generate_dataset(spec)

    def test_round_trip_labels_and_samples(self, tmp_path):
        ds = self.make_dataset()
        write_dataset(tmp_path, ds)
        back = read_dataset(tmp_path)
        assert len(back) == len(ds)
        for orig, loaded in zip(ds.frames, back.frames):
            assert loaded.label == orig.label
            assert loaded.snr_db == orig.snr_db
            np.testing.assert_array_equal(
                loaded.i, orig.i.astype(np.float32).astype(np.float64)
            )

    def test_manifest_schema(self, tmp_path):
        ds = self.make_dataset()
        write_dataset(tmp_path, ds)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["version"] == 1
        assert len(manifest["entries"]) == 4
        entry = manifest["entries"][0]
        assert set(entry) == {"path", "modulation", "snr_db", "frame_len",
                              "frame_count"}
        assert entry["frame_count"] == 3 and entry["frame_len"] == 64

    def test_size_mismatch_detected(self, tmp_path):
        ds = self.make_dataset()
        entries = write_dataset(tmp_path, ds)
        victim = tmp_path / entries[0]["path"]
        victim.write_bytes(victim.read_bytes()[:-8])
        with pytest.raises(ValueError, match="expected"):
            read_dataset(tmp_path)

    def test_unlabeled_frames_rejected(self, tmp_path):
        from modembed.signals import Dataset

        ds = Dataset(random_frames(0, 2, 32))
        with pytest.raises(ValueError, match="label"):
            write_dataset(tmp_path, ds)


class TestFnv1a:
    def test_reference_vectors(self):
        # standard FNV-1a 64 test vectors
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8


class TestCheckpoint:
    def make_params(self, seed=0):
        feat_cfg = FeatureConfig(lag_count=2, corr_window=4, target_lag_count=2)
        arch = Architecture(input_dim=feat_cfg.feature_dim, target_dim=4,
                            hidden_dim=6, depth=2)
        return vae.init_params(arch, seed), feat_cfg

    def test_round_trip_bit_exact(self, tmp_path):
        params, feat_cfg = self.make_params()
        train_cfg = TrainConfig(epochs=3, seed=9)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg, train_cfg)
        loaded, feat_back, train_back = load_checkpoint(path)
        for a, b in zip(params.arrays(), loaded.arrays()):
            assert np.array_equal(a, b)
        assert loaded.arch == params.arch
        assert feat_back == feat_cfg
        assert train_back.epochs == 3 and train_back.seed == 9

    def test_wrong_magic_rejected(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_payload_corruption_detected(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg)
        blob = bytearray(path.read_bytes())
        blob[-5] ^= 0x40
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_truncated_payload_detected(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg)
        blob = path.read_bytes()
        path.write_bytes(blob[:-16])
        with pytest.raises(CheckpointError, match="payload holds"):
            load_checkpoint(path)

    def test_version_mismatch_rejected(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg)
        raw = path.read_bytes()
        header_len = int.from_bytes(raw[4:8], "little")
        header = json.loads(raw[8:8 + header_len])
        header["format_version"] = 99
        # keep the header byte length stable for a pure version check
        new_header = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(
            raw[:4] + len(new_header).to_bytes(4, "little") + new_header
            + raw[8 + header_len:]
        )
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_magic_matches_wire_constant(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg)
        assert path.read_bytes()[:4] == b"DME1"

    def test_optional_train_config(self, tmp_path):
        params, feat_cfg = self.make_params()
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, feat_cfg, train_cfg=None)
        _, _, train_back = load_checkpoint(path)
        assert train_back is None
