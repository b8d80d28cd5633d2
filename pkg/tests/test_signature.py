import numpy as np
import pytest

from modembed import vae
from modembed.features import FeatureConfig, assemble_features
from modembed.images import read_pgm, read_ppm, write_pgm, write_ppm
from modembed.signals import ModulationKind, generate_frame
from modembed.signature import (
    EmbeddingSeries,
    Signature,
    color_index,
    colormap,
    colorize_trajectory,
    distance_matrix,
    embed_frame,
    flip_signature,
    histogram2d,
    load_signature_csv,
    mean_signature,
    save_signature_csv,
    signature_distance,
    signature_to_pgm,
)
from modembed.vae import Architecture, NetworkParams
from oracles import brute_histogram


def random_emb(seed, n=500):
    return EmbeddingSeries(
        z=np.random.default_rng(seed).standard_normal(n), t_offset=0
    )


def one_hot_signature(r, c, size=8, value_range=3.0):
    bins = np.zeros((size, size))
    bins[r, c] = 1.0
    return Signature(bins=bins, size=size, value_range=value_range)


class TestHistogram2d:
    def test_constant_embedding_single_bin(self):
        emb = EmbeddingSeries(z=np.full(50, 0.5), t_offset=0)
        sig = histogram2d(emb, size=64, value_range=3.0)
        assert sig.bins.sum() == 1.0
        # z=0.5 -> |v|*64/6=5.33 -> bin 37; dz=+0.0 -> bin 31
        assert sig.bins[37, 31] == 1.0

    def test_mass_one_with_clipping(self):
        emb = EmbeddingSeries(z=np.array([-100.0, 100.0, 0.1, 50.0]),
                              t_offset=0)
        sig = histogram2d(emb, size=16, value_range=3.0)
        assert abs(sig.bins.sum() - 1.0) < 1e-9

    def test_matches_brute_force_binning(self):
        z = np.random.default_rng(0).standard_normal(1000) * 2.0
        emb = EmbeddingSeries(z=z, t_offset=0)
        sig = histogram2d(emb, size=64, value_range=3.0)
        np.testing.assert_array_equal(sig.bins,
                                      brute_histogram(z, 64, 3.0))

    def test_too_short_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            histogram2d(EmbeddingSeries(z=np.array([1.0]), t_offset=0))

    def test_odd_bin_count_rejected(self):
        emb = random_emb(1)
        with pytest.raises(ValueError, match="even"):
            histogram2d(emb, size=63)


class TestSignatureDistance:
    def test_identical_is_zero(self):
        sig = histogram2d(random_emb(2))
        assert signature_distance(sig, sig) == 0.0

    def test_flip_of_self_is_zero(self):
        sig = histogram2d(random_emb(3))
        assert signature_distance(sig, flip_signature(sig)) == 0.0

    def test_disjoint_one_hots_distance_one(self):
        a = one_hot_signature(1, 2)
        b = one_hot_signature(5, 0)
        assert signature_distance(a, b) == 1.0

    def test_flip_invariance_for_random_embeddings(self):
        for seed in range(100):
            emb = random_emb(seed, n=200)
            neg = EmbeddingSeries(z=-emb.z, t_offset=0)
            d = signature_distance(histogram2d(emb), histogram2d(neg))
            assert d == 0.0

    def test_symmetry_and_range(self):
        for seed in range(10):
            a = histogram2d(random_emb(seed))
            b = histogram2d(random_emb(seed + 100))
            d = signature_distance(a, b)
            assert d == signature_distance(b, a)
            assert 0.0 <= d <= 1.0

    def test_shape_mismatch_rejected(self):
        a = histogram2d(random_emb(0), size=16)
        b = histogram2d(random_emb(0), size=32)
        with pytest.raises(ValueError, match="mismatch"):
            signature_distance(a, b)
        c = histogram2d(random_emb(0), size=16, value_range=2.0)
        with pytest.raises(ValueError, match="mismatch"):
            signature_distance(a, c)


class TestDistanceMatrix:
    def test_single_group_zero(self):
        labels, mat = distance_matrix({"only": [histogram2d(random_emb(0))]})
        assert labels == ["only"]
        assert mat.shape == (1, 1) and mat[0, 0] == 0.0

    def test_symmetric_zero_diagonal(self):
        groups = {
            name: [histogram2d(random_emb(seed + k)) for k in range(3)]
            for seed, name in ((0, "a"), (10, "b"), (20, "c"))
        }
        _, mat = distance_matrix(groups)
        np.testing.assert_array_equal(mat, mat.T)
        assert not mat.diagonal().any()

    def test_agrees_with_direct_recomputation(self):
        groups = {
            name: [histogram2d(random_emb(seed + k)) for k in range(4)]
            for seed, name in ((0, "x"), (50, "y"), (90, "z"))
        }
        labels, mat = distance_matrix(groups)
        for r, la in enumerate(labels):
            for c, lb in enumerate(labels):
                direct = signature_distance(
                    mean_signature(groups[la]), mean_signature(groups[lb])
                )
                assert mat[r, c] == direct

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            distance_matrix({"a": []})


class TestEmbedFrame:
    def small_net(self, n=34):
        arch = Architecture(input_dim=n, target_dim=16, hidden_dim=8, depth=1,
                            dropout_rate=0.0)
        return vae.init_params(arch, 0)

    def test_zero_params_zero_embedding(self):
        frame = generate_frame(ModulationKind.BPSK, 10.0, 125,
                               np.random.default_rng(0))
        arch = Architecture(input_dim=34, target_dim=16, hidden_dim=8, depth=1)
        emb = embed_frame(NetworkParams.zeros(arch), frame, FeatureConfig())
        assert len(emb) == 94
        assert not emb.z.any()

    def test_length_and_offset(self):
        frame = generate_frame(ModulationKind.QPSK, 10.0, 125,
                               np.random.default_rng(1))
        emb = embed_frame(self.small_net(), frame, FeatureConfig())
        assert len(emb) == 94 and emb.t_offset == 23

    def test_matches_composition_of_encode_and_features(self):
        frame = generate_frame(ModulationKind.GFSK, 10.0, 125,
                               np.random.default_rng(2))
        params = self.small_net()
        cfg = FeatureConfig()
        emb = embed_frame(params, frame, cfg)
        fs, _ = assemble_features(frame, cfg)
        mu, _ = vae.encode(params, fs.values)
        np.testing.assert_array_equal(emb.z, mu)
        # row-at-a-time evaluation agrees up to BLAS shape-dependent rounding
        for r in range(0, fs.values.shape[0], 7):
            single, _ = vae.encode(params, fs.values[r])
            assert abs(emb.z[r] - single) < 1e-12

    def test_dimension_mismatch_rejected(self):
        frame = generate_frame(ModulationKind.BPSK, 10.0, 125,
                               np.random.default_rng(0))
        with pytest.raises(ValueError, match="checkpoint expects"):
            embed_frame(self.small_net(), frame,
                        FeatureConfig(include_correlations=False))


class TestColorizeTrajectory:
    def frame_and_emb(self, seed=0):
        frame = generate_frame(ModulationKind.QPSK, 10.0, 125,
                               np.random.default_rng(seed))
        emb = EmbeddingSeries(
            z=np.random.default_rng(seed + 1).standard_normal(94) * 1.5,
            t_offset=23,
        )
        return frame, emb

    def test_canvas_dimensions(self):
        frame, emb = self.frame_and_emb()
        assert colorize_trajectory(frame, emb).shape == (256, 256, 3)
        assert colorize_trajectory(frame, emb, canvas=64).shape == (64, 64, 3)

    def test_constant_z_monochrome(self):
        frame, emb = self.frame_and_emb()
        emb = EmbeddingSeries(z=np.full(94, 0.8), t_offset=23)
        image = colorize_trajectory(frame, emb)
        colors = {tuple(px) for px in image.reshape(-1, 3) if px.any()}
        assert colors == {tuple(colormap()[color_index(0.8)])}

    def test_extreme_sample_carries_endpoint_color(self):
        frame, emb = self.frame_and_emb(3)
        emb.z[17] = 9.0  # clipped to +R, drawn last by |z| ordering
        image = colorize_trajectory(frame, emb)
        x = frame.i[23:23 + 94]
        y = frame.q[23:23 + 94]
        bound = 1.05 * max(np.abs(x).max(), np.abs(y).max(), 1e-9)
        col = int(round((x[17] + bound) / (2 * bound) * 255))
        row = 255 - int(round((y[17] + bound) / (2 * bound) * 255))
        assert tuple(image[row, col]) == tuple(colormap()[255])

    def test_misaligned_embedding_rejected(self):
        frame, emb = self.frame_and_emb()
        bad = EmbeddingSeries(z=emb.z, t_offset=60)
        with pytest.raises(ValueError, match="align"):
            colorize_trajectory(frame, bad)


class TestSignatureIO:
    def test_csv_round_trip(self, tmp_path):
        sig = histogram2d(random_emb(4), size=16, value_range=2.5)
        path = tmp_path / "sig.csv"
        save_signature_csv(sig, path)
        header = path.read_text().splitlines()[0]
        assert header == "# B=16 R=2.5"
        loaded = load_signature_csv(path)
        np.testing.assert_array_equal(loaded.bins, sig.bins)
        assert loaded.size == 16 and loaded.value_range == 2.5

    def test_pgm_round_trip(self, tmp_path):
        sig = histogram2d(random_emb(5), size=32)
        path = tmp_path / "sig.pgm"
        write_pgm(path, signature_to_pgm(sig))
        image = read_pgm(path)
        assert image.shape == (32, 32)
        assert image.max() == 255

    def test_ppm_round_trip(self, tmp_path):
        rgb = np.random.default_rng(0).integers(0, 256, (20, 30, 3))
        path = tmp_path / "img.ppm"
        write_ppm(path, rgb)
        np.testing.assert_array_equal(read_ppm(path), rgb.astype(np.uint8))


class TestColormap:
    def test_shape_and_distinct_endpoints(self):
        cm = colormap()
        assert cm.shape == (256, 3)
        assert tuple(cm[0]) != tuple(cm[255])

    def test_color_index_clips(self):
        assert color_index(-99.0) == 0
        assert color_index(99.0) == 255
        assert color_index(0.0) == 128
