"""Command-line entry point: gen / train / embed / sign / dist / eval /
stream subcommands, writing every artifact as a file (CSV, PGM, PPM,
checkpoint, cf32).

Exit codes: 0 ok, 1 runtime error, 2 usage error.  Every subcommand is
deterministic given --seed (stream excluded: its input is external).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from modembed import mismatch as mm
from modembed import signature as sig
from modembed import storage, stream, training
from modembed.features import FeatureConfig
from modembed.images import write_pgm, write_ppm
from modembed.signals import DatasetSpec, ModulationKind, generate_dataset
from modembed.training import TrainConfig


class UsageError(Exception):
    """A flag failed validation before any work started (exit code 2)."""


def _parse_mods(text: str):
    if text.strip().lower() == "all":
        return list(ModulationKind)
    out = []
    for name in text.split(","):
        try:
            out.append(ModulationKind[name.strip().upper()])
        except KeyError:
            raise argparse.ArgumentTypeError(
                f"unknown modulation {name.strip()!r}; choose from "
                + ",".join(k.name for k in ModulationKind)
            )
    return out


def _parse_snrs(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}")


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be a nonnegative integer")
    return value


def _add_feature_flags(p):
    p.add_argument("--lags", type=int, default=8, help="lag count K")
    p.add_argument("--corr", type=_onoff, default=True, metavar="on|off",
                   help="include windowed lag correlations (default on)")
    p.add_argument("--corr-window", type=int, default=16)
    p.add_argument("--target-lags", type=int, default=8)


def _add_train_flags(p):
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr-decay", type=float, default=1.0)
    p.add_argument("--beta-kl", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--holdout", type=float, default=0.2)


def _feat_cfg(args) -> FeatureConfig:
    try:
        return FeatureConfig(
            lag_count=args.lags,
            include_correlations=args.corr,
            corr_window=args.corr_window,
            target_lag_count=args.target_lags,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _train_cfg(args) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=args.lr, beta_kl=args.beta_kl, batch_rows=args.batch,
            epochs=args.epochs, seed=args.seed, lr_decay=args.lr_decay,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modembed",
        description="Unsupervised 1-D embedding of I/Q signals with "
                    "2D-histogram modulation signatures",
    )
    parser.add_argument("--seed", type=_seed, default=0, help="master seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--workers", type=int, default=1,
                        help="threads for per-frame/per-cell work")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--mods", type=_parse_mods, default=list(ModulationKind),
                   help="'all' or comma list of modulation names")
    p.add_argument("--snrs", type=_parse_snrs, required=True,
                   help="comma list of SNRs in dB")
    p.add_argument("--frames", type=int, required=True,
                   help="frames per (modulation, SNR) cell")
    p.add_argument("--len", type=int, default=125, dest="frame_len")

    p = sub.add_parser("train", help="train and write a checkpoint")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--ckpt", default=None, help="checkpoint path "
                   "(default <out>/model.ckpt)")
    _add_feature_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("embed", help="write per-frame embeddings as CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)

    p = sub.add_parser("sign", help="write per-cell signatures and "
                       "colored trajectories")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--range", type=float, default=3.0, dest="value_range")

    p = sub.add_parser("dist", help="write the modulation distance matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--snr", type=float, default=None,
                   help="restrict to one SNR (dB)")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--range", type=float, default=3.0, dest="value_range")

    p = sub.add_parser("eval", help="run a mismatch experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", required=True,
                   choices=["lag", "features", "leave-mod", "leave-snr"])
    p.add_argument("--held", default=None,
                   help="held modulation name or SNR in dB")
    p.add_argument("--lags-a", type=int, default=8)
    p.add_argument("--lags-b", type=int, default=16)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--range", type=float, default=3.0, dest="value_range")
    _add_feature_flags(p)
    _add_train_flags(p)

    p = sub.add_parser("stream", help="embed a live cf32 TCP stream")
    p.add_argument("--endpoint", required=True, help="host:port")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--len", type=int, default=125, dest="frame_len")
    p.add_argument("--every", type=int, default=50,
                   help="frames per signature snapshot")
    p.add_argument("--max-frames", type=int, default=None,
                   help="stop after this many frames (default: run forever)")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--range", type=float, default=3.0, dest="value_range")
    return parser


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message, flush=True)


def cmd_gen(args) -> int:
    if args.frame_len < 32:
        raise UsageError(
            f"--len {args.frame_len} is below the generator minimum of 32"
        )
    if args.frames < 1:
        raise UsageError("--frames must be >= 1")
    if not args.snrs:
        raise UsageError("--snrs must name at least one SNR")
    spec = DatasetSpec(
        modulations=tuple(args.mods), snrs_db=tuple(args.snrs),
        frames_per_cell=args.frames, frame_len=args.frame_len, seed=args.seed,
    )
    dataset = generate_dataset(spec, workers=args.workers)
    storage.write_dataset(args.out, dataset)
    for (kind, snr), frames in dataset.cells().items():
        _say(args, f"cell modulation={kind.name} snr_db={snr:g} "
                   f"frames={len(frames)}")
    _say(args, f"wrote {len(dataset)} frames to {args.out}")
    return 0


def cmd_train(args) -> int:
    feat_cfg = _feat_cfg(args)
    train_cfg = _train_cfg(args)
    overrides = {
        "hidden_dim": args.hidden, "depth": args.depth,
        "dropout_rate": args.dropout,
    }
    dataset = storage.read_dataset(args.data)
    _say(args, f"features: N={feat_cfg.feature_dim} "
               f"(lags={args.lags} corr={'on' if args.corr else 'off'})")
    params, _ = training.train(
        dataset, feat_cfg, train_cfg, arch_overrides=overrides,
        holdout_fraction=args.holdout, workers=args.workers,
        verbose=not args.quiet,
    )
    ckpt = args.ckpt or os.path.join(args.out, "model.ckpt")
    os.makedirs(os.path.dirname(ckpt) or ".", exist_ok=True)
    storage.save_checkpoint(ckpt, params, feat_cfg, train_cfg)
    _say(args, f"checkpoint written to {ckpt}")
    return 0


def cmd_embed(args) -> int:
    dataset = storage.read_dataset(args.data)
    params, feat_cfg, _ = storage.load_checkpoint(args.ckpt)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "embeddings.csv")
    with open(path, "w") as fh:
        fh.write("frame,modulation,snr_db,t,z\n")
        for fi, frame in enumerate(dataset.frames):
            emb = sig.embed_frame(params, frame, feat_cfg)
            for k, value in enumerate(emb.z):
                fh.write(f"{fi},{frame.label.name},{frame.snr_db!r},"
                         f"{emb.t_offset + k},{float(value)!r}\n")
    _say(args, f"wrote {path}")
    return 0


def _cell_tag(kind: ModulationKind, snr: float) -> str:
    return f"{kind.name}_snr{snr:+g}dB"


def cmd_sign(args) -> int:
    dataset = storage.read_dataset(args.data)
    params, feat_cfg, _ = storage.load_checkpoint(args.ckpt)
    os.makedirs(args.out, exist_ok=True)
    for (kind, snr), frames in dataset.cells().items():
        embs = [sig.embed_frame(params, f, feat_cfg) for f in frames]
        cell_sig = sig.mean_signature(
            sig.histogram2d(e, args.bins, args.value_range) for e in embs
        )
        tag = _cell_tag(kind, snr)
        sig.save_signature_csv(cell_sig, os.path.join(args.out, f"sig_{tag}.csv"))
        write_pgm(os.path.join(args.out, f"sig_{tag}.pgm"),
                  sig.signature_to_pgm(cell_sig))
        image = sig.colorize_trajectory(frames[0], embs[0],
                                        value_range=args.value_range)
        write_ppm(os.path.join(args.out, f"traj_{tag}.ppm"), image)
        _say(args, f"cell {tag}: {len(frames)} frames")
    return 0


def cmd_dist(args) -> int:
    dataset = storage.read_dataset(args.data)
    params, feat_cfg, _ = storage.load_checkpoint(args.ckpt)
    if args.snr is not None:
        dataset = dataset.filtered(snrs_db=[args.snr])
        if not dataset.frames:
            raise ValueError(f"no frames at {args.snr} dB in {args.data}")
    groups = {}
    for frame in dataset.frames:
        groups.setdefault(frame.label.name, []).append(
            sig.histogram2d(
                sig.embed_frame(params, frame, feat_cfg),
                args.bins, args.value_range,
            )
        )
    labels, matrix = sig.distance_matrix(groups)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "distance_matrix.csv")
    with open(csv_path, "w") as fh:
        fh.write("# labels=" + ",".join(labels) + "\n")
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    write_pgm(os.path.join(args.out, "distance_matrix.pgm"),
              np.kron(matrix * 255.0, np.ones((32, 32))))
    _say(args, f"wrote {csv_path} over {len(labels)} modulations")
    return 0


def _eval_kind(args):
    if args.kind == "lag":
        return mm.LagChange(args.lags_a, args.lags_b)
    if args.kind == "features":
        return mm.FeatureSetChange(args.lags_a, args.lags_b)
    if args.kind == "leave-mod":
        if args.held is None:
            raise UsageError("--kind leave-mod needs --held <modulation>")
        try:
            return mm.LeaveOneModulationOut(ModulationKind[args.held.upper()])
        except KeyError:
            raise UsageError(f"unknown modulation {args.held!r}")
    if args.held is None:
        raise UsageError("--kind leave-snr needs --held <snr dB>")
    try:
        return mm.LeaveOneSnrOut(float(args.held))
    except ValueError:
        raise UsageError(f"--held {args.held!r} is not an SNR in dB")


def cmd_eval(args) -> int:
    kind = _eval_kind(args)
    feat_cfg = _feat_cfg(args)
    train_cfg = _train_cfg(args)
    overrides = {
        "hidden_dim": args.hidden, "depth": args.depth,
        "dropout_rate": args.dropout,
    }
    dataset = storage.read_dataset(args.data)
    report = mm.run_mismatch(
        kind, dataset, feat_cfg=feat_cfg, train_cfg=train_cfg,
        arch_overrides=overrides, bins=args.bins,
        value_range=args.value_range, holdout_fraction=args.holdout,
        workers=args.workers, verbose=not args.quiet,
    )
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "report.csv")
    report.to_csv(csv_path)
    write_pgm(os.path.join(args.out, "report.pgm"), report.heatmap())
    _say(args, f"wrote {csv_path} ({report.kind}, "
               f"{report.wall_time_s:.1f}s)")
    return 0


def cmd_stream(args) -> int:
    params, feat_cfg, _ = storage.load_checkpoint(args.ckpt)
    os.makedirs(args.out, exist_ok=True)
    source = stream.stream_frames(args.endpoint, args.frame_len)
    batch = []
    snapshots = 0
    seen = 0
    try:
        for frame in source.frames():
            emb = sig.embed_frame(params, frame, feat_cfg)
            batch.append(sig.histogram2d(emb, args.bins, args.value_range))
            seen += 1
            if len(batch) >= args.every:
                snap = sig.mean_signature(batch)
                base = os.path.join(args.out, f"sig_stream_{snapshots:04d}")
                sig.save_signature_csv(snap, base + ".csv")
                write_pgm(base + ".pgm", sig.signature_to_pgm(snap))
                _say(args, f"snapshot {snapshots} after {seen} frames "
                           f"(dropped={source.dropped})")
                snapshots += 1
                batch = []
            if args.max_frames is not None and seen >= args.max_frames:
                break
    finally:
        source.stop()
    if batch and (args.max_frames is not None):
        snap = sig.mean_signature(batch)
        base = os.path.join(args.out, f"sig_stream_{snapshots:04d}")
        sig.save_signature_csv(snap, base + ".csv")
        write_pgm(base + ".pgm", sig.signature_to_pgm(snap))
        snapshots += 1
    _say(args, f"{seen} frames embedded, {snapshots} snapshots")
    return 0


_COMMANDS = {
    "gen": cmd_gen, "train": cmd_train, "embed": cmd_embed,
    "sign": cmd_sign, "dist": cmd_dist, "eval": cmd_eval,
    "stream": cmd_stream,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, stream.StreamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
