"""Command-line driver: data synthesis, training, acquisition simulation,
reconstruction, evaluation and mask analysis.

Subcommands: gen-synth, train, measure, reconstruct, eval, analyze-mask,
plot.  Exit code 0 on success; bad flags print usage and exit nonzero;
missing/corrupt files exit with an error message on stderr.  ``--seed``
governs every stochastic path, and no subcommand ever mutates its inputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import pipeline, storage, synth
from .decoder import MlpDecoder, init_decoder
from .encoder import BinaryMaskEncoder, shadow_histogram
from .metrics import per_frame_curves
from .sensing import sample_bernoulli_mask
from .solvers import LASSO_DEFAULTS, TV_DEFAULTS, SolverConfig
from .trainer import TrainConfig, select_decoder_lr, train
from .volume import extract_training_blocks


def run_length_stats(bits: np.ndarray) -> tuple[float, float]:
    """Mean temporal run length of 1s and of 0s across all spatial positions.

    Runs are maximal constant segments along the time axis of each pixel;
    positions with no run of a value contribute nothing to that mean (NaN
    if no such run exists anywhere).
    """
    bits = np.asarray(bits)
    if bits.size == 0:
        raise ValueError("mask is empty")
    t = bits.shape[0]
    flat = bits.reshape(t, -1)
    runs = {0: [], 1: []}
    for p in range(flat.shape[1]):
        col = flat[:, p]
        start = 0
        for i in range(1, t + 1):
            if i == t or col[i] != col[start]:
                runs[int(col[start])].append(i - start)
                start = i
    mean1 = float(np.mean(runs[1])) if runs[1] else float("nan")
    mean0 = float(np.mean(runs[0])) if runs[0] else float("nan")
    return mean1, mean0


def mask_to_image(bits: np.ndarray) -> np.ndarray:
    """Visualize a (t, h_s, w_s) mask as a (h_s*w_s, t) u8 image: one
    column per time instance, rows in lexicographic spatial order."""
    bits = np.asarray(bits, dtype=np.uint8)
    return (bits.reshape(bits.shape[0], -1).T * 255).astype(np.uint8)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vidcs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="generate a synthetic grayscale video")
    g.add_argument("--out", required=True)
    g.add_argument("--width", type=int, required=True)
    g.add_argument("--height", type=int, required=True)
    g.add_argument("--frames", type=int, required=True)
    g.add_argument("--kind", choices=synth.KINDS, default="moving-squares")
    g.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train the mask and decoder end to end")
    t.add_argument("--data", nargs="+", required=True, help="training video file(s)")
    t.add_argument("--val", nargs="+", required=True, help="validation video file(s)")
    t.add_argument("--mask-init", type=float, default=40.0,
                   help="initial nonzero percentage (e.g. 20/40/60/80)")
    t.add_argument("--epochs", type=int, default=480)
    t.add_argument("--batch", type=int, default=200)
    t.add_argument("--dec-lr", type=float, default=None,
                   help="base decoder rate; omitted -> small validation grid")
    t.add_argument("--enc-lr", type=float, default=None,
                   help="base encoder rate; omitted -> 10x decoder rate")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="output model checkpoint (MDL1)")
    t.add_argument("--log", required=True, help="output CSV training log")
    t.add_argument("--freeze-mask", action="store_true")
    t.add_argument("--deterministic", action="store_true")
    t.add_argument("--out-mask", default=None, help="also export mask bits (BMK1)")
    t.add_argument("--blocks", type=int, default=10000)
    t.add_argument("--val-blocks", type=int, default=1000)
    t.add_argument("--block-shape", type=int, nargs=3, default=(8, 8, 16),
                   metavar=("W_P", "H_P", "T"))
    t.add_argument("--hidden-layers", type=int, default=4)
    t.add_argument("--hidden-units", type=int, default=None)

    m = sub.add_parser("measure", help="simulate coded acquisition")
    m.add_argument("--data", required=True)
    m.add_argument("--mask", required=True)
    m.add_argument("--out", required=True)

    r = sub.add_parser("reconstruct", help="reconstruct video from coded frames")
    r.add_argument("--coded", required=True)
    r.add_argument("--mask", required=True)
    r.add_argument("--method", choices=("decoder", "tv", "lasso"), required=True)
    r.add_argument("--model", default=None)
    r.add_argument("--out", required=True)
    r.add_argument("--lam", type=float, default=None)
    r.add_argument("--iters", type=int, default=None)

    e = sub.add_parser("eval", help="PSNR/SSIM against a reference video")
    e.add_argument("--ref", required=True)
    e.add_argument("--recon", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--frames", type=int, default=32)

    a = sub.add_parser("analyze-mask", help="mask statistics and visualization")
    a.add_argument("--model", required=True)
    a.add_argument("--out-prefix", required=True)
    a.add_argument("--bins", type=int, default=50)

    pl = sub.add_parser("plot", help="training-curve plots from a CSV log")
    pl.add_argument("--log", required=True)
    pl.add_argument("--out", required=True)
    return p


def _cmd_gen_synth(args) -> int:
    vol = synth.generate(args.kind, args.width, args.height, args.frames, args.seed)
    storage.write_video(args.out, vol)
    return 0


def _cmd_train(args) -> int:
    w_p, h_p, t = args.block_shape
    dims = (w_p, h_p, t)
    train_vols = [storage.read_video(f) for f in args.data]
    val_vols = [storage.read_video(f) for f in args.val]
    X = extract_training_blocks(train_vols, args.blocks, dims, args.seed)
    X_val = extract_training_blocks(val_vols, args.val_blocks, dims, args.seed + 1)

    sub = sample_bernoulli_mask((w_p // 2, h_p // 2, t), args.mask_init / 100.0,
                                args.seed)
    encoder = BinaryMaskEncoder(sub)
    decoder = MlpDecoder(
        init_decoder(encoder.m_p, encoder.n_p, args.hidden_layers, args.seed + 1,
                     hidden_units=args.hidden_units)
    )
    dec_lr = args.dec_lr
    if dec_lr is None:
        template = TrainConfig(
            dec_lr=1.0, epochs=args.epochs, batch=args.batch, seed=args.seed,
            train_mask=not args.freeze_mask, deterministic=args.deterministic,
        )
        dec_lr = select_decoder_lr(
            X, X_val, template,
            encoder_factory=lambda: BinaryMaskEncoder(encoder.sub_block()),
            decoder_factory=lambda: MlpDecoder(decoder.params.copy()),
        )
        print(f"selected decoder learning rate {dec_lr:g}", file=sys.stderr)
    cfg = TrainConfig(
        dec_lr=dec_lr, enc_lr=args.enc_lr, epochs=args.epochs, batch=args.batch,
        seed=args.seed, train_mask=not args.freeze_mask,
        deterministic=args.deterministic,
    )
    encoder, decoder, logs = train(X, X_val, cfg, encoder, decoder, verbose=True)
    storage.write_model(args.out, encoder, decoder)
    storage.write_log(args.log, logs)
    if args.out_mask:
        storage.write_mask_bits(args.out_mask, encoder.bits)
    return 0


def _cmd_measure(args) -> int:
    vol = storage.read_video(args.data)
    bits = storage.read_mask_bits(args.mask)
    coded, _ = pipeline.measure_volume(vol, bits)
    storage.write_float_stack(args.out, coded)
    return 0


def _solver_cfg(defaults: SolverConfig, args) -> SolverConfig:
    lam = defaults.lam if args.lam is None else args.lam
    iters = defaults.max_iters if args.iters is None else args.iters
    return SolverConfig(lam=lam, max_iters=iters, rel_tol=defaults.rel_tol,
                        tv_inner_iters=defaults.tv_inner_iters,
                        kappa=defaults.kappa)


def _cmd_reconstruct(args) -> int:
    coded = storage.read_float_stack(args.coded)
    bits = storage.read_mask_bits(args.mask)
    if args.method == "decoder":
        if args.model is None:
            print("error: --method decoder requires --model", file=sys.stderr)
            return 2
        _, decoder, _ = storage.read_model(args.model,
                                           sub_dims=(bits.shape[2], bits.shape[1]))
        recon = pipeline.reconstruct_decoder(coded, bits, decoder)
    elif args.method == "tv":
        recon = pipeline.reconstruct_tv(coded, bits, _solver_cfg(TV_DEFAULTS, args))
    else:
        recon = pipeline.reconstruct_lasso(coded, bits,
                                           _solver_cfg(LASSO_DEFAULTS, args))
    storage.write_video(args.out, recon)
    return 0


def _cmd_eval(args) -> int:
    ref = storage.read_video(args.ref)
    recon = storage.read_video(args.recon)
    T, H, W = recon.shape
    if ref.shape[1] < H or ref.shape[2] < W:
        raise ValueError("reference frames smaller than reconstruction")
    r0 = (ref.shape[1] - H) // 2
    c0 = (ref.shape[2] - W) // 2
    ref = ref[:, r0 : r0 + H, c0 : c0 + W]
    n = min(args.frames, T, ref.shape[0])
    rows, mean_psnr, mean_ssim = per_frame_curves(ref[:n], recon[:n])
    with open(args.out, "w", newline="\n") as fh:
        fh.write("frame,psnr,ssim\n")
        for f, p, s in rows:
            fh.write(f"{f},{p!r},{s!r}\n")
        fh.write(f"mean,{mean_psnr!r},{mean_ssim!r}\n")
    return 0


def _cmd_analyze_mask(args) -> int:
    encoder, _, _ = storage.read_model(args.model)
    counts = shadow_histogram(encoder.shadow, args.bins)
    edges = np.linspace(-1.0, 1.0, args.bins + 1)
    with open(f"{args.out_prefix}_hist.csv", "w", newline="\n") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{lo!r},{hi!r},{int(c)}\n")
    storage.write_pgm(f"{args.out_prefix}_mask.pgm", mask_to_image(encoder.bits))
    nnz_pct = 100.0 * float(np.count_nonzero(encoder.bits)) / encoder.bits.size
    mean1, mean0 = run_length_stats(encoder.bits)
    with open(f"{args.out_prefix}_stats.csv", "w", newline="\n") as fh:
        fh.write("nnz_pct,mean_run_ones,mean_run_zeros\n")
        fh.write(f"{nnz_pct!r},{mean1!r},{mean0!r}\n")
    return 0


def _cmd_plot(args) -> int:
    logs = storage.read_log(args.log)
    epochs = np.array([l.epoch for l in logs], dtype=float)
    panels = [
        (
            {
                "train mse": (epochs, np.array([l.train_mse for l in logs])),
                "val mse": (epochs, np.array([l.val_mse for l in logs])),
            },
            "reconstruction error", "epoch", "mse",
        ),
        (
            {"flips": (epochs, np.array([l.flips for l in logs], dtype=float))},
            "binary weight changes", "epoch", "flips",
        ),
        (
            {"nonzero %": (epochs, np.array([l.nnz_pct for l in logs]))},
            "mask density", "epoch", "percent",
        ),
    ]
    storage.write_svg_stack(args.out, panels)
    return 0


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "train": _cmd_train,
    "measure": _cmd_measure,
    "reconstruct": _cmd_reconstruct,
    "eval": _cmd_eval,
    "analyze-mask": _cmd_analyze_mask,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
