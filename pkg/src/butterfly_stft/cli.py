"""Command line entry point.

Exit codes: 0 success, 1 a check or metric failed, 2 usage/config error.
"""

import argparse
import csv
import io
import logging
import os
import sys
import timeit

import numpy as np

from . import __version__
from .audio_io import AudioClip, generate_toy_dataset, load_manifest, read_wav, write_wav
from .butterfly import (MacCounter, SplitComplexBuffer, apply_forward, build_butterfly_stack,
                        count_parameters, dense_parameter_count, dense_to_csv, to_dense)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .errors import ButterflyError, ConfigError, FormatError, InvalidSizeError, UnsupportedFormatError
from .metrics import UndefinedMetricError, ssnr
from .model import EnhancementModel
from .training import reference_front, signal_loss, train, write_loss_csv
from .verification import verify_size

log = logging.getLogger("butterfly_stft")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _check_sizes(args):
    if args.all:
        return [1 << k for k in range(1, 11)]
    if args.n is None:
        raise UsageError("verify needs --n <size> or --all")
    return [args.n]


def cmd_verify(args):
    sizes = _check_sizes(args)
    failed = []
    print(f"{'n':>6} {'check':<10} {'max error':>12} {'tolerance':>10}  result")
    for n in sizes:
        stack = build_butterfly_stack(n)
        if args.perturb:
            # fault injection: nudge the twiddle of the first butterfly in the last stage
            stack.factors[-1].values[1, 0] += args.perturb
        for r in verify_size(n, trials=args.trials, seed=args.seed, stack=stack):
            status = "pass" if r.passed else "FAIL"
            print(f"{n:>6} {r.name:<10} {r.error:>12.3e} {r.tolerance:>10.0e}  {status}")
            if not r.passed:
                failed.append(f"{r.name}@n={n}")
    if failed:
        print("failed checks: " + ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def _time(fn, iters, repeat=3):
    """Best-of-``repeat`` mean seconds per call, as ``timeit`` reports."""
    return min(timeit.repeat(fn, number=max(iters, 1), repeat=repeat)) / max(iters, 1)


def bench_rows(sizes, iters, batch, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        stack = build_butterfly_stack(n)
        dense = to_dense(stack)
        dr, di = dense.re.T.copy(), dense.im.T.copy()
        x = SplitComplexBuffer(rng.standard_normal((batch, n)), rng.standard_normal((batch, n)))
        counter = MacCounter()
        apply_forward(stack, SplitComplexBuffer(x.re[:1], x.im[:1]), counter=counter)
        t_b = _time(lambda: apply_forward(stack, x), iters)
        t_d = _time(lambda: (x.re @ dr - x.im @ di, x.re @ di + x.im @ dr), iters)
        rows.append({
            "n": n,
            "butterfly_params": count_parameters(stack),
            "dense_params": dense_parameter_count(n),
            "butterfly_macs": counter.count,
            "dense_macs": n * n,
            "mac_ratio": n * n / counter.count,
            "butterfly_seconds": t_b,
            "dense_seconds": t_d,
            "speedup": t_d / t_b,
        })
    return rows


def cmd_bench(args):
    sizes = [1 << k for k in range(1, 11)] if args.n is None else [args.n]
    for n in sizes:
        if n < 2 or n & (n - 1):
            raise InvalidSizeError(f"n must be a power of two >= 2, got {n}")
    rows = bench_rows(sizes, args.iters, args.batch)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_dense(args):
    sys.stdout.write(dense_to_csv(to_dense(build_butterfly_stack(args.n))))
    return EXIT_OK


def cmd_gen_toy(args):
    m = generate_toy_dataset(args.out, seed=args.seed, count=args.count, sample_rate=args.sample_rate,
                             seconds=args.seconds, noise=args.noise)
    print(f"wrote {len(m.pairs)} pairs; manifest {m.path}")
    return EXIT_OK


def _run_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "manifest", None):
        cfg.manifest = args.manifest
    if getattr(args, "checkpoint", None):
        cfg.checkpoint = args.checkpoint
    if getattr(args, "loss_csv", None):
        cfg.loss_csv = args.loss_csv
    if getattr(args, "max_steps", None) is not None:
        cfg.train.max_steps = args.max_steps
    if getattr(args, "seed", None) is not None:
        cfg.train.seed = args.seed
    return cfg


def cmd_train(args):
    cfg = _run_config(args)
    if not cfg.manifest:
        raise UsageError("no manifest given (config key 'manifest' or --manifest)")
    manifest = load_manifest(cfg.manifest)
    dataset = manifest.load(snr_db=cfg.train.snr_db)
    if manifest.sample_rate != cfg.train.sample_rate:
        log.warning("manifest sample rate %s differs from config %s", manifest.sample_rate, cfg.train.sample_rate)
    result = train(cfg.train, dataset, cfg.loss,
                   on_step=lambda s, v: log.debug("step %d loss %.6f", s, v))
    for path in (cfg.checkpoint, cfg.loss_csv):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    save_checkpoint(cfg.checkpoint, result.model.state_dict())
    write_loss_csv(cfg.loss_csv, result.loss_curve)
    print(f"initial loss {result.initial_loss:.6f}  final loss {result.final_loss:.6f}")
    print(f"checkpoint {cfg.checkpoint}  loss curve {cfg.loss_csv}")
    return EXIT_OK


def _load_model(path):
    return EnhancementModel.from_state_dict(load_checkpoint(path))


def cmd_enhance(args):
    model = _load_model(args.checkpoint)
    clip = read_wav(args.input)
    out = model.enhance(clip.samples, mask_override=args.mask_value)
    write_wav(args.output, AudioClip(out, clip.sample_rate))
    print(f"wrote {args.output}")
    return EXIT_OK


def evaluate_rows(models, manifest, cfg):
    """Per-clip metric rows for each ``(label, model)``; clip ``i`` mixed at ``eval_snr_db[i % k]``."""
    dataset = manifest.load(snr_db=cfg.eval_snr_db)
    ids = manifest.ids or [str(i) for i in range(len(dataset))]
    rows = []
    for label, model in models:
        ref = reference_front(model.n)
        for i in range(len(dataset)):
            clean = dataset.clean[i]
            noisy = dataset.noisy(i, dataset.snr_db[i % len(dataset.snr_db)])
            est = model.enhance(noisy)
            clip_id = ids[i] if label is None else f"{label}/{ids[i]}"
            rows.append({
                "clip_id": clip_id,
                "ssnr_in": ssnr(clean, noisy, cfg.ssnr),
                "ssnr_out": ssnr(clean, est, cfg.ssnr),
                "loss": float(signal_loss(est, clean, ref, model.hop, cfg.loss).value),
            })
    return rows


def cmd_evaluate(args):
    cfg = _run_config(args)
    if args.snr_db:
        cfg.eval_snr_db = tuple(float(s) for s in args.snr_db.split(","))
    manifest_path = args.manifest or cfg.manifest
    if not manifest_path:
        raise UsageError("no manifest given")
    paths = args.checkpoint
    multi = len(paths) > 1
    models = [((os.path.splitext(os.path.basename(p))[0] if multi else None), _load_model(p)) for p in paths]
    try:
        rows = evaluate_rows(models, load_manifest(manifest_path), cfg)
    except UndefinedMetricError as exc:
        print(f"metric failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out.write("clip_id,ssnr_in,ssnr_out,loss\n")
        for r in rows:
            out.write(f"{r['clip_id']},{r['ssnr_in']!r},{r['ssnr_out']!r},{r['loss']!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    for label, _ in models:
        sel = [r for r in rows if label is None or r["clip_id"].startswith(label + "/")]
        gain = np.mean([r["ssnr_out"] - r["ssnr_in"] for r in sel])
        print(f"{label or 'model'}: mean SSNR gain {gain:+.3f} dB over {len(sel)} clips", file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="butterfly-stft", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", help="check the butterfly FFT against a naive DFT")
    s.add_argument("--n", type=int)
    s.add_argument("--all", action="store_true", help="every power of two from 2 to 1024")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="butterfly vs dense transform cost, as CSV")
    s.add_argument("--n", type=int)
    s.add_argument("--iters", type=int, default=50)
    s.add_argument("--batch", type=int, default=128, help="vectors per call (STFT frames)")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("dense", help="print the densified transform as CSV")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_dense)

    s = sub.add_parser("gen-toy", help="write a synthetic clean/noise dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=20)
    s.add_argument("--sample-rate", type=int, default=16000)
    s.add_argument("--seconds", type=float, default=1.0)
    s.add_argument("--noise", choices=("white", "pink", "mixed"), default="white")
    s.set_defaults(func=cmd_gen_toy)

    s = sub.add_parser("train", help="train a model from a config file")
    s.add_argument("--config")
    s.add_argument("--manifest")
    s.add_argument("--checkpoint")
    s.add_argument("--loss-csv")
    s.add_argument("--max-steps", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("enhance", help="enhance one WAV file")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", dest="output", required=True)
    s.add_argument("--mask-value", type=float, help="replace every mask by this constant")
    s.set_defaults(func=cmd_enhance)

    s = sub.add_parser("evaluate", help="SSNR and loss per clip, as CSV")
    s.add_argument("--checkpoint", action="append", required=True,
                   help="repeat to compare several arms in one table")
    s.add_argument("--manifest")
    s.add_argument("--config")
    s.add_argument("--snr-db", help="comma-separated evaluation SNRs")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, InvalidSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, UnsupportedFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ButterflyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
