"""Command-line interface.

Commands write delimited output (CSV/JSON) plus rendered figures into the
chosen output directory; no command needs a display or the network.  Exit
codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report as figures
from .delta_sampling import zero_schedule
from .metrics import (DEFAULT_MEL, MelConfig, alias_energy, equivariance_error,
                      mel_mae, mel_spectrogram, mstft)
from .nn.checkpoint import CheckpointFormatError
from .sinc_filters import (InvalidShiftError, Signal, fractional_delay,
                           frequency_response, make_sinc_kernel)
from .signal_io import WavFormatError, read_wav
from .vocoder import (TrainConfig, Trainer, features_from_wave, load_generator,
                      load_train_config, run_training)
from .wrapping import InvalidRatioError, assign_shift, wrap_block

DEFAULT_EVAL_DELTAS = (0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5)


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# design-filter


def cmd_design_filter(args) -> int:
    kernel = make_sinc_kernel(args.delta, args.half_width)
    response = frequency_response(kernel, args.points)
    out = Path(args.out)
    n = np.arange(-kernel.half_width, kernel.half_width + 1)
    _write_csv(out / "taps.csv", ["n", "tap"],
               [(int(ni), f"{t:.17g}") for ni, t in zip(n, kernel.taps)])
    _write_csv(out / "response.csv", ["frequency_radians", "magnitude"],
               [(f"{w:.17g}", f"{m:.17g}") for w, m in response])
    if not args.no_figures:
        figures.save_filter_figure(kernel, response, out / "filter.png")
    print(f"wrote {out}/taps.csv, response.csv"
          + ("" if args.no_figures else ", filter.png"))
    return 0


# ---------------------------------------------------------------------------
# wrap-check


def _band_limited_test_signal(length: int, rng: np.random.Generator) -> Signal:
    t = np.arange(length)
    x = np.zeros(length)
    for k in range(1, int(0.2 * length), max(1, int(0.01 * length))):
        x += rng.normal() * np.cos(2 * np.pi * k * t / length + rng.random() * 6)
    return Signal(x / np.max(np.abs(x)))


def cmd_wrap_check(args) -> int:
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    trainer = Trainer(cfg)
    rng = np.random.Generator(np.random.Philox(cfg.seed + 77))
    fault = 1e-3 if args.inject_fault else 0.0

    rows = []  # (check, max_error, threshold, pass)

    def check(name, err, threshold):
        rows.append((name, err, threshold, err <= threshold))

    from .nn.tensor import Tensor

    n_frames = cfg.segment_length // cfg.mel.hop
    for i in range(args.inputs):
        feats = Tensor(rng.standard_normal((1, cfg.mel.n_mels, n_frames)))
        wave = Tensor(rng.standard_normal((1, 1, cfg.segment_length)) * 0.5)

        plain = trainer.gen.forward(feats, schedule=None)
        wrapped = trainer.gen.forward(feats, zero_schedule(len(trainer.gen.blocks)))
        err = float(np.max(np.abs(plain.data - (wrapped.data + fault))))
        check(f"gen zero-shift transparency (input {i})", err, 0.0)

        pf, ps = trainer.disc.plain_run(wave)
        pair = trainer.disc.pair_forward(wave, wave, zero_schedule(len(trainer.disc.blocks)))
        err = max(float(np.max(np.abs(a.data - (b.data + fault))))
                  for a, b in zip(pf + [ps], pair.real_features + [pair.real_score]))
        check(f"disc zero-shift transparency (input {i})", err, 0.0)

    # per-block zero-shift transparency, reported individually
    h = trainer.gen.pre(Tensor(rng.standard_normal((1, cfg.mel.n_mels, n_frames))))
    for bi, block in enumerate(trainer.gen.blocks):
        bare = block.forward(h)
        wrapped = wrap_block(block, assign_shift(0.0, block.resample_ratio), h)
        err = float(np.max(np.abs(bare.data - (wrapped.data + fault))))
        check(f"gen block {bi} zero-shift transparency", err, 0.0)
        h = bare

    # fractional-shift composition sanity on an identity block
    from .wrapping import WrappableBlock
    sig = _band_limited_test_signal(2048, rng)
    identity = WrappableBlock(forward=lambda s: s, resample_ratio=1)
    wrapped = wrap_block(identity, assign_shift(0.5, 1), sig)
    interior = slice(64, -64)
    err = float(np.max(np.abs(wrapped.data[:, interior] - sig.data[:, interior]))) + fault
    check("identity block, shift 0.5, interior recovery", err, 0.06)

    width = max(len(r[0]) for r in rows)
    all_ok = True
    for name, err, threshold, ok in rows:
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  "
              f"max_error={err:.3e}  allowed={threshold:.3e}")
    print(f"{'PASS' if all_ok else 'FAIL'}  overall")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "wrap_check.json", "w") as f:
            json.dump([{"check": n, "max_error": e, "allowed": t, "pass": bool(ok)}
                       for n, e, t, ok in rows], f, indent=2)
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    jengan = cfg.jengan
    if args.jengan is not None:
        jengan = replace(jengan, mode=args.jengan)
    if args.sampling is not None:
        jengan = replace(jengan, sampling=args.sampling)
    if args.sync is not None:
        jengan = replace(jengan, sync=args.sync)
    if args.force_zero_delta:
        jengan = replace(jengan, force_zero=True)
    cfg = replace(cfg, jengan=jengan)
    if args.steps is not None:
        cfg = replace(cfg, steps=args.steps)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    out = Path(args.out)
    records = run_training(cfg, out)
    if records and not args.no_figures:
        steps = [r.step for r in records]
        columns = {
            "loss_g": [r.losses.loss_g for r in records],
            "loss_d": [r.losses.loss_d for r in records],
            "loss_fm": [r.losses.loss_fm for r in records],
            "loss_recon": [r.losses.loss_recon for r in records],
        }
        figures.save_loss_figure(steps, columns, out / "loss_curves.png")
    print(f"trained {cfg.steps} steps (jengan={cfg.jengan.mode}, "
          f"sampling={cfg.jengan.sampling}, sync={cfg.jengan.sync}) -> {out}")
    return 0


# ---------------------------------------------------------------------------
# eval


class _DelayModel:
    """Diagnostic stand-in model: a pure delay, exactly shift-equivariant."""

    def __init__(self, delay_samples: float):
        self.delay = float(delay_samples)

    def __call__(self, x: Signal) -> Signal:
        return fractional_delay(x, self.delay)


def _resolve_eval_config(args) -> tuple[dict | TrainConfig, Path | None]:
    if args.config:
        path = Path(args.config)
    else:
        ckpt = Path(args.checkpoint) if args.checkpoint else None
        path = None
        if ckpt is not None:
            for candidate in (ckpt.parent / "config.json", ckpt.parent.parent / "config.json"):
                if candidate.exists():
                    path = candidate
                    break
        if path is None and ckpt is not None:
            raise FileNotFoundError(
                f"no config.json found next to {ckpt}; pass --config explicitly")
    if path is None:
        raise FileNotFoundError("eval needs --config or a checkpoint with a config.json")
    with open(path) as f:
        raw = json.load(f)
    if raw.get("model_kind") == "delay":
        return raw, path
    return TrainConfig.from_dict(raw), path


def _load_eval_model(args):
    """Returns (model callable Signal->Signal, input preparation, r_total, cfg)."""
    cfg, _ = _resolve_eval_config(args)
    if isinstance(cfg, dict):
        model = _DelayModel(cfg.get("delay_samples", 0.0))
        return model, (lambda sig: sig), float(cfg.get("resample_ratio", 1.0)), cfg
    if not args.checkpoint:
        raise ValueError("evaluating a trained model needs --checkpoint")
    gen = load_generator(cfg, args.checkpoint)
    feat_rate = cfg.sample_rate / cfg.mel.hop

    def prepare(sig: Signal) -> Signal:
        return Signal(features_from_wave(sig, cfg.mel), sample_rate=feat_rate)

    return (lambda s: gen.inference(s)), prepare, float(cfg.generator.total_rate), cfg


def cmd_eval(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result: dict = {"metric": args.metric}

    if args.metric in ("melmae", "mstft"):
        if not args.input or not args.ref:
            raise ValueError(f"--metric {args.metric} needs --input and --ref")
        a = read_wav(args.ref)
        b = read_wav(args.input)
        if args.metric == "melmae":
            cfg = replace(DEFAULT_MEL, sample_rate=a.sample_rate,
                          fmax=min(8000.0, a.sample_rate / 2))
            value = mel_mae(a, b, cfg)
            result["mel_mae"] = value
        else:
            value = mstft(a, b)
            result["mstft"] = value
        print(f"{args.metric} = {value:.12g}")

    elif args.metric == "equivariance":
        model, prepare, r_total, _cfg = _load_eval_model(args)
        if not args.input:
            raise ValueError("--metric equivariance needs --input")
        x = prepare(read_wav(args.input))
        deltas = [float(d) for d in args.deltas.split(",")] if args.deltas \
            else list(DEFAULT_EVAL_DELTAS)
        margin = args.margin if args.margin is not None \
            else int(np.ceil(12 * (r_total + 1))) + 100
        rep = equivariance_error(model, x, deltas, margin=margin, r_total=r_total)
        result.update(rep.to_dict())
        _write_csv(out / "equivariance.csv", ["delta", "error"],
                   [(f"{d:g}", f"{e:.12e}") for d, e in zip(rep.deltas, rep.errors)])
        if not args.no_figures:
            figures.save_equivariance_figure(rep, out / "equivariance.png")
        print(f"mean equivariance error = {rep.mean_error:.6g} "
              f"over deltas {list(rep.deltas)}")

    elif args.metric == "alias":
        model, prepare, _r_total, cfg = _load_eval_model(args)
        if not args.input:
            raise ValueError("--metric alias needs --input")
        sig = read_wav(args.input)
        output = model(prepare(sig))
        if args.cutoff is not None:
            cutoff = args.cutoff
        elif isinstance(cfg, TrainConfig):
            cutoff = (cfg.corpus.max_band_hz + 300.0) / (cfg.sample_rate / 2)
        else:
            cutoff = 0.5
        rep = alias_energy(output, cutoff)
        result.update(rep.to_dict())
        if not args.no_figures:
            spec = np.abs(np.fft.rfft(output.data[0]))
            freqs = np.arange(len(spec)) * output.sample_rate / output.length
            figures.save_alias_figure(freqs, spec, rep, output.sample_rate / 2,
                                      out / "alias.png")
        print(f"alias energy ratio = {rep.ratio:.6g} above cutoff {rep.cutoff:.4g}")

    else:
        raise ValueError(f"unknown metric {args.metric!r}")

    with open(out / "report.json", "w") as f:
        json.dump(result, f, indent=2)
    return 0


# ---------------------------------------------------------------------------
# spectrogram


def cmd_spectrogram(args) -> int:
    sig = read_wav(args.input)
    cfg = replace(DEFAULT_MEL, sample_rate=sig.sample_rate,
                  fmax=min(8000.0, sig.sample_rate / 2))
    frames = mel_spectrogram(sig, cfg)
    out = Path(args.out)
    header = ["frame"] + [f"mel_{i}" for i in range(cfg.n_mels)]
    rows = [[fi] + [f"{v:.8e}" for v in row] for fi, row in enumerate(frames)]
    _write_csv(out / "mel.csv", header, rows)
    if not args.no_figures:
        figures.save_spectrogram_figure(frames, out / "spectrogram.png",
                                        hop_seconds=cfg.hop / cfg.sample_rate)
    print(f"wrote {frames.shape[0]} frames x {frames.shape[1]} bins -> {out}/mel.csv")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jengan",
        description="Anti-aliasing training strategy for 1-D generative audio nets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-filter", help="write shifted sinc kernel taps and response")
    p.add_argument("--delta", type=float, required=True, help="shift in samples")
    p.add_argument("--half-width", type=int, default=12)
    p.add_argument("--points", type=int, default=512, help="response resolution")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_design_filter)

    p = sub.add_parser("wrap-check", help="verify zero-shift transparency of wrapping")
    p.add_argument("--config", help="training config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--inputs", type=int, default=3, help="random inputs per check")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--out", help="also write wrap_check.json here")
    p.set_defaults(func=cmd_wrap_check)

    p = sub.add_parser("train", help="train the toy vocoder")
    p.add_argument("--config", help="training config JSON (flags override)")
    p.add_argument("--jengan", choices=["off", "gen", "disc", "both"])
    p.add_argument("--sampling", choices=["discrete", "uniform", "normal"])
    sync = p.add_mutually_exclusive_group()
    sync.add_argument("--sync", dest="sync", action="store_true", default=None)
    sync.add_argument("--async", dest="sync", action="store_false", default=None)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--force-zero-delta", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run a metric against a checkpoint or file pair")
    p.add_argument("--checkpoint", help="parameter checkpoint (.jgn)")
    p.add_argument("--config", help="config JSON (default: next to checkpoint)")
    p.add_argument("--metric", required=True,
                   choices=["equivariance", "alias", "melmae", "mstft"])
    p.add_argument("--input", help="input WAV")
    p.add_argument("--ref", help="reference WAV for melmae/mstft")
    p.add_argument("--deltas", help="comma-separated shifts for equivariance")
    p.add_argument("--margin", type=int, help="interior margin in output samples")
    p.add_argument("--cutoff", type=float, help="alias cutoff as fraction of Nyquist")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectrogram", help="export log-mel frames of a WAV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_spectrogram)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidShiftError, InvalidRatioError, WavFormatError,
            CheckpointFormatError, FileNotFoundError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
