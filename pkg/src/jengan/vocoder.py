"""Desk-scale GAN vocoder: toy generator/discriminator, losses, training.

The generator maps log-mel frames (one frame per ``mel.hop`` audio
samples) to a waveform through a stack of transposed-conv upsampling
blocks; the discriminator is a stack of strided convs with per-block
feature taps.  Training is one least-squares discriminator update then one
generator update (adversarial + feature matching + mel reconstruction)
per step.  Wrapping with shifted filters is controlled entirely by
``JenganConfig``: the inference path never constructs a filter.

All randomness is derived from ``TrainConfig.seed`` through fixed stream
offsets (model init, data, shifting values), so a seed pins the whole
trajectory bit-for-bit and ablations share their data stream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .delta_sampling import (DeltaRng, DeltaSchedule, SamplingMethod,
                             sample_schedule, zero_schedule)
from .metrics import MelConfig, hann_window, mel_filterbank
from .nn import Adam, Conv1d, ConvTranspose1d, Tensor
from .nn import functional as F
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .sinc_filters import Signal
from .signal_io import SynthSpec, read_wav, synthesize
from .wrapping import discriminator_pair_forward, generator_forward_jengan

JENGAN_MODES = ("off", "gen", "disc", "both")

# rng stream offsets from TrainConfig.seed
_SEED_GEN_INIT = 0
_SEED_DISC_INIT = 1
_SEED_DATA = 2
_SEED_DELTA = 3


class TrainingDivergedError(RuntimeError):
    """A loss went non-finite; message carries the step index."""


@dataclass(frozen=True)
class GeneratorConfig:
    n_mels: int = 32
    base_channels: int = 32
    upsample_rates: tuple[int, ...] = (4, 2, 2)
    residual_kernel: int = 3
    pre_kernel: int = 7
    post_kernel: int = 7
    leaky_slope: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "upsample_rates", tuple(int(r) for r in self.upsample_rates))
        if len(self.upsample_rates) == 0:
            raise ValueError("need at least one upsampling block")
        if any(r < 1 for r in self.upsample_rates):
            raise ValueError("upsample rates must be >= 1")

    @property
    def total_rate(self) -> int:
        return int(np.prod(self.upsample_rates))


@dataclass(frozen=True)
class DiscriminatorConfig:
    base_channels: int = 16
    strides: tuple[int, ...] = (2, 2, 4, 4)
    kernel_multiple: int = 2
    score_kernel: int = 3
    leaky_slope: float = 0.1

    @property
    def total_stride(self) -> int:
        return int(np.prod(self.strides))

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        if len(self.strides) == 0:
            raise ValueError("need at least one discriminator block")
        if any(s < 2 for s in self.strides):
            raise ValueError("discriminator blocks must downsample (stride >= 2)")


@dataclass(frozen=True)
class JenganConfig:
    mode: str = "both"            # off | gen | disc | both
    sampling: str = "discrete"    # discrete | uniform | normal
    sync: bool = True             # identical shifting values for real/fake pair
    force_zero: bool = False      # test hook: wrapped path with all-zero schedules
    feature_tap: str = "post"     # discriminator features pre/post output filter
    clamp_bound: float = 2.0

    def __post_init__(self):
        if self.mode not in JENGAN_MODES:
            raise ValueError(f"mode must be one of {JENGAN_MODES}, got {self.mode!r}")

    @property
    def wraps_generator(self) -> bool:
        return self.mode in ("gen", "both")

    @property
    def wraps_discriminator(self) -> bool:
        return self.mode in ("disc", "both")


@dataclass(frozen=True)
class CorpusConfig:
    kind: str = "harmonic"
    f0_min: float = 80.0
    f0_max: float = 400.0
    max_band_hz: float = 4000.0
    amplitude: float = 0.7
    wav_dir: str | None = None


@dataclass(frozen=True)
class TrainConfig:
    sample_rate: float = 22050.0
    segment_length: int = 2048
    batch_size: int = 1
    steps: int = 2000
    seed: int = 0
    lr: float = 4e-4
    adam_betas: tuple[float, float] = (0.8, 0.99)
    adv_weight: float = 1.0
    fm_weight: float = 2.0
    recon_weight: float = 45.0
    # Feature/loss mel: one frame per 16 audio samples with 4x-overlapped
    # windows, so phase is recoverable from the features and the vocoding
    # task has a shift-covariant solution to learn; fmax reaches Nyquist so
    # the reconstruction loss supervises the full band.  The measurement
    # default (metrics.DEFAULT_MEL) keeps the conventional 8 kHz ceiling.
    mel: MelConfig = field(default_factory=lambda: MelConfig(
        sample_rate=22050.0, fft_size=128, hop=16, win_length=64,
        n_mels=32, fmax=11025.0, center=True))
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    jengan: JenganConfig = field(default_factory=JenganConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)

    def __post_init__(self):
        object.__setattr__(self, "adam_betas", tuple(self.adam_betas))
        if self.generator.total_rate != self.mel.hop:
            raise ValueError(
                f"upsample rates multiply to {self.generator.total_rate} but one feature "
                f"frame covers {self.mel.hop} samples; they must match")
        if self.generator.n_mels != self.mel.n_mels:
            raise ValueError("generator n_mels must match the feature mel bins")
        if not self.mel.center:
            raise ValueError("feature extraction needs a centered mel configuration")
        if self.segment_length % self.mel.hop != 0:
            raise ValueError("segment_length must be a multiple of the feature hop")
        stride_prod = int(np.prod(self.discriminator.strides))
        if self.segment_length % stride_prod != 0:
            raise ValueError("segment_length must be divisible by the discriminator strides")
        if self.mel.sample_rate != self.sample_rate:
            raise ValueError("mel sample_rate must match the audio sample_rate")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        kwargs = {}
        nested = {
            "mel": MelConfig,
            "generator": GeneratorConfig,
            "discriminator": DiscriminatorConfig,
            "jengan": JenganConfig,
            "corpus": CorpusConfig,
        }
        for key, value in d.items():
            if key in nested:
                kwargs[key] = nested[key](**value)
            elif key in TrainConfig.__dataclass_fields__:
                kwargs[key] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        return TrainConfig(**kwargs)


def load_train_config(path) -> TrainConfig:
    with open(path) as f:
        return TrainConfig.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# models


class GeneratorBlock:
    """Transposed-conv upsampler plus a small residual conv stack."""

    def __init__(self, in_ch: int, out_ch: int, rate: int, cfg: GeneratorConfig,
                 rng: np.random.Generator, name: str):
        self.resample_ratio = rate
        self.slope = cfg.leaky_slope
        self.up = ConvTranspose1d(in_ch, out_ch, 2 * rate, stride=rate,
                                  rng=rng, name=f"{name}.up")
        k = cfg.residual_kernel
        self.res1 = Conv1d(out_ch, out_ch, k, rng=rng, name=f"{name}.res1")
        self.res2 = Conv1d(out_ch, out_ch, k, rng=rng, name=f"{name}.res2")

    def forward(self, x: Tensor) -> Tensor:
        u = F.leaky_relu(self.up(x), self.slope)
        v = F.leaky_relu(self.res1(u), self.slope)
        return F.add(u, self.res2(v))

    def parameters(self):
        return self.up.parameters() + self.res1.parameters() + self.res2.parameters()


class ToyGenerator:
    def __init__(self, cfg: GeneratorConfig, seed: int):
        self.cfg = cfg
        rng = np.random.Generator(np.random.Philox(seed))
        chs = [cfg.base_channels]
        for _ in cfg.upsample_rates:
            chs.append(max(4, chs[-1] // 2))
        self.pre = Conv1d(cfg.n_mels, chs[0], cfg.pre_kernel, rng=rng, name="pre")
        self.blocks = [
            GeneratorBlock(chs[i], chs[i + 1], r, cfg, rng, f"blocks.{i}")
            for i, r in enumerate(cfg.upsample_rates)
        ]
        self.post = Conv1d(chs[-1], 1, cfg.post_kernel, rng=rng, name="post")

    def forward(self, features: Tensor, schedule: DeltaSchedule | None) -> Tensor:
        """With a schedule, every block runs wrapped; with None, bare composition."""
        h = self.pre(features)
        if schedule is None:
            for block in self.blocks:
                h = block.forward(h)
        else:
            h = generator_forward_jengan(self.blocks, schedule, h)
        z = self.post(F.leaky_relu(h, self.cfg.leaky_slope))
        # center before the squashing: mel magnitudes are blind to a DC
        # offset, and an uncentered head drifts into loud constant output
        return F.tanh(F.center_last_axis(z))

    def inference(self, features: Signal) -> Signal:
        """The deployment path: plain composition, no filters anywhere."""
        out = self.forward(Tensor(features.data[None]), schedule=None)
        return Signal(data=out.data[0],
                      sample_rate=features.sample_rate * self.cfg.total_rate)

    def parameters(self):
        params = self.pre.parameters()
        for b in self.blocks:
            params += b.parameters()
        return params + self.post.parameters()

    def named_parameters(self) -> dict[str, Tensor]:
        return {p.name: p for p in self.parameters()}


class DiscriminatorBlock:
    def __init__(self, in_ch: int, out_ch: int, stride: int, cfg: DiscriminatorConfig,
                 rng: np.random.Generator, name: str):
        from fractions import Fraction
        self.resample_ratio = Fraction(1, stride)
        self.slope = cfg.leaky_slope
        self.conv = Conv1d(in_ch, out_ch, cfg.kernel_multiple * stride, stride=stride,
                           rng=rng, name=f"{name}.conv")

    def forward(self, x: Tensor) -> Tensor:
        return F.leaky_relu(self.conv(x), self.slope)

    def parameters(self):
        return self.conv.parameters()


class ToyDiscriminator:
    def __init__(self, cfg: DiscriminatorConfig, seed: int):
        self.cfg = cfg
        rng = np.random.Generator(np.random.Philox(seed))
        chs = [1] + [cfg.base_channels * (i + 1) for i in range(len(cfg.strides))]
        self.blocks = [
            DiscriminatorBlock(chs[i], chs[i + 1], s, cfg, rng, f"blocks.{i}")
            for i, s in enumerate(cfg.strides)
        ]
        self.score = Conv1d(chs[-1], 1, cfg.score_kernel, rng=rng, name="score")

    def plain_run(self, x: Tensor):
        """Bare path: per-block features and score, no wrapping machinery."""
        features = []
        for block in self.blocks:
            x = block.forward(x)
            features.append(x)
        return features, self.score(x)

    def pair_forward(self, real: Tensor, fake: Tensor,
                     schedule: DeltaSchedule | None,
                     fake_schedule: DeltaSchedule | None = None,
                     sync: bool = True, feature_tap: str = "post"):
        if schedule is None:
            rf, rs = self.plain_run(real)
            ff, fs = self.plain_run(fake)
            from .wrapping import DiscriminatorPairResult
            return DiscriminatorPairResult(rf, ff, rs, fs, [], [])
        return discriminator_pair_forward(
            self.blocks, schedule, real, fake, sync=sync,
            fake_schedule=fake_schedule, score_head=lambda t: self.score(t),
            feature_tap=feature_tap)

    def parameters(self):
        params = []
        for b in self.blocks:
            params += b.parameters()
        return params + self.score.parameters()

    def named_parameters(self) -> dict[str, Tensor]:
        return {p.name: p for p in self.parameters()}


def build_toy_generator(cfg: TrainConfig) -> ToyGenerator:
    return ToyGenerator(cfg.generator, seed=cfg.seed + _SEED_GEN_INIT)


def build_toy_discriminator(cfg: TrainConfig) -> ToyDiscriminator:
    return ToyDiscriminator(cfg.discriminator, seed=cfg.seed + _SEED_DISC_INIT)


def inference(gen: ToyGenerator, features: Signal) -> Signal:
    return gen.inference(features)


# ---------------------------------------------------------------------------
# differentiable log-mel (matches metrics.mel_spectrogram's definition)

_MEL_CONSTANTS: dict[MelConfig, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}


def _mel_constants(cfg: MelConfig):
    if cfg not in _MEL_CONSTANTS:
        n_bins = cfg.fft_size // 2 + 1
        j = np.arange(cfg.win_length)[:, None]
        k = np.arange(n_bins)[None, :]
        ang = 2.0 * np.pi * j * k / cfg.fft_size
        _MEL_CONSTANTS[cfg] = (
            hann_window(cfg.win_length),
            np.cos(ang),
            -np.sin(ang),
            mel_filterbank(cfg).T,
        )
    return _MEL_CONSTANTS[cfg]


def log_mel_tensor(x: Tensor, cfg: MelConfig, n_frames: int | None = None) -> Tensor:
    """Differentiable log mel-magnitude frames of a (B, 1, L) waveform tensor."""
    window, cos_mat, sin_mat, fb_t = _mel_constants(cfg)
    frames = F.frame(x, cfg.win_length, cfg.hop, n_frames=n_frames, center=cfg.center)
    wf = F.mul_const(frames, window)
    re = F.matmul_const(wf, cos_mat)
    im = F.matmul_const(wf, sin_mat)
    mag = F.sqrt_eps(F.add(F.square(re), F.square(im)), 1e-12)
    return F.log_floor(F.matmul_const(mag, fb_t), cfg.floor)


def features_from_wave(wave: Signal, cfg: MelConfig) -> np.ndarray:
    """(n_mels, frames) log-mel features covering the signal, one frame per hop."""
    n_frames = wave.length // cfg.hop
    return metrics.mel_spectrogram(wave, cfg, n_frames=n_frames).T


# ---------------------------------------------------------------------------
# losses


def lsgan_d_loss(real_score: Tensor, fake_score: Tensor) -> Tensor:
    real_term = F.mean(F.square(F.affine(real_score, -1.0, 1.0)))
    fake_term = F.mean(F.square(fake_score))
    return F.add(real_term, fake_term)


def lsgan_g_loss(fake_score: Tensor) -> Tensor:
    return F.mean(F.square(F.affine(fake_score, -1.0, 1.0)))


def feature_matching_loss(real_features, fake_features) -> Tensor:
    total = None
    for rf, ff in zip(real_features, fake_features):
        term = F.abs_mean(F.sub(rf.detach(), ff))
        total = term if total is None else F.add(total, term)
    return total


@dataclass(frozen=True)
class LossBundle:
    loss_g: float
    loss_d: float
    loss_fm: float
    loss_recon: float
    adv_weight: float
    fm_weight: float
    recon_weight: float

    @property
    def total_g(self) -> float:
        return (self.adv_weight * self.loss_g + self.fm_weight * self.loss_fm
                + self.recon_weight * self.loss_recon)


@dataclass(frozen=True)
class StepRecord:
    step: int
    losses: LossBundle
    gen_deltas: list[float]
    disc_real_deltas: list[float]
    disc_fake_deltas: list[float]


# ---------------------------------------------------------------------------
# data


class TrainingCorpus:
    """Batches of (features, waveform) segments.

    Default source is on-the-fly harmonic synthesis; with ``wav_dir`` set,
    segments are random crops of the user's mono WAV files instead.
    """

    def __init__(self, cfg: TrainConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self._waves: list[np.ndarray] | None = None
        if cfg.corpus.wav_dir is not None:
            paths = sorted(Path(cfg.corpus.wav_dir).glob("*.wav"))
            if not paths:
                raise FileNotFoundError(f"no .wav files in {cfg.corpus.wav_dir}")
            self._waves = []
            for p in paths:
                sig = read_wav(p)
                if sig.sample_rate != cfg.sample_rate:
                    raise ValueError(f"{p}: sample rate {sig.sample_rate}, "
                                     f"expected {cfg.sample_rate}")
                if sig.length >= cfg.segment_length:
                    self._waves.append(sig.mono)
            if not self._waves:
                raise ValueError("no WAV file is at least one segment long")

    def _next_wave(self) -> np.ndarray:
        cfg = self.cfg
        if self._waves is not None:
            wave = self._waves[int(self.rng.integers(len(self._waves)))]
            start = int(self.rng.integers(len(wave) - cfg.segment_length + 1))
            return wave[start:start + cfg.segment_length]
        spec = SynthSpec(
            kind=cfg.corpus.kind,
            duration=cfg.segment_length / cfg.sample_rate,
            sample_rate=cfg.sample_rate,
            f0_range=(cfg.corpus.f0_min, cfg.corpus.f0_max),
            max_band_hz=cfg.corpus.max_band_hz,
            amplitude=cfg.corpus.amplitude,
            seed=int(self.rng.integers(2 ** 62)),
        )
        return synthesize(spec).mono

    def next_batch(self, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
        waves = np.stack([self._next_wave() for _ in range(batch_size)])[:, None, :]
        feats = np.stack([
            features_from_wave(Signal(w[0], self.cfg.sample_rate), self.cfg.mel)
            for w in waves
        ])
        return feats, waves


# ---------------------------------------------------------------------------
# training


class Trainer:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.gen = build_toy_generator(cfg)
        self.disc = build_toy_discriminator(cfg)
        self.opt_g = Adam(self.gen.parameters(), lr=cfg.lr, betas=cfg.adam_betas)
        self.opt_d = Adam(self.disc.parameters(), lr=cfg.lr, betas=cfg.adam_betas)
        self.corpus = TrainingCorpus(
            cfg, np.random.Generator(np.random.Philox(cfg.seed + _SEED_DATA)))
        self.delta_rng = DeltaRng(cfg.seed + _SEED_DELTA)
        self.step_index = 0

    def _draw_schedules(self):
        cfg = self.cfg.jengan
        method = SamplingMethod(cfg.sampling, cfg.clamp_bound)
        gen_sched = disc_sched = disc_fake_sched = None
        if cfg.wraps_generator:
            gen_sched = (zero_schedule(len(self.gen.blocks)) if cfg.force_zero
                         else sample_schedule(method, len(self.gen.blocks), self.delta_rng))
        if cfg.wraps_discriminator:
            n = len(self.disc.blocks)
            disc_sched = (zero_schedule(n) if cfg.force_zero
                          else sample_schedule(method, n, self.delta_rng))
            if not cfg.sync:
                disc_fake_sched = (zero_schedule(n) if cfg.force_zero
                                   else sample_schedule(method, n, self.delta_rng))
        return gen_sched, disc_sched, disc_fake_sched

    def train_step(self) -> StepRecord:
        cfg = self.cfg
        feats_np, waves_np = self.corpus.next_batch(cfg.batch_size)
        features = Tensor(feats_np)
        real = Tensor(waves_np)
        gen_sched, disc_sched, disc_fake_sched = self._draw_schedules()
        sync = cfg.jengan.sync
        tap = cfg.jengan.feature_tap

        fake = self.gen.forward(features, gen_sched)

        self.opt_d.zero_grad()
        pair_d = self.disc.pair_forward(real, fake.detach(), disc_sched,
                                        disc_fake_sched, sync, tap)
        loss_d = lsgan_d_loss(pair_d.real_score, pair_d.fake_score)
        loss_d.backward()
        self.opt_d.step()

        self.opt_g.zero_grad()
        pair_g = self.disc.pair_forward(real, fake, disc_sched,
                                        disc_fake_sched, sync, tap)
        loss_adv = lsgan_g_loss(pair_g.fake_score)
        loss_fm = feature_matching_loss(pair_g.real_features, pair_g.fake_features)
        n_frames = cfg.segment_length // cfg.mel.hop
        mel_fake = log_mel_tensor(fake, cfg.mel, n_frames=n_frames)
        mel_real = log_mel_tensor(real, cfg.mel, n_frames=n_frames)
        loss_recon = F.abs_mean(F.sub(mel_fake, mel_real))
        total = F.add(F.affine(loss_adv, cfg.adv_weight),
                      F.add(F.affine(loss_fm, cfg.fm_weight),
                            F.affine(loss_recon, cfg.recon_weight)))
        total.backward()
        self.opt_g.step()

        bundle = LossBundle(
            loss_g=loss_adv.item(), loss_d=loss_d.item(),
            loss_fm=loss_fm.item(), loss_recon=loss_recon.item(),
            adv_weight=cfg.adv_weight, fm_weight=cfg.fm_weight,
            recon_weight=cfg.recon_weight)
        if not all(np.isfinite(v) for v in
                   (bundle.loss_g, bundle.loss_d, bundle.loss_fm, bundle.loss_recon)):
            raise TrainingDivergedError(f"non-finite loss at step {self.step_index}")
        record = StepRecord(
            step=self.step_index, losses=bundle,
            gen_deltas=gen_sched.values if gen_sched is not None else [],
            disc_real_deltas=pair_d.real_deltas,
            disc_fake_deltas=pair_d.fake_deltas)
        self.step_index += 1
        return record

    def checkpoint_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name, p in self.gen.named_parameters().items():
            out[f"gen.{name}"] = p.data
        for name, p in self.disc.named_parameters().items():
            out[f"disc.{name}"] = p.data
        return out


LOSS_CSV_HEADER = "step,loss_g,loss_d,loss_fm,loss_recon"


def losses_csv_line(record: StepRecord) -> str:
    b = record.losses
    return (f"{record.step},{b.loss_g:.12e},{b.loss_d:.12e},"
            f"{b.loss_fm:.12e},{b.loss_recon:.12e}")


def run_training(cfg: TrainConfig, out_dir, on_step=None) -> list[StepRecord]:
    """Train for ``cfg.steps`` steps, writing config, loss CSV, and checkpoints.

    With ``steps == 0`` only the initial checkpoint (and an empty loss CSV)
    is written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w") as f:
        json.dump(cfg.to_dict(), f, indent=2)
    trainer = Trainer(cfg)
    save_checkpoint(out_dir / "checkpoints" / "initial.jgn", trainer.checkpoint_tensors())
    records = []
    with open(out_dir / "losses.csv", "w") as f:
        f.write(LOSS_CSV_HEADER + "\n")
        for _ in range(cfg.steps):
            record = trainer.train_step()
            records.append(record)
            f.write(losses_csv_line(record) + "\n")
            if on_step is not None:
                on_step(record)
    if cfg.steps > 0:
        save_checkpoint(out_dir / "checkpoints" / "final.jgn", trainer.checkpoint_tensors())
    return records


def load_generator(cfg: TrainConfig, checkpoint_path) -> ToyGenerator:
    """Rebuild the generator architecture and load its tensors from a checkpoint."""
    gen = build_toy_generator(cfg)
    tensors = load_checkpoint(checkpoint_path)
    for name, p in gen.named_parameters().items():
        key = f"gen.{name}"
        if key not in tensors:
            raise KeyError(f"checkpoint missing tensor {key!r}")
        if tensors[key].shape != p.data.shape:
            raise ValueError(f"checkpoint tensor {key!r} has shape "
                             f"{tensors[key].shape}, expected {p.data.shape}")
        p.data = tensors[key]
    return gen
