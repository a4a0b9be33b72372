"""Measurements: spectrograms, spectral distances, equivariance, aliasing.

Everything here is plain numpy and pure; the differentiable training loss
re-derives its mel pipeline from the same filterbank so the two agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sinc_filters import Signal, fractional_delay


@dataclass(frozen=True)
class StftConfig:
    fft_size: int
    hop: int
    win_length: int
    center: bool = False

    def __post_init__(self):
        if not (0 < self.hop <= self.win_length <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= win_length <= fft_size, got "
                f"hop={self.hop}, win={self.win_length}, fft={self.fft_size}")


@dataclass(frozen=True)
class MelConfig:
    sample_rate: float = 22050.0
    fft_size: int = 1024
    hop: int = 256
    win_length: int = 1024
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    floor: float = 1e-5
    center: bool = False

    @property
    def stft(self) -> StftConfig:
        return StftConfig(self.fft_size, self.hop, self.win_length, self.center)


DEFAULT_MEL = MelConfig()

# (fft_size, hop, win_length) triples for the multi-resolution distance
MSTFT_RESOLUTIONS = ((512, 50, 240), (1024, 120, 600), (2048, 240, 1200))
MSTFT_LOG_FLOOR = 1e-7


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _mono_data(x) -> np.ndarray:
    if isinstance(x, Signal):
        return x.mono
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected mono audio, got shape {arr.shape}")
    return arr


def stft_magnitude(x, cfg: StftConfig, n_frames: int | None = None) -> np.ndarray:
    """Windowed DFT magnitudes, shape (n_frames, fft_size//2 + 1).

    Frames start at multiples of ``hop``; with ``center`` the signal is
    first zero padded by ``win_length//2`` on both sides.
    """
    data = _mono_data(x)
    if cfg.center:
        pad = cfg.win_length // 2
        data = np.pad(data, (pad, pad))
    if len(data) < cfg.win_length:
        raise ValueError(f"signal length {len(data)} shorter than window {cfg.win_length}")
    max_frames = 1 + (len(data) - cfg.win_length) // cfg.hop
    F = max_frames if n_frames is None else int(n_frames)
    if not 1 <= F <= max_frames:
        raise ValueError(f"cannot take {F} frames (at most {max_frames})")
    idx = np.arange(F)[:, None] * cfg.hop + np.arange(cfg.win_length)[None, :]
    frames = data[idx] * hann_window(cfg.win_length)[None, :]
    return np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig) -> np.ndarray:
    """Triangular mel filters evaluated at DFT bin frequencies, (n_mels, bins)."""
    n_bins = cfg.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * cfg.sample_rate / cfg.fft_size
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    fb = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        left, center, right = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bin_hz - left) / (center - left)
        down = (right - bin_hz) / (right - center)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def mel_spectrogram(x, cfg: MelConfig = DEFAULT_MEL, n_frames: int | None = None) -> np.ndarray:
    """Log mel-magnitude frames, shape (n_frames, n_mels), log floored."""
    mag = stft_magnitude(x, cfg.stft, n_frames=n_frames)
    mel = mag @ mel_filterbank(cfg).T
    return np.log(np.maximum(mel, cfg.floor))


def mel_mae(a: Signal, b: Signal, cfg: MelConfig = DEFAULT_MEL) -> float:
    """Mean absolute difference of log mel frames; symmetric in (a, b)."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return float(np.mean(np.abs(mel_spectrogram(a, cfg) - mel_spectrogram(b, cfg))))


def mstft(a: Signal, b: Signal,
          resolutions=MSTFT_RESOLUTIONS) -> float:
    """Multi-resolution STFT distance between reference ``a`` and estimate ``b``.

    Sum over resolutions of spectral convergence plus log-magnitude L1:

        ||  |A| - |B|  ||_F / || |A| ||_F  +  mean | log|A| - log|B| |
    """
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    total = 0.0
    for fft_size, hop, win in resolutions:
        cfg = StftConfig(fft_size, hop, win)
        ma = stft_magnitude(a, cfg)
        mb = stft_magnitude(b, cfg)
        denom = np.linalg.norm(ma)
        sc = np.linalg.norm(ma - mb) / denom if denom > 0 else 0.0
        la = np.log(np.maximum(ma, MSTFT_LOG_FLOOR))
        lb = np.log(np.maximum(mb, MSTFT_LOG_FLOOR))
        total += float(sc) + float(np.mean(np.abs(la - lb)))
    return total


@dataclass(frozen=True)
class EquivarianceReport:
    """Per-shift equivariance errors of an end-to-end map."""

    deltas: tuple[float, ...]
    errors: tuple[float, ...]
    mean_error: float
    margin: int
    r_total: float

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "errors": list(self.errors),
            "mean_error": self.mean_error,
            "margin": self.margin,
            "r_total": self.r_total,
        }


def equivariance_error(model, x: Signal, deltas, margin: int,
                       r_total: float = 1.0) -> EquivarianceReport:
    """How far ``model`` is from commuting with fractional shifts.

    For each shift d the error is the relative L2 norm, over interior
    output samples (``margin`` excluded at each edge), of

        model(delay(x, d))  -  delay(model(x), d * r_total)

    normalized by the interior L2 norm of the shifted reference
    delay(model(x), d * r_total), so the number is comparable across
    models of different output scale.  Delays are sinc-kernel fractional
    shifts; ``r_total`` is the model's overall output/input rate ratio.
    """
    deltas = tuple(float(d) for d in deltas)
    if margin < 24:
        raise ValueError("margin must cover the two filter supports (>= 24 samples)")
    y0 = model(x)
    if 2 * margin >= y0.length:
        raise ValueError(f"margin {margin} leaves no interior in output length {y0.length}")
    errors = []
    for d in deltas:
        y_shift_in = model(fractional_delay(x, d))
        y_shift_out = fractional_delay(y0, d * r_total)
        ref = y_shift_out.data[:, margin:-margin]
        diff = y_shift_in.data[:, margin:-margin] - ref
        denom = float(np.sqrt(np.sum(ref * ref)))
        num = float(np.sqrt(np.sum(diff * diff)))
        errors.append(num / denom if denom > 0 else num)
    errors = tuple(errors)
    return EquivarianceReport(deltas=deltas, errors=errors,
                              mean_error=float(np.mean(errors)),
                              margin=margin, r_total=float(r_total))


@dataclass(frozen=True)
class AliasReport:
    """Share of energy above a cutoff that should be empty."""

    ratio: float
    cutoff: float

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "cutoff": self.cutoff}


def alias_energy(x: Signal, cutoff: float) -> AliasReport:
    """Energy ratio above ``cutoff`` (fraction of Nyquist, in (0, 1)).

    Uses the full-length DFT; a signal whose content is exactly on DFT bins
    below the cutoff therefore reports ~0.  Amplitude-scale invariant.
    """
    if not 0.0 < cutoff < 1.0:
        raise ValueError(f"cutoff must be in (0, 1), got {cutoff}")
    spec = np.fft.rfft(x.data, axis=1)
    energy = np.abs(spec) ** 2
    freqs = np.arange(spec.shape[1]) * x.sample_rate / x.length
    above = freqs > cutoff * (x.sample_rate / 2.0)
    total = float(energy.sum())
    if total == 0.0:
        return AliasReport(ratio=0.0, cutoff=cutoff)
    return AliasReport(ratio=float(energy[:, above].sum()) / total, cutoff=cutoff)
