"""WAV files and synthetic test signals.

WAV support is canonical RIFF/WAVE, 16-bit PCM, little-endian, fmt + data
chunks; unknown chunks are skipped.  Synthetic signals are deterministic
from their seed, and harmonic signals quantize every component frequency
to the DFT grid of the requested length, which makes them exactly
band-limited: everything above the highest harmonic is numerically zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sinc_filters import Signal


class WavFormatError(ValueError):
    """File is not a readable 16-bit PCM RIFF/WAVE file."""


def write_wav(path, signal: Signal) -> None:
    """Write 16-bit PCM; samples are clipped to [-1, 1] and scaled by 32768."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.clip(signal.data, -1.0, 1.0)
    pcm = np.clip(np.round(data * 32768.0), -32768, 32767).astype("<i2")
    interleaved = pcm.T.reshape(-1)  # frame major
    channels = signal.channels
    sample_rate = int(round(signal.sample_rate))
    byte_rate = sample_rate * channels * 2
    block_align = channels * 2
    payload = interleaved.tobytes()
    with open(path, "wb") as f:
        f.write(b"RIFF")
        f.write(struct.pack("<I", 36 + len(payload)))
        f.write(b"WAVE")
        f.write(b"fmt ")
        f.write(struct.pack("<IHHIIHH", 16, 1, channels, sample_rate,
                            byte_rate, block_align, 16))
        f.write(b"data")
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)


def read_wav(path) -> Signal:
    """Read 16-bit PCM; samples are normalized by 32768 into [-1, 1)."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise WavFormatError(f"{path}: truncated {chunk_id!r} chunk")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise WavFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word aligned
    if fmt is None or data is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise WavFormatError(f"{path}: unsupported encoding {audio_format} (want PCM)")
    if bits != 16:
        raise WavFormatError(f"{path}: unsupported bit depth {bits} (want 16)")
    if channels < 1:
        raise WavFormatError(f"{path}: bad channel count {channels}")
    n_values = len(data) // 2
    frames = n_values // channels
    if frames < 1:
        raise WavFormatError(f"{path}: empty data chunk")
    pcm = np.frombuffer(data[:frames * channels * 2], dtype="<i2")
    samples = pcm.astype(np.float64).reshape(frames, channels).T / 32768.0
    return Signal(data=samples, sample_rate=float(sample_rate))


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic test signal.

    kinds:
        harmonic - random-f0 tone stack, exactly band-limited (see module doc)
        chirp    - linear frequency sweep across the f0 range
        noise    - white noise
        impulse  - single unit sample at ``impulse_index``
    """

    kind: str
    duration: float = 0.2
    sample_rate: float = 22050.0
    f0_range: tuple[float, float] = (80.0, 400.0)
    n_harmonics: int | None = None
    max_band_hz: float = 4000.0
    envelope: str = "random"  # "flat" or "random"
    amplitude: float = 0.5
    seed: int = 0
    impulse_index: int = 0

    def __post_init__(self):
        if self.kind not in ("harmonic", "chirp", "noise", "impulse"):
            raise ValueError(f"unknown synth kind {self.kind!r}")
        if self.envelope not in ("flat", "random"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        nyquist = self.sample_rate / 2.0
        if self.kind == "harmonic" and self.n_harmonics is not None:
            if self.f0_range[1] * self.n_harmonics >= nyquist:
                raise ValueError(
                    f"{self.n_harmonics} harmonics of f0 up to {self.f0_range[1]} Hz "
                    f"reach past Nyquist {nyquist} Hz")


def synthesize(spec: SynthSpec) -> Signal:
    """Render a SynthSpec; identical specs give identical signals."""
    n = int(round(spec.duration * spec.sample_rate))
    if n < 1:
        raise ValueError("duration too short")
    rng = np.random.Generator(np.random.Philox(spec.seed))
    t = np.arange(n) / spec.sample_rate

    if spec.kind == "impulse":
        data = np.zeros(n)
        data[spec.impulse_index] = 1.0
        return Signal(data=data[None, :], sample_rate=spec.sample_rate)

    if spec.kind == "noise":
        data = spec.amplitude * rng.standard_normal(n)
        peak = np.max(np.abs(data))
        if peak > 1.0:
            data /= peak
        return Signal(data=data[None, :], sample_rate=spec.sample_rate)

    if spec.kind == "chirp":
        f0, f1 = spec.f0_range
        phase = 2.0 * np.pi * (f0 * t + 0.5 * (f1 - f0) / spec.duration * t * t)
        data = spec.amplitude * np.sin(phase)
        return Signal(data=data[None, :], sample_rate=spec.sample_rate)

    # harmonic: quantize f0 and envelope rates to the DFT grid of length n
    bin_hz = spec.sample_rate / n
    f0 = spec.f0_range[0] + (spec.f0_range[1] - spec.f0_range[0]) * rng.random()
    f0 = max(1, round(f0 / bin_hz)) * bin_hz
    # leave room for envelope sidebands (up to 5 bins above the top harmonic)
    band = min(spec.max_band_hz, spec.sample_rate / 2.0 - 6.0 * bin_hz)
    max_k = max(1, int(band // f0))
    if spec.n_harmonics is not None:
        k_count = min(spec.n_harmonics, max_k)
    else:
        k_count = int(rng.integers(1, max_k + 1))

    wave = np.zeros(n)
    for k in range(1, k_count + 1):
        amp = 1.0 / k * (0.5 + rng.random())
        phase = 2.0 * np.pi * rng.random()
        wave += amp * np.sin(2.0 * np.pi * (k * f0) * t + phase)

    if spec.envelope == "random":
        # low-rate bin-aligned modulation keeps the result exactly band-limited;
        # component amplitudes sum below the mean so the envelope stays positive
        env = np.full(n, 0.55)
        for _ in range(3):
            rate = max(1, int(rng.integers(1, 6))) * bin_hz
            env += 0.15 * rng.random() * np.cos(2.0 * np.pi * rate * t + 2.0 * np.pi * rng.random())
        wave = wave * env

    peak = np.max(np.abs(wave))
    if peak > 0:
        wave = wave * (spec.amplitude / peak)
    return Signal(data=wave[None, :], sample_rate=spec.sample_rate)
