"""Shifted truncated-sinc kernels and channel-wise filtering.

The kernel family here realizes fractional sample delays: filtering a
signal with the kernel built for shift ``delta`` delays it by ``delta``
samples.  Kernels are the raw truncated sinc, no window and no
renormalization, so integer shifts degenerate to exact unit impulses and
the zero-shift kernel is an exact identity.  The price is a passband
ripple of roughly 1/(pi * half_width) for fractional shifts; callers that
compare filtered output against ideal delays must budget for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidShiftError(ValueError):
    """Requested shift magnitude exceeds the kernel half-width."""


@dataclass(frozen=True)
class SincKernel:
    """Truncated shifted sinc filter.

    ``taps[i]`` is the coefficient at integer offset ``n = i - half_width``,
    so the array covers ``n`` in ``[-half_width, half_width]``.  The tap at
    offset ``n`` is 1 when ``n + delta == 0`` and
    ``sin(pi*(n+delta)) / (pi*(n+delta))`` otherwise.
    """

    taps: np.ndarray
    delta: float

    @property
    def half_width(self) -> int:
        return (len(self.taps) - 1) // 2

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or len(taps) % 2 != 1:
            raise ValueError("kernel taps must be a 1-D odd-length array")
        object.__setattr__(self, "taps", taps)


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled multi-channel real sequence.

    ``data`` has shape ``(channels, length)`` and must be finite.  Treat
    instances as immutable values; operations return new signals.
    """

    data: np.ndarray
    sample_rate: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise ValueError(f"signal data must be 1-D or 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("signal must have at least one channel and one sample")
        if not np.all(np.isfinite(data)):
            raise ValueError("signal data must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def mono(self) -> np.ndarray:
        """The single channel of a mono signal as a 1-D array."""
        if self.channels != 1:
            raise ValueError(f"expected mono signal, got {self.channels} channels")
        return self.data[0]


def make_sinc_kernel(delta: float, half_width: int = 12) -> SincKernel:
    """Build the shifted sinc kernel for a fractional delay of ``delta`` samples.

    Integer shifts are special-cased to exact unit impulses: for them every
    off-peak tap is mathematically zero (sine of an integer multiple of pi),
    and evaluating the formula in floating point would leave ~1e-17 residue
    that breaks exact-identity filtering.
    """
    delta = float(delta)
    half_width = int(half_width)
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    if not np.isfinite(delta) or abs(delta) > half_width:
        raise InvalidShiftError(
            f"shift {delta!r} outside kernel support [-{half_width}, {half_width}]"
        )
    n_taps = 2 * half_width + 1
    if delta.is_integer():
        taps = np.zeros(n_taps)
        taps[half_width - int(delta)] = 1.0
        return SincKernel(taps=taps, delta=delta)
    x = np.arange(-half_width, half_width + 1, dtype=np.float64) + delta
    taps = np.sin(np.pi * x) / (np.pi * x)
    return SincKernel(taps=taps, delta=delta)


def apply_filter(x: Signal, k: SincKernel) -> Signal:
    """Filter each channel of ``x`` with ``k`` independently.

    Output sample ``m`` is ``sum_n taps[n] * x[m + n]`` with ``x`` zero
    padded by ``half_width`` samples on each side, so output length equals
    input length and a kernel built for shift ``delta`` delays the signal
    by ``delta`` samples.  No cross-channel mixing.
    """
    flipped = k.taps[::-1]
    out = np.empty_like(x.data)
    for c in range(x.channels):
        out[c] = np.convolve(x.data[c], flipped, mode="same")
    return Signal(data=out, sample_rate=x.sample_rate)


def delay_signal(x: Signal, delta: float, half_width: int = 12) -> Signal:
    """Delay ``x`` by ``delta`` samples with a shifted sinc kernel."""
    return apply_filter(x, make_sinc_kernel(delta, half_width))


def integer_shift(data: np.ndarray, n: int) -> np.ndarray:
    """Shift the last axis right by ``n`` samples (left if negative), zero fill."""
    if n == 0:
        return data.copy()
    out = np.zeros_like(data)
    if n > 0:
        out[..., n:] = data[..., :-n]
    else:
        out[..., :n] = data[..., -n:]
    return out


def fractional_delay(x: Signal, delta: float, half_width: int = 12) -> Signal:
    """Delay by any real number of samples.

    Splits the delay into nearest integer plus fractional remainder in
    [-0.5, 0.5); the integer part is an exact index shift, the remainder a
    shifted sinc kernel.  Integer deltas therefore shift exactly, and the
    delay magnitude is not limited by the kernel support.
    """
    n0 = int(np.floor(delta + 0.5))
    frac = float(delta) - n0
    y = apply_filter(x, make_sinc_kernel(frac, half_width))
    return Signal(data=integer_shift(y.data, n0), sample_rate=x.sample_rate)


def frequency_response(k: SincKernel, n_points: int) -> np.ndarray:
    """Magnitude of the kernel's discrete-time Fourier transform.

    Returns an ``(n_points, 2)`` array of ``(frequency, magnitude)`` rows,
    frequencies in radians per sample uniformly spanning ``[0, pi]``.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    omega = np.linspace(0.0, np.pi, n_points)
    n = np.arange(-k.half_width, k.half_width + 1)
    # H(w) = sum_n taps[n] exp(-i w n)
    response = np.exp(-1j * omega[:, None] * n[None, :]) @ k.taps
    return np.column_stack([omega, np.abs(response)])
