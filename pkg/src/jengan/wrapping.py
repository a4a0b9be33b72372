"""Wrapping network blocks with shifted input/output sinc filters.

During training a block M becomes

    filter(+output_shift) . M . filter(-input_shift)

where the two shifts describe the same continuous-time displacement on
both sides of a resampling block: the sampled value lands on whichever
side runs at the higher rate, and the other side gets it divided by the
rate ratio, so neither filter ever shifts by more than the sampled value.
At inference no filters are inserted at all; the all-zero schedule through
the wrapped path must (and does) agree bit-for-bit with that bare path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .delta_sampling import DeltaSchedule
from .nn import functional as F
from .nn.tensor import Tensor
from .sinc_filters import Signal, SincKernel, apply_filter, make_sinc_kernel

MAX_SAMPLED_VALUE = 2.0


class InvalidRatioError(ValueError):
    """Resampling ratio must be positive."""


@dataclass(frozen=True)
class ShiftAssignment:
    """How one sampled shifting value splits across a block's two filters.

    ``side`` names the filter that carries the sampled value verbatim:
    output for upsampling (and rate-preserving) blocks, input for
    downsampling blocks.  The other side is scaled by the rate ratio so the
    continuous-time shift magnitude matches.
    """

    input_shift: float
    output_shift: float
    sampled_value: float
    side: str


@dataclass(frozen=True)
class WrappableBlock:
    """A differentiable map plus its output/input rate ratio."""

    forward: Callable
    resample_ratio: float | Fraction

    @property
    def ratio(self) -> float:
        return float(self.resample_ratio)


def assign_shift(sampled_value: float, r: float | Fraction) -> ShiftAssignment:
    """Split a sampled shifting value across the input/output filter pair."""
    r = float(r)
    v = float(sampled_value)
    if not r > 0:
        raise InvalidRatioError(f"resample ratio must be positive, got {r}")
    if abs(v) > MAX_SAMPLED_VALUE:
        raise ValueError(f"sampled value {v} outside bound [-{MAX_SAMPLED_VALUE}, {MAX_SAMPLED_VALUE}]")
    if r >= 1.0:
        return ShiftAssignment(input_shift=v / r, output_shift=v,
                               sampled_value=v, side="output")
    return ShiftAssignment(input_shift=v, output_shift=v * r,
                           sampled_value=v, side="input")


class WrapStats:
    """Counts wrap invocations; lets tests assert the bare path stays bare."""

    def __init__(self):
        self.calls = 0

    def reset(self):
        self.calls = 0


WRAP_STATS = WrapStats()


def _filter(x, kernel: SincKernel):
    if isinstance(x, Tensor):
        return F.channelwise_filter(x, kernel.taps)
    if isinstance(x, Signal):
        return apply_filter(x, kernel)
    raise TypeError(f"cannot filter {type(x).__name__}; expected Signal or Tensor")


def wrap_block_parts(block, assignment: ShiftAssignment, x, half_width: int = 12):
    """Run one wrapped block, returning (pre-output-filter, final) activations."""
    WRAP_STATS.calls += 1
    k_in = make_sinc_kernel(-assignment.input_shift, half_width)
    k_out = make_sinc_kernel(+assignment.output_shift, half_width)
    raw = block.forward(_filter(x, k_in))
    return raw, _filter(raw, k_out)


def wrap_block(block, assignment: ShiftAssignment, x, half_width: int = 12):
    """filter(+output_shift) . block . filter(-input_shift), gradient-transparent."""
    return wrap_block_parts(block, assignment, x, half_width)[1]


def generator_forward_jengan(blocks: Sequence, schedule: DeltaSchedule, x):
    """Apply blocks in order, each wrapped with its schedule entry."""
    if len(schedule) != len(blocks):
        raise ValueError(f"schedule covers {len(schedule)} blocks, model has {len(blocks)}")
    for block, sample in zip(blocks, schedule):
        a = assign_shift(sample.value, block.resample_ratio)
        x = wrap_block(block, a, x)
    return x


@dataclass
class DiscriminatorPairResult:
    real_features: list
    fake_features: list
    real_score: object
    fake_score: object
    real_deltas: list[float]
    fake_deltas: list[float]


def discriminator_pair_forward(blocks: Sequence, schedule: DeltaSchedule,
                               real, fake, sync: bool = True,
                               fake_schedule: DeltaSchedule | None = None,
                               score_head: Callable | None = None,
                               feature_tap: str = "post") -> DiscriminatorPairResult:
    """Run the real/fake pair through wrapped discriminator blocks.

    With ``sync`` (the baseline) the identical per-block shifting value is
    used for both signals, which keeps the per-block features comparable
    for feature matching.  The async ablation passes ``sync=False`` plus an
    independently drawn ``fake_schedule``.  Per-block activations are
    returned; ``feature_tap`` selects them before ("pre") or after ("post")
    each block's output filter.
    """
    shape_r = real.data.shape
    shape_f = fake.data.shape
    if shape_r != shape_f:
        raise ValueError(f"real/fake shape mismatch: {shape_r} vs {shape_f}")
    if len(schedule) != len(blocks):
        raise ValueError(f"schedule covers {len(schedule)} blocks, model has {len(blocks)}")
    if feature_tap not in ("pre", "post"):
        raise ValueError(f"feature_tap must be 'pre' or 'post', got {feature_tap!r}")
    if sync:
        fake_sched = schedule
    else:
        if fake_schedule is None:
            raise ValueError("async mode needs an independently drawn fake_schedule")
        if len(fake_schedule) != len(blocks):
            raise ValueError("fake schedule length mismatch")
        fake_sched = fake_schedule

    def run(x, sched):
        features = []
        for block, sample in zip(blocks, sched):
            a = assign_shift(sample.value, block.resample_ratio)
            raw, x = wrap_block_parts(block, a, x)
            features.append(raw if feature_tap == "pre" else x)
        score = score_head(x) if score_head is not None else x
        return features, score

    real_features, real_score = run(real, schedule)
    fake_features, fake_score = run(fake, fake_sched)
    return DiscriminatorPairResult(
        real_features=real_features,
        fake_features=fake_features,
        real_score=real_score,
        fake_score=fake_score,
        real_deltas=schedule.values,
        fake_deltas=fake_sched.values,
    )
