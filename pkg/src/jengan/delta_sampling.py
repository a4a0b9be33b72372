"""Sampling of shifting values, with deterministic seeded streams.

Three methods are supported: equal-probability draws from the discrete set
{-2, -1, 0, 1, 2}, uniform draws from [-2, 2), and zero-mean normal draws
with standard deviation 2 clamped to [-2, 2].  Randomness comes from a
counter-based Philox stream, with normals produced by an explicit
Box-Muller transform on uniform draws, so identical seeds give identical
schedules on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DISCRETE_VALUES = (-2.0, -1.0, 0.0, 1.0, 2.0)
UNIFORM_LOW = -2.0
UNIFORM_HIGH = 2.0
NORMAL_SIGMA = 2.0
DEFAULT_CLAMP_BOUND = 2.0

_KINDS = ("discrete", "uniform", "normal")


class DeltaRng:
    """Seeded random stream for shifting values.

    Wraps a Philox counter-based generator and exposes just the two draw
    primitives sampling needs.  A stream is single-owner: share the values
    it produces, not the stream itself.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniform01(self) -> float:
        """One double in [0, 1)."""
        return float(self._gen.random())

    def normal(self, sigma: float = 1.0) -> float:
        """Box-Muller: z = sqrt(-2 ln u1) * cos(2 pi u2), u1 in (0, 1]."""
        u1 = 1.0 - self.uniform01()
        u2 = self.uniform01()
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class SamplingMethod:
    """One of the three shifting-value distributions.

    The distribution parameters are fixed module constants; only the kind
    varies.  ``clamp_bound`` applies to normal draws only and defaults to
    the support bound of the other two methods.
    """

    kind: str
    clamp_bound: float = DEFAULT_CLAMP_BOUND

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sampling kind {self.kind!r}, expected one of {_KINDS}")
        if not self.clamp_bound > 0:
            raise ValueError("clamp_bound must be positive")


@dataclass(frozen=True)
class DeltaSample:
    """A sampled shifting value.

    ``raw_value`` preserves the pre-clamp draw for normal sampling (equal
    to ``value`` otherwise).  ``method`` is None for fixed inference zeros,
    which are not produced by any sampling method.
    """

    value: float
    method: SamplingMethod | None
    raw_value: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.raw_value is None:
            object.__setattr__(self, "raw_value", self.value)


@dataclass(frozen=True)
class DeltaSchedule:
    """Ordered shifting values, one per wrapped block of a model."""

    per_block: tuple[DeltaSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_block", tuple(self.per_block))
        if len(self.per_block) < 1:
            raise ValueError("schedule must cover at least one block")

    def __len__(self) -> int:
        return len(self.per_block)

    def __iter__(self):
        return iter(self.per_block)

    def __getitem__(self, i: int) -> DeltaSample:
        return self.per_block[i]

    @property
    def values(self) -> list[float]:
        return [s.value for s in self.per_block]

    @property
    def is_zero(self) -> bool:
        return all(s.value == 0.0 for s in self.per_block)


def sample_delta(method: SamplingMethod, rng: DeltaRng) -> DeltaSample:
    """Draw one shifting value by the given method."""
    if method.kind == "discrete":
        u = rng.uniform01()
        idx = min(int(u * len(DISCRETE_VALUES)), len(DISCRETE_VALUES) - 1)
        return DeltaSample(value=DISCRETE_VALUES[idx], method=method)
    if method.kind == "uniform":
        u = rng.uniform01()
        value = UNIFORM_LOW + (UNIFORM_HIGH - UNIFORM_LOW) * u
        return DeltaSample(value=value, method=method)
    raw = rng.normal(NORMAL_SIGMA)
    value = min(max(raw, -method.clamp_bound), method.clamp_bound)
    return DeltaSample(value=value, method=method, raw_value=raw)


def sample_schedule(method: SamplingMethod, n_blocks: int, rng: DeltaRng) -> DeltaSchedule:
    """Draw one independent shifting value per block, in block order."""
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    return DeltaSchedule(tuple(sample_delta(method, rng) for _ in range(n_blocks)))


def zero_schedule(n_blocks: int) -> DeltaSchedule:
    """All-zero schedule: the inference configuration, where wrapping is a no-op."""
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    return DeltaSchedule(tuple(DeltaSample(value=0.0, method=None) for _ in range(n_blocks)))
