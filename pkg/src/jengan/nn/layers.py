"""Layer objects: parameter containers over the functional ops."""

from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Parameter, Tensor


def _uniform_fan_in(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv1d:
    """Plain or strided 1-D convolution layer.

    When ``stride > 1`` this is the downsampling layer; padding defaults to
    the symmetric value that maps length L to L/stride, which requires
    kernel_size - stride to be even and L divisible by stride.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int = 1, padding: int | None = None, *,
                 rng: np.random.Generator, name: str):
        if padding is None:
            if (kernel_size - stride) % 2 != 0:
                raise ValueError("default padding needs kernel_size - stride even")
            padding = (kernel_size - stride) // 2
        self.stride = stride
        self.padding = padding
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size
        self.weight = Parameter(
            _uniform_fan_in(rng, (out_channels, in_channels, kernel_size), fan_in),
            name=f"{name}.weight")
        self.bias = Parameter(np.zeros(out_channels), name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        if self.stride > 1 and x.data.shape[-1] % self.stride != 0:
            raise ValueError(
                f"strided conv needs length divisible by stride {self.stride}, "
                f"got {x.data.shape[-1]}")
        return F.conv1d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


class ConvTranspose1d:
    """Transposed 1-D convolution; upsamples length by ``stride`` exactly.

    Default padding (kernel_size - stride)//2 gives output length
    L * stride; kernel_size - stride must be even.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 stride: int, padding: int | None = None, *,
                 rng: np.random.Generator, name: str):
        if padding is None:
            if (kernel_size - stride) % 2 != 0:
                raise ValueError("default padding needs kernel_size - stride even")
            padding = (kernel_size - stride) // 2
        self.stride = stride
        self.padding = padding
        self.kernel_size = kernel_size
        fan_in = in_channels * kernel_size
        self.weight = Parameter(
            _uniform_fan_in(rng, (in_channels, out_channels, kernel_size), fan_in),
            name=f"{name}.weight")
        self.bias = Parameter(np.zeros(out_channels), name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv_transpose1d(x, self.weight, self.bias,
                                  stride=self.stride, padding=self.padding)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]
