"""Differentiable ops: convolutions, activations, framing, reductions.

Convolutions are direct (no FFT): desk-scale shapes make O(N*K) cheap and
keep every gradient an exact rearrangement of the forward arithmetic.
Contractions are phrased as 2-D matmuls so they hit BLAS.  Layout follows
the usual 1-D stack: activations are ``(batch, channels, length)``; conv
weights are ``(out, in, K)``; transposed-conv weights are ``(in, out, K)``.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, make_op


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation: out[b,o,m] = sum_{c,j} x[b,c,m*stride+j-padding] w[o,c,j]."""
    B, C, L = x.data.shape
    O, C2, K = weight.data.shape
    if C2 != C:
        raise ValueError(f"conv1d channel mismatch: input {C}, weight expects {C2}")
    s, p = int(stride), int(padding)
    L_out = (L + 2 * p - K) // s + 1
    if L_out < 1:
        raise ValueError(f"conv1d output would be empty (L={L}, K={K}, stride={s}, padding={p})")

    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p))) if p else x.data
    idx = np.arange(L_out)[:, None] * s + np.arange(K)[None, :]
    patches = xp[:, :, idx]                                   # (B, C, L_out, K)
    pmat = patches.transpose(0, 2, 1, 3).reshape(B * L_out, C * K)
    wmat = weight.data.reshape(O, C * K)
    out = np.ascontiguousarray((pmat @ wmat.T).reshape(B, L_out, O).transpose(0, 2, 1))
    if bias is not None:
        out += bias.data[None, :, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(go: np.ndarray):
        gmat = go.transpose(0, 2, 1).reshape(B * L_out, O)
        if weight.requires_grad:
            weight._accumulate((gmat.T @ pmat).reshape(O, C, K))
        if bias is not None and bias.requires_grad:
            bias._accumulate(go.sum(axis=(0, 2)))
        if x.requires_grad:
            gpatches = (gmat @ wmat).reshape(B, L_out, C, K)
            gxp = np.zeros_like(xp)
            for j in range(K):
                gxp[:, :, j:j + s * L_out:s] += gpatches[:, :, :, j].transpose(0, 2, 1)
            x._accumulate(gxp[:, :, p:p + L] if p else gxp)

    return make_op(out, parents, backward)


def conv_transpose1d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
                     stride: int = 1, padding: int = 0) -> Tensor:
    """Fractionally strided convolution: upsamples length by ``stride``.

    out[b,o,t] = sum_{c,i,j: i*stride+j-padding = t} x[b,c,i] w[c,o,j],
    output length (L-1)*stride - 2*padding + K.
    """
    B, C, L = x.data.shape
    C2, O, K = weight.data.shape
    if C2 != C:
        raise ValueError(f"conv_transpose1d channel mismatch: input {C}, weight expects {C2}")
    s, p = int(stride), int(padding)
    L_full = (L - 1) * s + K
    L_out = L_full - 2 * p
    if L_out < 1:
        raise ValueError("conv_transpose1d output would be empty")

    xmat = x.data.transpose(0, 2, 1).reshape(B * L, C)
    wmat = weight.data.reshape(C, O * K)
    contrib = (xmat @ wmat).reshape(B, L, O, K)
    full = np.zeros((B, O, L_full))
    for j in range(K):
        full[:, :, j:j + s * L:s] += contrib[:, :, :, j].transpose(0, 2, 1)
    out = full[:, :, p:p + L_out] if p else full
    if bias is not None:
        out += bias.data[None, :, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(go: np.ndarray):
        go_full = np.pad(go, ((0, 0), (0, 0), (p, p))) if p else go
        idx = np.arange(L)[:, None] * s + np.arange(K)[None, :]
        gathered = go_full[:, :, idx]                         # (B, O, L, K)
        gmat = gathered.transpose(0, 2, 1, 3).reshape(B * L, O * K)
        if weight.requires_grad:
            weight._accumulate((xmat.T @ gmat).reshape(C, O, K))
        if bias is not None and bias.requires_grad:
            bias._accumulate(go.sum(axis=(0, 2)))
        if x.requires_grad:
            x._accumulate(np.ascontiguousarray(
                (gmat @ wmat.T).reshape(B, L, C).transpose(0, 2, 1)))

    return make_op(out, parents, backward)


def _correlate_last_axis(data: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """out[..., m] = sum_i taps[i] * data[..., m + i - H], zero padded.

    One scaled slice-add per tap; exact zero taps contribute nothing at
    all, so impulse kernels reproduce their input exactly.
    """
    H = (len(taps) - 1) // 2
    L = data.shape[-1]
    padded = np.pad(data, [(0, 0)] * (data.ndim - 1) + [(H, H)])
    out = np.zeros_like(data)
    for i, t in enumerate(taps):
        if t != 0.0:
            out += t * padded[..., i:i + L]
    return out


def channelwise_filter(x: Tensor, taps: np.ndarray) -> Tensor:
    """Correlate every channel with a fixed odd-length kernel, zero padded.

    Same semantics as :func:`jengan.sinc_filters.apply_filter`:
    out[..., m] = sum_n taps[n] x[..., m+n] for n in [-H, H].  The kernel is
    a constant (no gradient); the input gradient is correlation with the
    reversed taps.
    """
    taps = np.asarray(taps, dtype=np.float64)
    out = _correlate_last_axis(x.data, taps)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(_correlate_last_axis(go, taps[::-1]))

    return make_op(out, (x,), backward)


def leaky_relu(x: Tensor, slope: float = 0.1) -> Tensor:
    factor = np.where(x.data > 0, 1.0, slope)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * factor)

    return make_op(x.data * factor, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * (1.0 - y * y))

    return make_op(y, (x,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")

    def backward(go: np.ndarray):
        if a.requires_grad:
            a._accumulate(go)
        if b.requires_grad:
            b._accumulate(go)

    return make_op(a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"sub shape mismatch: {a.data.shape} vs {b.data.shape}")

    def backward(go: np.ndarray):
        if a.requires_grad:
            a._accumulate(go)
        if b.requires_grad:
            b._accumulate(-go)

    return make_op(a.data - b.data, (a, b), backward)


def affine(x: Tensor, scale: float = 1.0, shift: float = 0.0) -> Tensor:
    """Elementwise scale*x + shift with scalar constants."""

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * scale)

    return make_op(scale * x.data + shift, (x,), backward)


def square(x: Tensor) -> Tensor:
    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * 2.0 * x.data)

    return make_op(x.data * x.data, (x,), backward)


def sqrt_eps(x: Tensor, eps: float = 1e-12) -> Tensor:
    """sqrt(x + eps); eps keeps the gradient finite at exact zeros."""
    y = np.sqrt(x.data + eps)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * 0.5 / y)

    return make_op(y, (x,), backward)


def log_floor(x: Tensor, floor: float) -> Tensor:
    """log(max(x, floor)); gradient is zero in the floored region."""
    clipped = np.maximum(x.data, floor)
    active = x.data > floor

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(np.where(active, go / clipped, 0.0))

    return make_op(np.log(clipped), (x,), backward)


def mean(x: Tensor) -> Tensor:
    n = x.data.size

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(np.full_like(x.data, float(go) / n))

    return make_op(np.asarray(x.data.mean()), (x,), backward)


def abs_mean(x: Tensor) -> Tensor:
    """Mean absolute value (L1); subgradient 0 at exact zeros."""
    n = x.data.size
    sign = np.sign(x.data)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(sign * (float(go) / n))

    return make_op(np.asarray(np.abs(x.data).mean()), (x,), backward)


def mul_const(x: Tensor, c: np.ndarray) -> Tensor:
    """Elementwise product with a constant broadcast along leading axes."""
    c = np.asarray(c, dtype=np.float64)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go * c)

    return make_op(x.data * c, (x,), backward)


def matmul_const(x: Tensor, m: np.ndarray) -> Tensor:
    """Contract the last axis with a constant matrix: y[..., i] = sum_j x[..., j] m[j, i]."""
    m = np.asarray(m, dtype=np.float64)
    lead = x.data.shape[:-1]
    flat = x.data.reshape(-1, x.data.shape[-1])   # one big GEMM, not batched matvecs
    out = (flat @ m).reshape(*lead, m.shape[1])

    def backward(go: np.ndarray):
        if x.requires_grad:
            gflat = go.reshape(-1, m.shape[1])
            x._accumulate((gflat @ m.T).reshape(x.data.shape))

    return make_op(out, (x,), backward)


def center_last_axis(x: Tensor) -> Tensor:
    """Subtract each row's mean along the last axis (a DC blocker)."""
    mu = x.data.mean(axis=-1, keepdims=True)

    def backward(go: np.ndarray):
        if x.requires_grad:
            x._accumulate(go - go.mean(axis=-1, keepdims=True))

    return make_op(x.data - mu, (x,), backward)


def frame(x: Tensor, win_length: int, hop: int, n_frames: int | None = None,
          center: bool = False) -> Tensor:
    """Slice (B, C, L) into overlapping windows (B, C, F, win_length).

    With ``center`` the signal is zero padded by ``win_length//2`` on both
    sides first, which lets ``n_frames = L // hop`` cover the whole signal.
    """
    B, C, L = x.data.shape
    pad = win_length // 2 if center else 0
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad))) if pad else x.data
    L_eff = xp.shape[-1]
    max_frames = 1 + (L_eff - win_length) // hop
    F = max_frames if n_frames is None else int(n_frames)
    if F < 1 or F > max_frames:
        raise ValueError(f"cannot take {F} frames of {win_length} from length {L_eff} at hop {hop}")
    idx = np.arange(F)[:, None] * hop + np.arange(win_length)[None, :]
    out = xp[:, :, idx]

    def backward(go: np.ndarray):
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for t in range(win_length):
                gxp[:, :, t:t + hop * F:hop] += go[:, :, :, t]
            x._accumulate(gxp[:, :, pad:pad + L] if pad else gxp)

    return make_op(out, (x,), backward)
