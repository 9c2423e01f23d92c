"""Layer primitives for the four signal networks.

Convolutions use SAME-style padding: strided convs emit ceil(L/stride)
samples, transposed convs emit exactly L*stride, and the zero padding is
split evenly with the extra sample on the right. These are the only
conventions that reproduce the architecture tables' output shapes.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

# inference-only batch chunking kicks in above this im2col buffer size
_CHUNK_BYTES = 3 * 10**8


def same_pads_1d(length: int, k: int, stride: int) -> tuple[int, int, int]:
    out_len = -(-length // stride)
    total = max(0, (out_len - 1) * stride + k - length)
    left = total // 2
    return out_len, left, total - left


def conv1d(x: Tensor, w: Tensor, b: Tensor | None, stride: int) -> Tensor:
    """Cross-correlation of [n, L, c_in] with kernel [k, c_in, c_out]."""
    n, L, ci = x.shape
    k, wci, co = w.shape
    if wci != ci:
        raise ValueError(f"conv1d channel mismatch: input {ci}, kernel {wci}")
    out_len, pl, pr = same_pads_1d(L, k, stride)

    recording = ad._grad_enabled and (x.requires_grad or w.requires_grad)
    if not recording and n > 1:
        est = n * out_len * k * ci * 8
        if est > _CHUNK_BYTES:
            step = max(1, n // -(-est // _CHUNK_BYTES))
            parts = [
                conv1d(Tensor(x.data[i : i + step]), w, b, stride).data
                for i in range(0, n, step)
            ]
            return Tensor(np.concatenate(parts, axis=0))

    patches = ad.unfold1d(x, k, stride, pl, pr)
    flat = ad.reshape(patches, (n * out_len, k * ci))
    out = ad.matmul(flat, ad.reshape(w, (k * ci, co)))
    out = ad.reshape(out, (n, out_len, co))
    if b is not None:
        out = ad.add(out, b)
    return out


def trans_conv1d(x: Tensor, w: Tensor, b: Tensor | None, stride: int) -> Tensor:
    """Transposed counterpart of conv1d: [n, L, c_in] -> [n, L*stride, c_out].

    Exact adjoint of a SAME conv1d from L*stride down to L (with the
    kernel's channel axes swapped), which makes <conv(x, w), y> equal
    <x, trans_conv(y, w_swapped)>.
    """
    n, L, ci = x.shape
    k, wci, co = w.shape
    if wci != ci:
        raise ValueError(f"trans_conv1d channel mismatch: input {ci}, kernel {wci}")
    if k < stride:
        raise ValueError("trans_conv1d requires kernel size >= stride")
    total = k - stride
    pl = total // 2
    pr = total - pl

    w_t = ad.reshape(ad.transpose(w, (1, 0, 2)), (ci, k * co))
    z = ad.matmul(ad.reshape(x, (n * L, ci)), w_t)
    p = ad.reshape(z, (n, L, k, co))
    out = ad.fold1d(p, L * stride, stride, pl, pr)
    if b is not None:
        out = ad.add(out, b)
    return out


def conv2d(x: Tensor, w: Tensor, b: Tensor | None, stride: int) -> Tensor:
    """Cross-correlation of [n, H, W, c_in] with kernel [kh, kw, c_in, c_out]."""
    n, H, W, ci = x.shape
    kh, kw, wci, co = w.shape
    if wci != ci:
        raise ValueError(f"conv2d channel mismatch: input {ci}, kernel {wci}")
    Ho, pt, pb = same_pads_1d(H, kh, stride)
    Wo, pl, pr = same_pads_1d(W, kw, stride)
    patches = ad.unfold2d(x, kh, kw, stride, (pt, pb, pl, pr))
    flat = ad.reshape(patches, (n * Ho * Wo, kh * kw * ci))
    out = ad.matmul(flat, ad.reshape(w, (kh * kw * ci, co)))
    out = ad.reshape(out, (n, Ho, Wo, co))
    if b is not None:
        out = ad.add(out, b)
    return out


def maxpool2d(x: Tensor, k: int = 2, stride: int = 2) -> Tensor:
    n, H, W, c = x.shape
    if H % stride or W % stride:
        raise ValueError("maxpool2d requires spatial dims divisible by stride")
    patches = ad.unfold2d(x, k, k, stride, (0, 0, 0, 0))
    Ho, Wo = H // stride, W // stride
    flat = ad.reshape(patches, (n, Ho, Wo, k * k, c))
    return ad.amax(flat, axis=3)


def dense(x: Tensor, w: Tensor, b: Tensor | None) -> Tensor:
    out = ad.matmul(x, w)
    if b is not None:
        out = ad.add(out, b)
    return out


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running: dict[str, np.ndarray],
    mode: str,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel standardization over batch and spatial axes (channel last)."""
    axes = tuple(range(x.data.ndim - 1))
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError("batch_norm in train mode needs batch size >= 2")
        mu = ad.mean_(x, axis=axes, keepdims=True)
        xc = ad.sub(x, mu)
        var = ad.mean_(ad.mul(xc, xc), axis=axes, keepdims=True)
        y = ad.div(xc, ad.sqrt(ad.add(var, Tensor(eps))))
        running["mean"] = momentum * running["mean"] + (1 - momentum) * mu.data.reshape(-1)
        running["var"] = momentum * running["var"] + (1 - momentum) * var.data.reshape(-1)
    elif mode == "infer":
        y = ad.div(
            ad.sub(x, Tensor(running["mean"])),
            Tensor(np.sqrt(running["var"] + eps)),
        )
    else:
        raise ValueError(f"unknown batch_norm mode {mode!r}")
    return ad.add(ad.mul(y, gamma), beta)


def phase_shuffle(
    x: Tensor,
    n_max: int,
    rng: np.random.Generator | None,
    mode: str,
    shifts: np.ndarray | None = None,
) -> Tensor:
    """Shift each (sample, channel) series by a uniform integer in [-n, n].

    Edges are filled by symmetric reflection. Identity (and no rng draw)
    when n_max == 0 or at inference time. `shifts` overrides the random
    per-(sample, channel) draw.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if n_max == 0 or mode != "train":
        return x
    n, L, c = x.shape
    if shifts is None:
        if rng is None:
            raise ValueError("phase_shuffle in train mode needs an rng")
        shifts = rng.integers(-n_max, n_max + 1, size=(n, c))
    idx = np.arange(L)[None, :, None] + np.asarray(shifts)[:, None, :]
    idx = np.where(idx < 0, -idx - 1, idx)
    idx = np.where(idx >= L, 2 * L - idx - 1, idx)
    return ad.take_len(x, idx)


def crop_center(x: Tensor, target: int) -> Tensor:
    """Symmetric center crop along the length axis (extra sample off the back)."""
    n, L, c = x.shape
    if L < target:
        raise ValueError(f"cannot crop length {L} to {target}")
    front = (L - target) // 2
    return ad.crop_len(x, front, front + target)
