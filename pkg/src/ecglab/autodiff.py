"""Reverse-mode automatic differentiation over dense float64 arrays.

A Tensor wraps a numpy array and, while recording is enabled, every
operation appends a node to an implicit computation graph. Backward
functions are themselves written with Tensor ops, so gradients of
gradients (needed for the critic's gradient penalty) come for free via
``grad(..., create_graph=True)``.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

DTYPE = np.float64

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class GraphError(RuntimeError):
    """Raised when backward() is called on a value with no recorded graph."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[Tensor], Sequence[Tensor | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        backward(self)

    # operator sugar; constants are wrapped as non-differentiable tensors
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return pow_const(self, p)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._parents = ()
    out._vjp = None
    out.requires_grad = False
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    return out


def _unbroadcast(g: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Reduce gradient g back to `shape` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.data.ndim - len(shape)
    if extra > 0:
        g = sum_(g, axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = sum_(g, axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(neg(g), b.shape)

    return _make(a.data - b.data, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (neg(g),))


def mul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(mul(g, b), a.shape), _unbroadcast(mul(g, a), b.shape)

    return _make(a.data * b.data, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        ga = _unbroadcast(div(g, b), a.shape)
        gb = _unbroadcast(neg(div(mul(g, a), mul(b, b))), b.shape)
        return ga, gb

    return _make(a.data / b.data, (a, b), vjp)


def pow_const(a: Tensor, p: float) -> Tensor:
    def vjp(g):
        return (mul(g, mul(Tensor(np.asarray(p, dtype=DTYPE)), pow_const(a, p - 1))),)

    return _make(a.data**p, (a,), vjp)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)
    out = _make(out_data, (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, out),)
    return out


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: (div(g, a),))


def sqrt(a: Tensor) -> Tensor:
    out = _make(np.sqrt(a.data), (a,), None)
    if out._parents:
        out._vjp = lambda g: (div(mul(g, Tensor(0.5)), out),)
    return out


def tanh(a: Tensor) -> Tensor:
    out = _make(np.tanh(a.data), (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, sub(Tensor(1.0), mul(out, out))),)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))
    out = _make(out_data, (a,), None)
    if out._parents:
        out._vjp = lambda g: (mul(g, mul(out, sub(Tensor(1.0), out))),)
    return out


def relu(a: Tensor) -> Tensor:
    mask = (a.data > 0).astype(DTYPE)
    return _make(a.data * mask, (a,), lambda g: (mul(g, Tensor(mask)),))


def leaky_relu(a: Tensor, alpha: float = 0.2) -> Tensor:
    slope = np.where(a.data > 0, 1.0, alpha)
    return _make(a.data * slope, (a,), lambda g: (mul(g, Tensor(slope)),))


# ---------------------------------------------------------------------------
# reductions and shape ops


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    in_shape = a.shape

    def vjp(g):
        gd = g
        if axis is not None and not keepdims:
            kept = np.sum(a.data, axis=axis, keepdims=True).shape
            gd = reshape(gd, kept)
        return (expand(gd, in_shape),)

    def vjp_scalar(g):
        return (expand(g, in_shape),)

    out = np.sum(a.data, axis=axis, keepdims=keepdims)
    if axis is None and not keepdims:
        return _make(np.asarray(out), (a,), vjp_scalar)
    return _make(out, (a,), vjp)


def mean_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = 1
        for ax in axes:
            n *= a.shape[ax]
    return mul(sum_(a, axis=axis, keepdims=keepdims), Tensor(1.0 / n))


def expand(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Broadcast to `shape` (copying); adjoint of sum over broadcast axes."""

    def vjp(g):
        return (_unbroadcast(g, a.shape),)

    return _make(np.broadcast_to(a.data, shape).copy(), (a,), vjp)


def reshape(a: Tensor, shape) -> Tensor:
    in_shape = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (reshape(g, in_shape),))


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inv = tuple(int(i) for i in np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (transpose(g, inv),))


def amax(a: Tensor, axis: int) -> Tensor:
    """Max over one axis; ties give the gradient to the first maximum."""
    idx = np.argmax(a.data, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(idx, axis), axis=axis)
    mask = np.zeros_like(a.data)
    np.put_along_axis(mask, np.expand_dims(idx, axis), 1.0, axis=axis)
    kept_shape = out.shape

    def vjp(g):
        return (mul(expand(reshape(g, kept_shape), a.shape), Tensor(mask)),)

    return _make(np.squeeze(out, axis=axis), (a,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")

    def vjp(g):
        return matmul(g, transpose(b, (1, 0))), matmul(transpose(a, (1, 0)), g)

    return _make(a.data @ b.data, (a, b), vjp)


# ---------------------------------------------------------------------------
# structured ops along the length axis (axis 1 of [n, L, c] tensors)


def pad_len(a: Tensor, left: int, right: int) -> Tensor:
    n, L, c = a.shape
    out = np.zeros((n, L + left + right, c), dtype=DTYPE)
    out[:, left : left + L] = a.data
    return _make(out, (a,), lambda g: (crop_len(g, left, left + L),))


def crop_len(a: Tensor, start: int, stop: int) -> Tensor:
    n, L, c = a.shape

    def vjp(g):
        return (pad_len(g, start, L - stop),)

    return _make(a.data[:, start:stop].copy(), (a,), vjp)


def unfold1d(a: Tensor, k: int, stride: int, pl: int, pr: int) -> Tensor:
    """[n, L, c] -> [n, Lout, k, c] patches of a zero-padded signal."""
    n, L, c = a.shape
    Lp = L + pl + pr
    Lout = (Lp - k) // stride + 1
    xp = np.zeros((n, Lp, c), dtype=DTYPE)
    xp[:, pl : pl + L] = a.data
    out = np.empty((n, Lout, k, c), dtype=DTYPE)
    span = stride * (Lout - 1) + 1
    for j in range(k):
        out[:, :, j, :] = xp[:, j : j + span : stride, :]

    def vjp(g):
        return (fold1d(g, L, stride, pl, pr),)

    return _make(out, (a,), vjp)


def fold1d(p: Tensor, out_len: int, stride: int, pl: int, pr: int) -> Tensor:
    """Adjoint of unfold1d: scatter-add [n, Lf, k, c] patches back to [n, out_len, c]."""
    n, Lf, k, c = p.shape
    acc = np.zeros((n, out_len + pl + pr, c), dtype=DTYPE)
    span = stride * (Lf - 1) + 1
    for j in range(k):
        acc[:, j : j + span : stride, :] += p.data[:, :, j, :]

    def vjp(g):
        return (unfold1d(g, k, stride, pl, pr),)

    return _make(acc[:, pl : pl + out_len].copy(), (p,), vjp)


def take_len(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather along axis 1 with per-(sample, channel) indices [n, L', c]."""
    n, L, c = a.shape

    def vjp(g):
        return (scatter_len(g, idx, L),)

    return _make(np.take_along_axis(a.data, idx, axis=1), (a,), vjp)


def scatter_len(g: Tensor, idx: np.ndarray, out_len: int) -> Tensor:
    n, Lp, c = g.shape
    acc = np.zeros((n, out_len, c), dtype=DTYPE)
    bi = np.arange(n)[:, None, None]
    ci = np.arange(c)[None, None, :]
    np.add.at(acc, (bi, idx, ci), g.data)

    def vjp(gg):
        return (take_len(gg, idx),)

    return _make(acc, (g,), vjp)


# ---------------------------------------------------------------------------
# structured ops over two spatial axes (axes 1, 2 of [n, H, W, c] tensors)


def unfold2d(a: Tensor, kh: int, kw: int, stride: int, pads: tuple[int, int, int, int]) -> Tensor:
    """[n, H, W, c] -> [n, Ho, Wo, kh, kw, c] patches of a zero-padded map."""
    pt, pb, pl, pr = pads
    n, H, W, c = a.shape
    Hp, Wp = H + pt + pb, W + pl + pr
    Ho = (Hp - kh) // stride + 1
    Wo = (Wp - kw) // stride + 1
    xp = np.zeros((n, Hp, Wp, c), dtype=DTYPE)
    xp[:, pt : pt + H, pl : pl + W] = a.data
    out = np.empty((n, Ho, Wo, kh, kw, c), dtype=DTYPE)
    hspan = stride * (Ho - 1) + 1
    wspan = stride * (Wo - 1) + 1
    for i in range(kh):
        for j in range(kw):
            out[:, :, :, i, j, :] = xp[:, i : i + hspan : stride, j : j + wspan : stride, :]

    def vjp(g):
        return (fold2d(g, (H, W), stride, pads),)

    return _make(out, (a,), vjp)


def fold2d(p: Tensor, out_hw: tuple[int, int], stride: int, pads: tuple[int, int, int, int]) -> Tensor:
    pt, pb, pl, pr = pads
    H, W = out_hw
    n, Ho, Wo, kh, kw, c = p.shape
    acc = np.zeros((n, H + pt + pb, W + pl + pr, c), dtype=DTYPE)
    hspan = stride * (Ho - 1) + 1
    wspan = stride * (Wo - 1) + 1
    for i in range(kh):
        for j in range(kw):
            acc[:, i : i + hspan : stride, j : j + wspan : stride, :] += p.data[:, :, :, i, j, :]

    def vjp(g):
        return (unfold2d(g, kh, kw, stride, pads),)

    return _make(acc[:, pt : pt + H, pl : pl + W].copy(), (p,), vjp)


# ---------------------------------------------------------------------------
# graph traversal


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p._vjp is not None:
                stack.append((p, False))
    return order


def grad(
    output: Tensor,
    wrt: Iterable[Tensor],
    cotangent: Tensor | None = None,
    create_graph: bool = False,
) -> list[Tensor]:
    """Gradients of `output` with respect to each tensor in `wrt`.

    With create_graph=True the returned gradients are themselves graph
    nodes and can be differentiated again.
    """
    wrt = list(wrt)
    wrt_ids = {id(t) for t in wrt}
    if output._vjp is None and not output.requires_grad:
        raise GraphError("output is not part of a recorded computation")
    if cotangent is None:
        cotangent = Tensor(np.ones_like(output.data))
    cotangents: dict[int, Tensor] = {id(output): cotangent}

    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = create_graph
    try:
        for node in reversed(_topo_order(output)):
            if node._vjp is None:
                continue
            g = cotangents.pop(id(node), None)
            if g is None:
                continue
            parent_grads = node._vjp(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                prev_g = cotangents.get(id(p))
                cotangents[id(p)] = pg if prev_g is None else add(prev_g, pg)
            if id(node) in wrt_ids:
                cotangents[id(node)] = g
    finally:
        _grad_enabled = prev

    out: list[Tensor] = []
    for t in wrt:
        g = cotangents.get(id(t))
        if g is None:
            g = Tensor(np.zeros_like(t.data))
        out.append(g)
    return out


def backward(loss: Tensor) -> None:
    """Populate `.grad` (as numpy arrays) on every reachable tensor."""
    if loss.data.size != 1:
        raise ValueError("backward expects a scalar loss")
    if loss._vjp is None:
        raise GraphError("loss is not part of a recorded computation")
    cotangents: dict[int, Tensor] = {id(loss): Tensor(np.ones_like(loss.data))}
    leaves: dict[int, Tensor] = {}
    with no_grad():
        for node in reversed(_topo_order(loss)):
            g = cotangents.pop(id(node), None)
            if g is None:
                continue
            node.grad = g.data.copy() if node.grad is None else node.grad + g.data
            parent_grads = node._vjp(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                if p._vjp is None:
                    leaves[id(p)] = p
                prev_g = cotangents.get(id(p))
                cotangents[id(p)] = pg if prev_g is None else add(prev_g, pg)
    for tid, p in leaves.items():
        g = cotangents.get(tid)
        if g is not None:
            p.grad = g.data.copy() if p.grad is None else p.grad + g.data
