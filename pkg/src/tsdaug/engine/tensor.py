"""Reverse-mode automatic differentiation over numpy arrays.

Each operation records its parents and a backward closure on the output
tensor; :func:`backward` topologically sorts the recorded graph from a scalar
loss and accumulates gradients into every tensor that requires them.  Arrays
are float32 in training mode and float64 in verification mode; the dtype
follows the inputs.

With :func:`set_verification` enabled, every operation asserts its output is
finite, which is how gradient-check and oracle tests run.
"""

from __future__ import annotations

import numpy as np

from tsdaug.errors import NumericalError

_VERIFY = False


def set_verification(on: bool) -> None:
    global _VERIFY
    _VERIFY = bool(on)


def verification_enabled() -> bool:
    return _VERIFY


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _out(data: np.ndarray, parents: tuple, backward) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    if _VERIFY and not np.all(np.isfinite(data)):
        raise NumericalError("non-finite values produced by an operation")
    return Tensor(data, requires_grad=requires, _parents=parents if requires else (),
                  _backward=backward if requires else None)


def backward(loss: Tensor) -> None:
    """Backpropagate from a scalar loss through the recorded graph."""
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not loss._parents:
        raise ValueError("backward called without a recorded forward graph")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:  # iterative DFS: graphs can be deep
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    loss.ensure_grad()
    loss.grad.fill(1.0)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# elementwise and structural ops


def add(x: Tensor, y: Tensor) -> Tensor:
    if x.data.shape != y.data.shape:
        raise ValueError(f"add: shape mismatch {x.data.shape} vs {y.data.shape}")

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += g
        if y.requires_grad:
            y.ensure_grad()
            y.grad += g

    return _out(x.data + y.data, (x, y), _bw)


def scale(x: Tensor, c: float) -> Tensor:
    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += c * g

    return _out(c * x.data, (x,), _bw)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += (1.0 - y * y) * g

    return _out(y, (x,), _bw)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += mask * g

    return _out(np.maximum(x.data, 0), (x,), _bw)


def flatten(x: Tensor) -> Tensor:
    b = x.data.shape[0]

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += g.reshape(x.data.shape)

    return _out(x.data.reshape(b, -1), (x,), _bw)


def concat_channels(x: Tensor, y: Tensor) -> Tensor:
    if x.data.ndim != 3 or y.data.ndim != 3:
        raise ValueError("concat_channels expects (batch, channels, length) inputs")
    if x.data.shape[0] != y.data.shape[0] or x.data.shape[2] != y.data.shape[2]:
        raise ValueError(f"concat_channels: incompatible shapes {x.data.shape} vs {y.data.shape}")
    cx = x.data.shape[1]

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += g[:, :cx]
        if y.requires_grad:
            y.ensure_grad()
            y.grad += g[:, cx:]

    return _out(np.concatenate([x.data, y.data], axis=1), (x, y), _bw)


def broadcast_length(v: Tensor, length: int) -> Tensor:
    """(batch, channels) -> (batch, channels, length), repeated along length."""
    if v.data.ndim != 2:
        raise ValueError(f"broadcast_length expects a (batch, channels) input, got {v.data.shape}")

    def _bw(g):
        if v.requires_grad:
            v.ensure_grad()
            v.grad += g.sum(axis=2)

    data = np.ascontiguousarray(np.broadcast_to(v.data[:, :, None], v.data.shape + (length,)))
    return _out(data, (v,), _bw)


def maxpool1d(x: Tensor, width: int = 2) -> Tensor:
    b, c, l = x.data.shape
    if l % width != 0:
        raise ValueError(f"maxpool1d: length {l} not divisible by pool width {width}")
    windows = x.data.reshape(b, c, l // width, width)
    idx = windows.argmax(axis=3)

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            dwin = np.zeros_like(windows)
            np.put_along_axis(dwin, idx[..., None], g[..., None], axis=3)
            x.grad += dwin.reshape(b, c, l)

    return _out(np.take_along_axis(windows, idx[..., None], axis=3)[..., 0], (x,), _bw)


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    b, c, l = x.data.shape

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += g.reshape(b, c, l, factor).sum(axis=3)

    return _out(np.repeat(x.data, factor, axis=2), (x,), _bw)


# ---------------------------------------------------------------------------
# parametric layers


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    if x.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ValueError(f"dense: input {x.data.shape} incompatible with weight {w.data.shape}")

    def _bw(g):
        if x.requires_grad:
            x.ensure_grad()
            x.grad += g @ w.data.T
        if w.requires_grad:
            w.ensure_grad()
            w.grad += x.data.T @ g
        if b.requires_grad:
            b.ensure_grad()
            b.grad += g.sum(axis=0)

    return _out(x.data @ w.data + b.data, (x, w, b), _bw)


def _conv_padding(l_in: int, k: int, stride: int, padding: str) -> tuple[int, int]:
    if padding == "same":
        if k % 2 == 0:
            raise ValueError(f"same-padding needs an odd kernel size, got {k}")
        l_out = -(-l_in // stride)  # ceil
        total = max((l_out - 1) * stride + k - l_in, 0)
        return total // 2, total - total // 2
    if padding == "valid":
        if l_in < k:
            raise ValueError(f"valid conv: input length {l_in} < kernel {k}")
        return 0, 0
    raise ValueError(f"unknown padding mode {padding!r}")


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, padding: str = "same") -> Tensor:
    """Cross-correlation of (B, C_in, L) with weights (C_out, C_in, K)."""
    from tsdaug.engine import kernels

    if x.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError("conv1d expects x (B, C, L) and w (C_out, C_in, K)")
    if x.data.shape[1] != w.data.shape[1]:
        raise ValueError(
            f"conv1d: input channels {x.data.shape[1]} != weight channels {w.data.shape[1]}"
        )
    l_in = x.data.shape[2]
    k = w.data.shape[2]
    pad_l, pad_r = _conv_padding(l_in, k, stride, padding)

    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    y = kernels.conv1d_forward(xd, wd, stride, pad_l, pad_r)
    y += b.data[None, :, None]

    def _bw(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.ensure_grad()
            x.grad += kernels.conv1d_backward_x(g, wd, stride, pad_l, pad_r, l_in)
        if w.requires_grad:
            w.ensure_grad()
            w.grad += kernels.conv1d_backward_w(g, xd, k, stride, pad_l, pad_r)
        if b.requires_grad:
            b.ensure_grad()
            b.grad += g.sum(axis=(0, 2))

    return _out(y, (x, w, b), _bw)


# ---------------------------------------------------------------------------
# losses


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    target = np.asarray(target, dtype=pred.data.dtype)
    if target.shape != pred.data.shape:
        raise ValueError(f"mse: prediction {pred.data.shape} vs target {target.shape}")
    diff = pred.data - target
    n = diff.size

    def _bw(g):
        if pred.requires_grad:
            pred.ensure_grad()
            pred.grad += (2.0 / n) * diff * g

    return _out(np.asarray(np.mean(diff * diff)), (pred,), _bw)


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of raw logits (inference helper, no gradient)."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_ce(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross-entropy of (B, C) logits against integer labels (B,)."""
    labels = np.asarray(labels)
    bsz, n_classes = logits.data.shape
    if labels.shape != (bsz,):
        raise ValueError(f"softmax_ce: labels shape {labels.shape} != ({bsz},)")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("softmax_ce: label outside [0, n_classes)")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    loss = -logp[np.arange(bsz), labels].mean()

    def _bw(g):
        if logits.requires_grad:
            logits.ensure_grad()
            d = np.exp(logp)
            d[np.arange(bsz), labels] -= 1.0
            logits.grad += (g / bsz) * d

    return _out(np.asarray(loss, dtype=logits.data.dtype), (logits,), _bw)
