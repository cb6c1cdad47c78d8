"""Dense float tensors with reverse-mode automatic differentiation.

The engine is define-by-run: every differentiable operation records its
parent tensors and a closure that scatters the upstream gradient back to
them, so the recorded trace *is* the computation graph. ``Tensor.backward``
clears gradients along the reachable trace, seeds the scalar output with 1
and walks the trace once in reverse topological order.

Values are plain numpy arrays: float32 by default (training), float64 when
the caller passes float64 data (gradient checking; central differences are
unreliable in 32-bit). Arrays are treated as immutable once wrapped; nothing
in this module writes to ``Tensor.data`` in place.

Any operation that would produce NaN/Inf raises ``NonFiniteError`` instead
of letting the value propagate.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from . import backend


class NonFiniteError(FloatingPointError):
    """A tensor operation produced (or was handed) NaN or Inf."""


_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backprop")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        if not np.isfinite(arr).all():
            raise NonFiniteError("tensor holds non-finite values")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backprop = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        """A view of the same values cut off from the recorded trace."""
        return Tensor(self.data)

    # -- operator sugar --------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_coerce(other, self)))

    def __rsub__(self, other):
        return add(_coerce(other, self), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def sum(self):
        return tsum(self)

    def mean(self):
        return tmean(self)

    # -- autodiff --------------------------------------------------------------

    def backward(self) -> None:
        """Reverse-mode sweep from this scalar output.

        Gradients accumulate into ``.grad`` of every reachable tensor with
        ``requires_grad``; each trace node's adjoint runs exactly once.
        """
        if self.data.size != 1:
            raise ValueError(f"backward expects a scalar output, got shape {self.data.shape}")
        if not self.requires_grad:
            return
        order = _toposort(self)
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backprop is not None:
                node._backprop(node.grad)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def gradients(loss: Tensor, params) -> list[np.ndarray]:
    """Gradient of a scalar loss for each parameter, zeros where no path exists."""
    params = list(params)
    for p in params:
        p.grad = None
    loss.backward()
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def tensor(data, requires_grad: bool = False, dtype=None) -> Tensor:
    arr = np.asarray(data, dtype=dtype)
    return Tensor(arr, requires_grad=requires_grad)


def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)


def _coerce(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.data.dtype))


def _from_op(data: np.ndarray, parents: tuple, backprop) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backprop = backprop
    return out


def _acc(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    t.grad = g if t.grad is None else t.grad + g


def _reduce_to(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a: Tensor, b) -> Tensor:
    b = _coerce(b, a)

    def backprop(g):
        _acc(a, _reduce_to(g, a.data.shape))
        _acc(b, _reduce_to(g, b.data.shape))

    return _from_op(a.data + b.data, (a, b), backprop)


def mul(a: Tensor, b) -> Tensor:
    b = _coerce(b, a)

    def backprop(g):
        _acc(a, _reduce_to(g * b.data, a.data.shape))
        _acc(b, _reduce_to(g * a.data, b.data.shape))

    return _from_op(a.data * b.data, (a, b), backprop)


def neg(a: Tensor) -> Tensor:
    def backprop(g):
        _acc(a, -g)

    return _from_op(-a.data, (a,), backprop)


def square(a: Tensor) -> Tensor:
    def backprop(g):
        _acc(a, g * (2.0 * a.data))

    return _from_op(a.data * a.data, (a,), backprop)


def tabs(a: Tensor) -> Tensor:
    def backprop(g):
        _acc(a, g * np.sign(a.data))

    return _from_op(np.abs(a.data), (a,), backprop)


def tsum(a: Tensor) -> Tensor:
    def backprop(g):
        _acc(a, np.broadcast_to(g, a.data.shape))

    return _from_op(np.asarray(a.data.sum(), dtype=a.data.dtype), (a,), backprop)


def tmean(a: Tensor) -> Tensor:
    n = a.data.size

    def backprop(g):
        _acc(a, np.broadcast_to(g / n, a.data.shape))

    return _from_op(np.asarray(a.data.mean(), dtype=a.data.dtype), (a,), backprop)


def spatial_mean(a: Tensor) -> Tensor:
    """Mean over the H and W axes of an NCHW tensor (global average pool)."""
    n = a.data.shape[2] * a.data.shape[3]

    def backprop(g):
        _acc(a, np.broadcast_to(g[:, :, None, None] / n, a.data.shape))

    return _from_op(a.data.mean(axis=(2, 3)), (a,), backprop)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")

    def backprop(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return _from_op(a.data @ b.data, (a, b), backprop)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def backprop(g):
        _acc(a, g.reshape(old))

    return _from_op(a.data.reshape(shape), (a,), backprop)


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

def relu(a: Tensor) -> Tensor:
    def backprop(g):
        _acc(a, g * (a.data > 0))

    return _from_op(np.maximum(a.data, 0), (a,), backprop)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    # max(slope*x, x) for slope < 1
    def backprop(g):
        _acc(a, g * np.where(a.data >= 0, 1.0, slope).astype(a.data.dtype))

    return _from_op(np.maximum(a.data * slope, a.data), (a,), backprop)


def sigmoid(a: Tensor) -> Tensor:
    y = expit(a.data).astype(a.data.dtype)

    def backprop(g):
        _acc(a, g * (y * (1.0 - y)))

    return _from_op(y, (a,), backprop)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backprop(g):
        _acc(a, g * (1.0 - y * y))

    return _from_op(y, (a,), backprop)


def softplus(a: Tensor) -> Tensor:
    """log(1 + e^x), evaluated without overflow."""

    def backprop(g):
        _acc(a, g * expit(a.data).astype(a.data.dtype))

    return _from_op(np.logaddexp(0.0, a.data).astype(a.data.dtype), (a,), backprop)


# ---------------------------------------------------------------------------
# shape / channel plumbing
# ---------------------------------------------------------------------------

def concat_channels(tensors) -> Tensor:
    tensors = list(tensors)
    sizes = [t.data.shape[1] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backprop(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            _acc(t, g[:, lo:hi])

    return _from_op(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), backprop)


def channels(a: Tensor, lo: int, hi: int) -> Tensor:
    """Slice channels [lo, hi) of an NCHW tensor."""

    def backprop(g):
        full = np.zeros_like(a.data)
        full[:, lo:hi] = g
        _acc(a, full)

    return _from_op(np.ascontiguousarray(a.data[:, lo:hi]), (a,), backprop)


# ---------------------------------------------------------------------------
# padding
# ---------------------------------------------------------------------------

_PAD_MODES = {"zero": "constant", "reflect": "reflect", "wrap": "wrap"}


def _pad_source_index(shape, p, mode):
    """Flat source index of every padded cell, for the adjoint scatter-add."""
    h, w = shape[2], shape[3]
    idx = np.arange(h * w).reshape(h, w)
    return np.pad(idx, p, mode=_PAD_MODES[mode]) if mode != "zero" else None


def pad2d(a: Tensor, p: int, mode: str = "zero") -> Tensor:
    if mode not in _PAD_MODES:
        raise ValueError(f"unknown padding mode {mode!r}")
    if p == 0:
        return a
    h, w = a.data.shape[2], a.data.shape[3]
    if mode != "zero" and p >= min(h, w):
        raise ValueError(f"padding {p} too large for spatial dims {h}x{w}")
    data = np.pad(a.data, ((0, 0), (0, 0), (p, p), (p, p)), mode=_PAD_MODES[mode])

    if mode == "zero":

        def backprop(g):
            _acc(a, g[:, :, p : p + h, p : p + w])

    else:
        src = _pad_source_index(a.data.shape, p, mode).ravel()

        def backprop(g):
            n, c = g.shape[0], g.shape[1]
            flat = np.zeros((n, c, h * w), dtype=g.dtype)
            np.add.at(flat, (slice(None), slice(None), src), g.reshape(n, c, -1))
            _acc(a, flat.reshape(a.data.shape))

    return _from_op(data, (a,), backprop)


def reflection_pad(a: Tensor, p: int) -> Tensor:
    """Mirror-pad H and W by ``p``; the border reflects the interior,
    excluding the edge pixel itself."""
    if p < 0:
        raise ValueError("padding must be non-negative")
    return pad2d(a, p, mode="reflect")


# ---------------------------------------------------------------------------
# spatial ops
# ---------------------------------------------------------------------------

def nearest_upsample(a: Tensor, factor: int) -> Tensor:
    """Replicate each pixel into a factor x factor block.

    The adjoint sums each block, i.e. the exact transpose of replication.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"upsample factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return a
    n, c, h, w = a.data.shape

    def backprop(g):
        _acc(a, g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)))

    data = a.data.repeat(factor, axis=2).repeat(factor, axis=3)
    return _from_op(data, (a,), backprop)


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, pad: int = 0, pad_mode: str = "zero") -> Tensor:
    """2-D convolution (cross-correlation), NCHW input against an OIHW kernel.

    Output spatial dims are floor((H + 2*pad - kH)/stride) + 1. ``pad_mode``
    is one of "zero", "reflect", "wrap"; pad=0 means no padding.
    """
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ValueError("conv2d expects NCHW input and OIHW kernel")
    if x.data.shape[1] != kernel.data.shape[1]:
        raise ValueError(
            f"channel mismatch: input has {x.data.shape[1]} channels, "
            f"kernel expects {kernel.data.shape[1]}"
        )
    if stride < 1:
        raise ValueError("stride must be >= 1")
    kh, kw = kernel.data.shape[2], kernel.data.shape[3]
    xp = pad2d(x, pad, pad_mode) if pad else x
    hp, wp = xp.data.shape[2], xp.data.shape[3]
    if kh > hp or kw > wp:
        raise ValueError(f"kernel {kh}x{kw} does not fit padded input {hp}x{wp}")

    xdata = xp.data
    y = backend.conv2d_forward(xdata, kernel.data, stride)

    def backprop(g):
        g = np.ascontiguousarray(g)
        if kernel.requires_grad:
            _acc(kernel, backend.conv2d_grad_kernel(xdata, g, stride, kh, kw))
        if xp.requires_grad:
            _acc(xp, backend.conv2d_grad_input(g, kernel.data, stride, hp, wp))

    out = _from_op(y, (xp, kernel), backprop)
    return out


def conv_transpose2d(x: Tensor, kernel: Tensor, stride: int = 2, pad: int = 1) -> Tensor:
    """Transposed convolution: the exact adjoint of ``conv2d`` with zero padding.

    The kernel is OIHW with O matching the *input* channels of this op;
    output spatial dims are (H-1)*stride - 2*pad + kH.
    """
    if x.data.shape[1] != kernel.data.shape[0]:
        raise ValueError(
            f"channel mismatch: input has {x.data.shape[1]} channels, "
            f"transposed kernel expects {kernel.data.shape[0]}"
        )
    kh, kw = kernel.data.shape[2], kernel.data.shape[3]
    n, _, h, w = x.data.shape
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (w - 1) * stride - 2 * pad + kw
    if oh < 1 or ow < 1:
        raise ValueError("transposed convolution output would be empty")

    xdata = np.ascontiguousarray(x.data)
    ypad = backend.conv2d_grad_input(xdata, kernel.data, stride, oh + 2 * pad, ow + 2 * pad)
    y = np.ascontiguousarray(ypad[:, :, pad : pad + oh, pad : pad + ow])

    def backprop(g):
        gpad = np.pad(g, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        if x.requires_grad:
            _acc(x, backend.conv2d_forward(gpad, kernel.data, stride))
        if kernel.requires_grad:
            _acc(kernel, backend.conv2d_grad_kernel(gpad, xdata, stride, kh, kw))

    return _from_op(y, (x, kernel), backprop)


def instance_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-sample, per-channel standardization over H, W, then affine.

    eps=1e-5 stabilizes constant channels (zero variance).
    """
    if x.data.ndim != 4 or x.data.shape[2] * x.data.shape[3] < 1:
        raise ValueError("instance_norm expects NCHW input with spatial extent")
    mu = x.data.mean(axis=(2, 3), keepdims=True)
    var = x.data.var(axis=(2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    gb = gamma.data.reshape(1, -1, 1, 1)
    y = gb * xhat + beta.data.reshape(1, -1, 1, 1)

    def backprop(g):
        _acc(gamma, (g * xhat).sum(axis=(0, 2, 3)))
        _acc(beta, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dhat = g * gb
            term = dhat - dhat.mean(axis=(2, 3), keepdims=True) \
                - xhat * (dhat * xhat).mean(axis=(2, 3), keepdims=True)
            _acc(x, inv * term)

    return _from_op(y, (x, gamma, beta), backprop)
