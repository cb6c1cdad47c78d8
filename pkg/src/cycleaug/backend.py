"""Convolution kernels: numba-jitted loops with a pure-numpy fallback.

The 2-D convolution (forward, input gradient, kernel gradient) dominates the
runtime of every training command, so these three kernels exist twice: as
``@njit`` nested loops and as vectorized numpy (``sliding_window_view`` +
``tensordot`` / strided scatter-adds). Which pair is active is decided once
at import time from the ``CYCLEAUG_BACKEND`` environment variable:

    CYCLEAUG_BACKEND=numba   force numba (error if numba is unavailable)
    CYCLEAUG_BACKEND=numpy   force the pure-numpy path
    unset                    numba when importable, numpy otherwise

``set_backend`` flips the active pair at runtime (used by the benchmark and
by the cross-backend equivalence tests). Both implementations use a fixed
reduction order per output element, so each backend is bit-deterministic;
results *across* backends agree only to rounding.

All kernels take the already-padded input; padding lives with the caller.
Shapes follow the NCHW / OIHW convention.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "CYCLEAUG_BACKEND"


# ---------------------------------------------------------------------------
# pure numpy
# ---------------------------------------------------------------------------

def _windows(x, kh, kw, stride):
    # (N, C, OH, OW, kh, kw) view; no copy
    w = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    return w[:, :, ::stride, ::stride]


def conv2d_forward_numpy(x, kernel, stride):
    o, c, kh, kw = kernel.shape
    win = _windows(x, kh, kw, stride)
    # (N, OH, OW, O) <- sum over C, kh, kw
    y = np.tensordot(win, kernel, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(np.transpose(y, (0, 3, 1, 2)))


def conv2d_grad_kernel_numpy(x, grad, stride, kh, kw):
    n, o, oh, ow = grad.shape
    win = _windows(x, kh, kw, stride)[:, :, :oh, :ow]
    # dW[o,c,u,v] = sum_{n,i,j} grad[n,o,i,j] * win[n,c,i,j,u,v]
    dw = np.tensordot(grad, win, axes=([0, 2, 3], [0, 2, 3]))
    return np.ascontiguousarray(dw)


def conv2d_grad_input_numpy(grad, kernel, stride, height, width):
    n, o, oh, ow = grad.shape
    _, c, kh, kw = kernel.shape
    # dcol[n, i, j, c, u, v] = sum_o grad[n,o,i,j] * kernel[o,c,u,v]
    dcol = np.tensordot(grad, kernel, axes=([1], [0]))
    dx = np.zeros((n, c, height, width), dtype=grad.dtype)
    for u in range(kh):
        for v in range(kw):
            dx[:, :, u : u + oh * stride : stride, v : v + ow * stride : stride] += (
                np.transpose(dcol[:, :, :, :, u, v], (0, 3, 1, 2))
            )
    return dx


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True)
    def conv2d_forward_numba(x, kernel, stride):
        n, c, h, w = x.shape
        o, _, kh, kw = kernel.shape
        oh = (h - kh) // stride + 1
        ow = (w - kw) // stride + 1
        y = np.zeros((n, o, oh, ow), dtype=x.dtype)
        for ni in range(n):
            for oi in range(o):
                for yi in range(oh):
                    for xi in range(ow):
                        acc = y[ni, oi, yi, xi]
                        for ci in range(c):
                            for ky in range(kh):
                                row = yi * stride + ky
                                col = xi * stride
                                for kx in range(kw):
                                    acc += x[ni, ci, row, col + kx] * kernel[oi, ci, ky, kx]
                        y[ni, oi, yi, xi] = acc
        return y

    @njit(cache=True)
    def conv2d_grad_kernel_numba(x, grad, stride, kh, kw):
        n, o, oh, ow = grad.shape
        c = x.shape[1]
        dw = np.zeros((o, c, kh, kw), dtype=x.dtype)
        for ni in range(n):
            for oi in range(o):
                for yi in range(oh):
                    for xi in range(ow):
                        g = grad[ni, oi, yi, xi]
                        for ci in range(c):
                            for ky in range(kh):
                                row = yi * stride + ky
                                col = xi * stride
                                for kx in range(kw):
                                    dw[oi, ci, ky, kx] += g * x[ni, ci, row, col + kx]
        return dw

    @njit(cache=True)
    def conv2d_grad_input_numba(grad, kernel, stride, height, width):
        n, o, oh, ow = grad.shape
        _, c, kh, kw = kernel.shape
        dx = np.zeros((n, c, height, width), dtype=grad.dtype)
        for ni in range(n):
            for oi in range(o):
                for yi in range(oh):
                    for xi in range(ow):
                        g = grad[ni, oi, yi, xi]
                        for ci in range(c):
                            for ky in range(kh):
                                row = yi * stride + ky
                                col = xi * stride
                                for kx in range(kw):
                                    dx[ni, ci, row, col + kx] += g * kernel[oi, ci, ky, kx]
        return dx


_IMPLEMENTATIONS = {
    "numpy": (conv2d_forward_numpy, conv2d_grad_kernel_numpy, conv2d_grad_input_numpy),
}
if HAVE_NUMBA:
    _IMPLEMENTATIONS["numba"] = (
        conv2d_forward_numba,
        conv2d_grad_kernel_numba,
        conv2d_grad_input_numba,
    )

_active = "numpy"
conv2d_forward = conv2d_forward_numpy
conv2d_grad_kernel = conv2d_grad_kernel_numpy
conv2d_grad_input = conv2d_grad_input_numpy


def set_backend(name: str) -> None:
    """Select the active kernel implementation ("numba" or "numpy")."""
    global _active, conv2d_forward, conv2d_grad_kernel, conv2d_grad_input
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    conv2d_forward, conv2d_grad_kernel, conv2d_grad_input = _IMPLEMENTATIONS[name]
    _active = name


def active_backend() -> str:
    return _active


def _initial_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice in ("numba", "numpy"):
        return choice
    if choice:
        raise RuntimeError(f"{_ENV_VAR}={choice!r} not understood; use 'numba' or 'numpy'")
    return "numba" if HAVE_NUMBA else "numpy"


set_backend(_initial_backend())
