"""Central finite-difference gradient checking (64-bit only).

``f`` must be a zero-argument callable returning a python float and reading
the checked arrays by reference; the checker perturbs the arrays in place.
"""

from __future__ import annotations

import numpy as np


def numerical_gradient(f, arrays, h: float = 1e-5) -> list[np.ndarray]:
    grads = []
    for a in arrays:
        if a.dtype != np.float64:
            raise ValueError("finite differences need float64 arrays")
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-ratio error ||a - n|| / max(||a||, ||n||); 0 when both vanish."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(build_loss, arrays, h: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    ``build_loss`` maps the raw arrays to (loss_tensor, [param_tensors]);
    it is re-invoked for every finite-difference probe so each evaluation
    records a fresh trace.
    """
    from .tensor import gradients

    loss, params = build_loss()
    analytic = gradients(loss, params)

    def f():
        out, _ = build_loss()
        return out.item()

    numeric = numerical_gradient(f, arrays, h=h)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))
