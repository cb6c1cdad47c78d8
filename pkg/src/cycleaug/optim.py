"""Adam with bias correction.

``adam_step`` is the single-parameter update rule; ``Adam`` drives it over a
named parameter dict and owns the per-parameter state so training loops and
checkpoints can treat optimizer state as plain arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_state(param: np.ndarray, beta1=0.9, beta2=0.999, epsilon=1e-8) -> AdamState:
    return AdamState(
        first_moment=np.zeros_like(param),
        second_moment=np.zeros_like(param),
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float) -> np.ndarray:
    """One Adam update; mutates ``state`` and returns the new parameter array."""
    if grad.shape != param.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    state.first_moment = b1 * state.first_moment + (1.0 - b1) * grad
    state.second_moment = b2 * state.second_moment + (1.0 - b2) * (grad * grad)
    m_hat = state.first_moment / (1.0 - b1**t)
    v_hat = state.second_moment / (1.0 - b2**t)
    return param - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


class Adam:
    """Adam over a dict of named parameter tensors."""

    def __init__(self, params: dict[str, Tensor], lr: float, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = params
        self.lr = lr
        self.states = {name: init_state(p.data, beta1, beta2, epsilon) for name, p in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            p.data = adam_step(p.data, grads[name], self.states[name], self.lr)

    # checkpoint plumbing: state as flat arrays + counters
    def export_state(self):
        arrays, counts = {}, {}
        for name, st in self.states.items():
            arrays[f"m/{name}"] = st.first_moment
            arrays[f"v/{name}"] = st.second_moment
            counts[name] = st.step_count
        return arrays, counts

    def import_state(self, arrays, counts) -> None:
        for name, st in self.states.items():
            st.first_moment = arrays[f"m/{name}"].astype(st.first_moment.dtype)
            st.second_moment = arrays[f"v/{name}"].astype(st.second_moment.dtype)
            st.step_count = int(counts[name])
