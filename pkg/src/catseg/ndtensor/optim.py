"""Adam with bias correction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor


@dataclass
class AdamState:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    # per-parameter update counts; parameters without a gradient are skipped
    param_steps: dict[str, int] = field(default_factory=dict)


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray | None],
    state: AdamState,
) -> tuple[dict[str, Tensor], AdamState]:
    """Return updated parameters; ``state`` is advanced in place and returned.

    Parameters that do not require gradients, or whose gradient is missing,
    pass through as the same object.
    """
    state.step += 1
    out: dict[str, Tensor] = {}
    b1, b2, lr, eps = state.beta1, state.beta2, state.learning_rate, state.epsilon
    for name, p in params.items():
        g = grads.get(name)
        if not p.requires_grad or g is None:
            out[name] = p
            continue
        g = np.asarray(g)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros(p.shape, dtype=np.float64)
            state.v[name] = np.zeros(p.shape, dtype=np.float64)
        t = state.param_steps.get(name, 0) + 1
        state.param_steps[name] = t
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        out[name] = Tensor(new.astype(p.dtype), requires_grad=True)
    return out, state
