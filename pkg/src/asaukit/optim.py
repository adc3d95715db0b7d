"""Adam with decoupled weight decay over a flat ParamStore."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import ParamStore


@dataclass
class AdamState:
    """Per-parameter moments plus the shared hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def adam_init(store: ParamStore, lr: float, weight_decay: float = 0.0,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    n = len(store)
    return AdamState(m=np.zeros(n), v=np.zeros(n), lr=lr, beta1=beta1,
                     beta2=beta2, eps=eps, weight_decay=weight_decay)


def adam_step(store: ParamStore, state: AdamState) -> None:
    """One bias-corrected update from store.grads, in place.

    Weight decay is decoupled: values shrink by lr * wd * value before the
    Adam step, so zero gradients still give pure shrinkage.
    """
    g = store.grads
    if state.m.shape != store.values.shape:
        raise ValueError(
            f"optimizer state for {state.m.size} parameters, store has {store.values.size}")
    if state.weight_decay:
        store.values -= state.lr * state.weight_decay * store.values
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    store.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
