"""Training objectives with exact gradients.

Each loss returns (scalar, gradient Tensor w.r.t. its first argument); the
gradients are plain calculus, verified against finite differences in tests.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

PROB_CLAMP = 1e-7


def softmax_ce_loss(logits: Tensor, labels: list[int]) -> tuple[float, Tensor]:
    """Mean negative log-likelihood over rows, stable log-sum-exp."""
    z = logits.array()
    if z.ndim != 2:
        raise ValueError(f"logits must be N x K, got shape {logits.shape}")
    n, k = z.shape
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    lse = np.log(ez.sum(axis=1)) + zmax[:, 0]
    loss = float(np.mean(lse - z[np.arange(n), labels]))
    grad = ez / ez.sum(axis=1, keepdims=True)
    grad[np.arange(n), labels] -= 1.0
    return loss, Tensor.from_array(grad / n)


def _clamped(probs: Tensor) -> tuple[np.ndarray, np.ndarray]:
    p = probs.array()
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return pc, p == pc


def bce_loss(probs: Tensor, targets: Tensor) -> tuple[float, Tensor]:
    """Mean binary cross-entropy; probabilities clamped to [1e-7, 1 - 1e-7].

    The gradient is zero where clamping is active (the composite is flat
    there), so it stays an exact derivative of the computed loss.
    """
    if probs.shape != targets.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs targets {targets.shape}")
    t = targets.array()
    pc, unclamped = _clamped(probs)
    n = pc.size
    loss = float(-np.sum(t * np.log(pc) + (1.0 - t) * np.log1p(-pc)) / n)
    grad = np.where(unclamped, (pc - t) / (pc * (1.0 - pc)) / n, 0.0)
    return loss, Tensor.from_array(grad)


def soft_dice_loss(probs: Tensor, targets: Tensor,
                   smooth: float = 1.0) -> tuple[float, Tensor]:
    """1 - (2*sum(p*t) + smooth) / (sum(p) + sum(t) + smooth)."""
    if probs.shape != targets.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs targets {targets.shape}")
    p = probs.array()
    t = targets.array()
    inter = float((p * t).sum())
    denom = float(p.sum() + t.sum()) + smooth
    loss = 1.0 - (2.0 * inter + smooth) / denom
    grad = (2.0 * inter + smooth) / denom ** 2 - 2.0 * t / denom
    return loss, Tensor.from_array(grad)


def combined_loss(probs: Tensor, targets: Tensor) -> tuple[float, Tensor]:
    """Unit-weight sum of binary cross-entropy and soft dice."""
    lb, gb = bce_loss(probs, targets)
    ld, gd = soft_dice_loss(probs, targets)
    return lb + ld, Tensor.from_array(gb.array() + gd.array())


def sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def combined_loss_on_logits(logits: Tensor, targets: Tensor) -> tuple[float, Tensor]:
    """Combined loss with the sigmoid folded in, for networks emitting logits."""
    z = logits.array()
    p = sigmoid(z)
    loss, gp = combined_loss(Tensor.from_array(p), targets)
    return loss, Tensor.from_array(gp.array() * p * (1.0 - p))
