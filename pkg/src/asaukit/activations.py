"""Smooth parametric approximations of the two-argument maximum.

The central function is ``asau_forward``: a*x plus a Mish-style smooth gate on
the difference (b - a)*x.  As the sharpness parameter beta grows the output
converges to max(a*x, b*x), so ReLU (a=0, b=1) and LeakyReLU (a=0.01, b=1)
arise as sharp limits.  All functions here are scalar, pure, and double
precision; the elementwise array kernels used by the network layers live in
the same module so both paths share bit-identical arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AsauParams",
    "AsauGrad",
    "BaselineKind",
    "stable_softplus",
    "exact_max2",
    "param_mish",
    "asau_pair",
    "asau_forward",
    "asau_partials",
    "baseline_forward",
    "baseline_derivative",
]


def _require_finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


@dataclass(frozen=True)
class AsauParams:
    """The four scalars of the smooth-maximum unit.

    a and b are the lower/upper linear slopes, alpha the inner smoothing
    gain, beta the sharpness.  No ordering between a and b is imposed; the
    formula is evaluated literally.
    """

    a: float = 0.0
    b: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "alpha", "beta"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))

    def replace(self, **kwargs) -> "AsauParams":
        fields = {k: getattr(self, k) for k in ("a", "b", "alpha", "beta")}
        fields.update(kwargs)
        return AsauParams(**fields)


@dataclass(frozen=True)
class AsauGrad:
    """Partial derivatives of asau_forward w.r.t. (x, a, b, alpha, beta)."""

    d_x: float
    d_a: float
    d_b: float
    d_alpha: float
    d_beta: float


@dataclass(frozen=True)
class BaselineKind:
    """Reference activation: one of relu, leaky_relu, prelu, mish.

    leaky_relu and prelu carry a negative-side slope (leaky default 0.01,
    prelu default 0.25).
    """

    name: str
    slope: float = 0.0

    _NAMES = ("relu", "leaky_relu", "prelu", "mish")

    def __post_init__(self):
        if self.name not in self._NAMES:
            raise ValueError(f"unknown baseline {self.name!r}, expected one of {self._NAMES}")
        _require_finite("slope", self.slope)

    @classmethod
    def relu(cls) -> "BaselineKind":
        return cls("relu")

    @classmethod
    def leaky_relu(cls, slope: float = 0.01) -> "BaselineKind":
        return cls("leaky_relu", slope)

    @classmethod
    def prelu(cls, slope: float = 0.25) -> "BaselineKind":
        return cls("prelu", slope)

    @classmethod
    def mish(cls) -> "BaselineKind":
        return cls("mish")


# ---------------------------------------------------------------------------
# elementwise kernels (ndarray in, ndarray out; scalars are 0-d arrays)
# ---------------------------------------------------------------------------


def softplus_kernel(w):
    """ln(1 + e^w) as max(w, 0) + log1p(e^-|w|); overflow-free for any w."""
    w = np.asarray(w, dtype=np.float64)
    return np.maximum(w, 0.0) + np.log1p(np.exp(-np.abs(w)))


def sigmoid_kernel(w):
    w = np.asarray(w, dtype=np.float64)
    e = np.exp(-np.abs(w))
    return np.where(w >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sech2_kernel(y):
    """sech^2(y) = 4 e^-2|y| / (1 + e^-2|y|)^2; avoids the 1 - tanh^2 cancellation."""
    y = np.asarray(y, dtype=np.float64)
    e = np.exp(-2.0 * np.abs(y))
    return 4.0 * e / (1.0 + e) ** 2


def mish_gate_kernel(u, alpha, beta):
    """u * tanh(alpha * softplus(beta * u)) elementwise."""
    u = np.asarray(u, dtype=np.float64)
    return u * np.tanh(alpha * softplus_kernel(beta * u))


def asau_kernel(x, a, b, alpha, beta):
    """Elementwise smooth max of (a*x, b*x).

    Computed as the exact composition a*x + mish_gate(b*x - a*x), which is
    what the scalar API exposes; parameters may be scalars or arrays
    broadcastable against x (per-channel use).
    """
    x = np.asarray(x, dtype=np.float64)
    ax = a * x
    return ax + mish_gate_kernel(b * x - ax, alpha, beta)


def asau_grad_kernel(x, a, b, alpha, beta):
    """Elementwise partials of asau_kernel.

    Returns (d_x, d_a, d_b, d_alpha, d_beta) arrays broadcast against x.
    With u = (b-a)*x, w = beta*u, s = softplus(w), t = tanh(alpha*s):

        d_x     = a + (b-a) * g          g = t + u * alpha * beta * sech2 * sigmoid
        d_a     = x * (1 - g)
        d_b     = x * g
        d_alpha = u * s * sech2
        d_beta  = alpha * u^2 * sech2 * sigmoid
    """
    x = np.asarray(x, dtype=np.float64)
    ax = a * x
    u = b * x - ax
    w = beta * u
    s = softplus_kernel(w)
    sig = sigmoid_kernel(w)
    s2 = sech2_kernel(alpha * s)
    t = np.tanh(alpha * s)
    g = t + u * (alpha * beta * s2 * sig)
    d_x = a + (b - a) * g
    d_a = x * (1.0 - g)
    d_b = x * g
    d_alpha = u * s * s2
    d_beta = alpha * u * u * s2 * sig
    return d_x, d_a, d_b, d_alpha, d_beta


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def stable_softplus(x: float) -> float:
    """ln(1 + e^x) without overflow; exceeds max(0, x) by at most ln 2."""
    return float(softplus_kernel(np.float64(x)))


def exact_max2(x1: float, x2: float) -> float:
    """The exact two-argument maximum: x1 if x1 >= x2 else x2."""
    return float(x1) if x1 >= x2 else float(x2)


def param_mish(x: float, alpha: float, beta: float) -> float:
    """x * tanh(alpha * softplus(beta * x)); alpha=beta=1 is standard Mish."""
    return float(mish_gate_kernel(np.float64(x), np.float64(alpha), np.float64(beta)))


def asau_pair(x1: float, x2: float, alpha: float, beta: float) -> float:
    """Smooth max of two values: x1 + mish gate applied to (x2 - x1)."""
    x1 = np.float64(x1)
    return float(x1 + mish_gate_kernel(np.float64(x2) - x1, np.float64(alpha), np.float64(beta)))


def asau_forward(x: float, p: AsauParams) -> float:
    """Smooth max of (a*x, b*x); equals asau_pair(a*x, b*x, alpha, beta)."""
    return float(asau_kernel(np.float64(x), np.float64(p.a), np.float64(p.b),
                             np.float64(p.alpha), np.float64(p.beta)))


def asau_partials(x: float, p: AsauParams) -> AsauGrad:
    """All five analytic partials of asau_forward at (x, p)."""
    parts = asau_grad_kernel(np.float64(x), np.float64(p.a), np.float64(p.b),
                             np.float64(p.alpha), np.float64(p.beta))
    return AsauGrad(*(float(v) for v in parts))


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def baseline_kernel(kind: BaselineKind, x):
    x = np.asarray(x, dtype=np.float64)
    if kind.name == "relu":
        return np.maximum(x, 0.0)
    if kind.name in ("leaky_relu", "prelu"):
        return np.where(x >= 0, x, kind.slope * x)
    # mish
    return mish_gate_kernel(x, 1.0, 1.0)


def baseline_derivative_kernel(kind: BaselineKind, x):
    """Derivative arrays; the kink at 0 takes the right-hand value 1."""
    x = np.asarray(x, dtype=np.float64)
    if kind.name == "relu":
        return np.where(x >= 0, 1.0, 0.0)
    if kind.name in ("leaky_relu", "prelu"):
        return np.where(x >= 0, 1.0, kind.slope)
    s = softplus_kernel(x)
    return np.tanh(s) + x * sech2_kernel(s) * sigmoid_kernel(x)


def baseline_forward(kind: BaselineKind, x: float) -> float:
    return float(baseline_kernel(kind, np.float64(x)))


def baseline_derivative(kind: BaselineKind, x: float) -> float:
    return float(baseline_derivative_kernel(kind, np.float64(x)))
