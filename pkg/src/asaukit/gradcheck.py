"""Finite-difference verification of the activation partials and network gradients.

The scalar oracle re-evaluates the smooth-max formula in 30-digit mpmath
arithmetic and differentiates it by central differences, so the oracle's own
noise sits far below the tolerances being enforced.  The analytic side is
looked up through the activations module at call time, which is what lets the
fault-injection test hook it.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from . import activations as act
from .activations import AsauParams, AsauGrad
from .losses import softmax_ce_loss
from .nn import (Activation, AsauSpec, Conv2d, Dense, Flatten, GradCheckReport,
                 Network, numeric_grad_check)
from .rng import SplitMix64
from .tensor import Tensor

PARTIAL_NAMES = ("d_x", "d_a", "d_b", "d_alpha", "d_beta")
ARG_NAMES = ("x", "a", "b", "alpha", "beta")


@dataclass
class ScalarFailure:
    partial: str
    point: tuple[float, float, float, float, float]
    analytic: float
    numeric: float
    error: float
    criterion: str  # "relative" or "absolute"


@dataclass
class ScalarSuiteReport:
    samples: int
    rel_tol: float
    abs_tol: float
    worst_rel: dict[str, float]
    failures: list[ScalarFailure]

    @property
    def passed(self) -> bool:
        return not self.failures


def _mp_forward(x, a, b, alpha, beta):
    u = b * x - a * x
    return a * x + u * mp.tanh(alpha * mp.log(1 + mp.exp(beta * u)))


def _mp_partial(args: list, i: int):
    h = mp.mpf("1e-10") * max(1, abs(args[i]))
    hi = list(args)
    lo = list(args)
    hi[i] += h
    lo[i] -= h
    return (_mp_forward(*hi) - _mp_forward(*lo)) / (2 * h)


def sample_point(rng: SplitMix64) -> tuple[float, float, float, float, float]:
    """One draw from the verification ranges: x in [-5,5], a,b in [-2,2],
    alpha in (0,3], beta in (0,20]."""
    x = rng.uniform(-5.0, 5.0)
    a = rng.uniform(-2.0, 2.0)
    b = rng.uniform(-2.0, 2.0)
    alpha = 3.0 * (1.0 - rng.uniform())
    beta = 20.0 * (1.0 - rng.uniform())
    return x, a, b, alpha, beta


def scalar_gradient_suite(n_samples: int = 1000, seed: int = 2024,
                          rel_tol: float = 1e-6, abs_tol: float = 1e-8,
                          dps: int = 30) -> ScalarSuiteReport:
    """Check all five analytic partials at n_samples random points.

    A partial passes if its relative error against the oracle is below
    rel_tol; partials whose true magnitude is below abs_tol are instead
    required to agree within abs_tol absolutely.
    """
    if n_samples <= 0:
        raise ValueError(f"sample count must be positive, got {n_samples}")
    rng = SplitMix64(seed)
    worst = {name: 0.0 for name in PARTIAL_NAMES}
    failures: list[ScalarFailure] = []
    old_dps = mp.mp.dps
    mp.mp.dps = dps
    try:
        for _ in range(n_samples):
            point = sample_point(rng)
            x, a, b, alpha, beta = point
            grad: AsauGrad = act.asau_partials(x, AsauParams(a, b, alpha, beta))
            analytic = [grad.d_x, grad.d_a, grad.d_b, grad.d_alpha, grad.d_beta]
            args = [mp.mpf(v) for v in point]
            for i, name in enumerate(PARTIAL_NAMES):
                numeric = float(_mp_partial(args, i))
                if abs(numeric) < abs_tol:
                    err = abs(analytic[i] - numeric)
                    ok = err < abs_tol
                    criterion = "absolute"
                else:
                    err = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric))
                    ok = err < rel_tol
                    criterion = "relative"
                    worst[name] = max(worst[name], err)
                if not ok:
                    failures.append(ScalarFailure(name, point, analytic[i], numeric,
                                                  err, criterion))
    finally:
        mp.mp.dps = old_dps
    return ScalarSuiteReport(n_samples, rel_tol, abs_tol, worst, failures)


def micro_network() -> tuple[Network, Tensor, list[int]]:
    """A conv/dense micro-network with every smooth-max parameter trainable."""
    spec = AsauSpec(AsauParams(0.0, 1.0, 1.0, 1.0), trainable=(True, True, True, True))
    layers = [Conv2d(1, 2), Activation(spec), Flatten(),
              Dense(32, 8), Activation(spec), Dense(8, 3)]
    net = Network(layers, (1, 4, 4), SplitMix64(91))
    data_rng = SplitMix64(92)
    x = Tensor.from_array([[ [[data_rng.uniform(-1.0, 1.0) for _ in range(4)]
                              for _ in range(4)] ] for _ in range(4)])
    labels = [data_rng.randint(3) for _ in range(4)]
    return net, x, labels


def micro_network_report(h: float = 1e-5) -> GradCheckReport:
    net, x, labels = micro_network()
    return numeric_grad_check(net, x, lambda out: softmax_ce_loss(out, labels), h)
