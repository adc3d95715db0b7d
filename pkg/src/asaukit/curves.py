"""Curve families and approximation-error sweeps against the exact maximum.

Everything here is deliberately plot-free: tables are plain arrays plus a CSV
serialization (17 significant digits, so values round-trip exactly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import AsauParams, asau_kernel

GridSpec = tuple[float, float, float]


def make_grid(grid: GridSpec) -> np.ndarray:
    """Strictly increasing grid from (lo, hi, step), endpoints included."""
    lo, hi, step = grid
    if not (lo < hi):
        raise ValueError(f"grid lo must be < hi, got ({lo}, {hi})")
    if not (step > 0):
        raise ValueError(f"grid step must be positive, got {step}")
    n = int(round((hi - lo) / step)) + 1
    if n < 2:
        raise ValueError(f"grid ({lo}, {hi}, {step}) has fewer than two points")
    return np.linspace(lo, hi, n)


def _exact_target(a: float, b: float, x: np.ndarray) -> np.ndarray:
    return np.maximum(a * x, b * x)


@dataclass
class CurveSeries:
    label: str
    params: AsauParams
    values: np.ndarray


@dataclass
class CurveTable:
    """One x-grid, several parameterizations, one shared exact target."""

    x_grid: np.ndarray
    series: list[CurveSeries]
    target_values: np.ndarray
    grid_spec: GridSpec


@dataclass
class SweepReport:
    """Sup error per beta, for a fixed (a, b, alpha) target family."""

    betas: list[float]
    sup_errors: list[float]
    grid_spec: GridSpec


def default_label(p: AsauParams) -> str:
    # comma-free so labels stay single CSV columns
    return f"a={p.a:g} b={p.b:g} alpha={p.alpha:g} beta={p.beta:g}"


def build_curve_table(grid: GridSpec, params_list: list[AsauParams],
                      labels: list[str] | None = None) -> CurveTable:
    """Evaluate each parameter set on the grid against the shared exact max.

    All entries must share (a, b) so a single target column is well defined.
    """
    if not params_list:
        raise ValueError("params_list must be nonempty")
    a, b = params_list[0].a, params_list[0].b
    for p in params_list[1:]:
        if (p.a, p.b) != (a, b):
            raise ValueError(
                f"all parameter sets must share (a, b); got ({a}, {b}) and ({p.a}, {p.b})")
    if labels is not None and len(labels) != len(params_list):
        raise ValueError("labels and params_list must have the same length")
    x = make_grid(grid)
    series = []
    for i, p in enumerate(params_list):
        label = labels[i] if labels is not None else default_label(p)
        series.append(CurveSeries(label, p, asau_kernel(x, p.a, p.b, p.alpha, p.beta)))
    return CurveTable(x, series, _exact_target(a, b, x), grid)


def sup_error(p: AsauParams, grid: GridSpec) -> float:
    """max over the grid of |asau(x) - max(a*x, b*x)|."""
    x = make_grid(grid)
    return float(np.max(np.abs(asau_kernel(x, p.a, p.b, p.alpha, p.beta)
                               - _exact_target(p.a, p.b, x))))


def beta_sweep(base: AsauParams, betas: list[float], grid: GridSpec) -> SweepReport:
    """Sup error of `base` with beta swept over a strictly increasing list."""
    if not betas:
        raise ValueError("betas must be nonempty")
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be strictly increasing")
    if any(b <= 0 for b in betas):
        raise ValueError("betas must all be positive")
    errors = [sup_error(base.replace(beta=b), grid) for b in betas]
    return SweepReport(list(map(float, betas)), errors, grid)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def write_curve_csv(table: CurveTable, path) -> None:
    """Header `x,target,<label...>`, one row per grid point, 17 sig. digits."""
    for s in table.series:
        if "," in s.label or "\n" in s.label:
            raise ValueError(f"series label {s.label!r} would break the CSV layout")
    cols = [table.x_grid, table.target_values] + [s.values for s in table.series]
    header = ",".join(["x", "target"] + [s.label for s in table.series])
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for row in zip(*cols):
            f.write(",".join(_FMT % v for v in row) + "\n")


def read_curve_csv(path) -> tuple[list[str], np.ndarray]:
    """Returns (column labels, value matrix) for round-trip checks."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [list(map(float, line.strip().split(","))) for line in f if line.strip()]
    return header, np.asarray(rows, dtype=np.float64)


def write_sweep_csv(report: SweepReport, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("beta,sup_error\n")
        for b, e in zip(report.betas, report.sup_errors):
            f.write((_FMT + "," + _FMT + "\n") % (b, e))
