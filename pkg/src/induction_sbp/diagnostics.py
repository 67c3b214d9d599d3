"""Error norms, convergence-rate fitting, discrete divergence, energy reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid2d import ScalarField, VectorField2, ddx, ddy, p_norm

__all__ = [
    "ConvergenceRow",
    "magnitude",
    "rel_l2_percent",
    "discrete_divergence",
    "fit_rates",
    "growth_constant",
    "format_convergence_table",
    "write_convergence_csv",
]


def magnitude(v: VectorField2) -> ScalarField:
    """Pointwise field magnitude sqrt(b1^2 + b2^2)."""
    return ScalarField.from_mesh(v.grid, np.hypot(v.b1.mesh, v.b2.mesh))


def rel_l2_percent(v: VectorField2, ref: VectorField2) -> float:
    """Relative percentage error of |v| against |ref| in the quadrature norm."""
    mv, mr = magnitude(v), magnitude(ref)
    denom = p_norm(mr)
    if denom == 0.0:
        raise ValueError("reference field has zero norm")
    return 100.0 * p_norm(ScalarField.from_mesh(v.grid, mv.mesh - mr.mesh)) / denom


def discrete_divergence(v: VectorField2) -> ScalarField:
    """d(b1)/dx + d(b2)/dy with the grid's SBP operators."""
    div_x = ddx(v.b1)
    div_y = ddy(v.b2)
    return ScalarField.from_mesh(v.grid, div_x.mesh + div_y.mesh)


@dataclass(frozen=True)
class ConvergenceRow:
    """One grid level of a refinement study; ``rate`` is None on the first row."""

    label: str
    error_percent: float
    rate: float | None


def fit_rates(resolutions: list[int], errors: list[float]) -> list[ConvergenceRow]:
    """Rates log2(e_prev / e_this) down a doubling sequence of resolutions."""
    if len(resolutions) != len(errors):
        raise ValueError("resolutions and errors must have equal length")
    if len(resolutions) < 1:
        raise ValueError("need at least one row")
    for prev, this in zip(resolutions, resolutions[1:]):
        if this != 2 * prev:
            raise ValueError(f"resolutions must double: {prev} -> {this}")
    for e in errors:
        if e <= 0.0 or not np.isfinite(e):
            raise ValueError(f"errors must be positive and finite, got {e}")
    rows = []
    for k, (n, e) in enumerate(zip(resolutions, errors)):
        rate = None if k == 0 else float(np.log2(errors[k - 1] / e))
        rows.append(ConvergenceRow(label=f"{n}x{n}", error_percent=float(e), rate=rate))
    return rows


def growth_constant(growths: np.ndarray, dt: float) -> float:
    """Smallest K >= 0 with per-step growth factor <= 1 + K dt for a whole run."""
    g = np.asarray(growths, dtype=float)
    g = g[np.isfinite(g)]
    if g.size == 0:
        return 0.0
    return float(max(0.0, (g.max() - 1.0) / dt))


def format_convergence_table(rows: list[ConvergenceRow]) -> str:
    """Aligned plain-text table: grid size, percent error, observed rate."""
    lines = [f"{'Grid size':>12s} {'error %':>14s} {'rate':>8s}"]
    for row in rows:
        rate = "" if row.rate is None else f"{row.rate:8.2f}"
        lines.append(f"{row.label:>12s} {row.error_percent:14.6e} {rate:>8s}")
    return "\n".join(lines) + "\n"


def write_convergence_csv(path, rows: list[ConvergenceRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("grid,error_percent,rate\n")
        for row in rows:
            rate = "" if row.rate is None else f"{row.rate:.17g}"
            fh.write(f"{row.label},{row.error_percent:.17g},{rate}\n")
