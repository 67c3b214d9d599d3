"""One-dimensional diagonal-norm summation-by-parts first-derivative operators.

An operator consists of a positive diagonal quadrature matrix P and a
nearly skew-symmetric matrix Q with

    Q + Q^T = diag(-1, 0, ..., 0, +1),

so that D = P^{-1} Q differentiates with interior order 2 (``SBP2``) or 4
(``SBP4``) while discrete integration by parts holds exactly:

    (v, D w)_P + (D v, w)_P = v[n-1] w[n-1] - v[0] w[0].

Coefficients are the classical diagonal-norm closures, tabulated as exact
rationals and converted to floats only at construction time, which makes
the Q + Q^T identity hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

__all__ = [
    "SbpOrder",
    "BandedMatrix",
    "SbpOperator1D",
    "build_sbp",
    "apply_d",
    "p_inner_1d",
    "min_points",
    "dump_pq",
]


class SbpOrder(Enum):
    """Interior accuracy order of the operator family."""

    SBP2 = "sbp2"
    SBP4 = "sbp4"

    @property
    def interior_order(self) -> int:
        return 2 if self is SbpOrder.SBP2 else 4

    @property
    def boundary_order(self) -> int:
        return 1 if self is SbpOrder.SBP2 else 2

    @classmethod
    def parse(cls, name: str) -> "SbpOrder":
        key = str(name).strip().lower()
        for member in cls:
            if key == member.value:
                return member
        raise ValueError(f"unknown SBP order {name!r}; expected 'sbp2' or 'sbp4'")


# Boundary closures as exact rationals.  Right-end blocks follow from the
# antisymmetric mirror q_right = -rot180(q_left), which is what makes
# Q + Q^T pick up exactly the two corner entries.
_F = Fraction

_P_LEFT = {
    SbpOrder.SBP2: [_F(1, 2)],
    SbpOrder.SBP4: [_F(17, 48), _F(59, 48), _F(43, 48), _F(49, 48)],
}

_Q_INTERIOR = {
    SbpOrder.SBP2: [_F(-1, 2), _F(0), _F(1, 2)],
    SbpOrder.SBP4: [_F(1, 12), _F(-2, 3), _F(0), _F(2, 3), _F(-1, 12)],
}

_Q_LEFT = {
    SbpOrder.SBP2: [[_F(-1, 2), _F(1, 2)]],
    SbpOrder.SBP4: [
        [_F(-1, 2), _F(59, 96), _F(-1, 12), _F(-1, 32), _F(0), _F(0)],
        [_F(-59, 96), _F(0), _F(59, 96), _F(0), _F(0), _F(0)],
        [_F(1, 12), _F(-59, 96), _F(0), _F(59, 96), _F(-1, 12), _F(0)],
        [_F(1, 32), _F(0), _F(-59, 96), _F(0), _F(2, 3), _F(-1, 12)],
    ],
}

_MIN_POINTS = {SbpOrder.SBP2: 4, SbpOrder.SBP4: 12}


def min_points(order: SbpOrder) -> int:
    """Smallest grid size for which the two boundary closures do not overlap."""
    return _MIN_POINTS[order]


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Banded matrix with dense closure blocks at both ends.

    Rows ``left.shape[0] .. n - right.shape[0] - 1`` carry the centered
    ``interior`` stencil; the first and last rows are the explicit closure
    blocks anchored at the respective corner.
    """

    n: int
    interior: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def apply(self, w: np.ndarray, axis: int = 0) -> np.ndarray:
        """Apply to a vector, or along one axis of a 2-D array, in O(n)."""
        w = np.asarray(w, dtype=float)
        if axis not in (0, 1):
            raise ValueError("axis must be 0 or 1")
        if w.shape[axis] != self.n:
            raise ValueError(f"length {w.shape[axis]} along axis {axis}, expected {self.n}")
        bl, ml = self.left.shape
        br, mr = self.right.shape
        r = self.interior.size // 2
        lo, hi = bl, self.n - br
        out = np.empty_like(w)
        if axis == 0:
            acc = np.zeros_like(w[lo:hi])
            for k, c in enumerate(self.interior):
                if c != 0.0:
                    acc += c * w[lo - r + k : hi - r + k]
            out[lo:hi] = acc
            out[:bl] = self.left @ w[:ml]
            out[hi:] = self.right @ w[self.n - mr :]
        else:
            acc = np.zeros_like(w[:, lo:hi])
            for k, c in enumerate(self.interior):
                if c != 0.0:
                    acc += c * w[:, lo - r + k : hi - r + k]
            out[:, lo:hi] = acc
            out[:, :bl] = w[:, :ml] @ self.left.T
            out[:, hi:] = w[:, self.n - mr :] @ self.right.T
        return out

    def to_dense(self) -> np.ndarray:
        """Dense n x n matrix; for tests, debug dumps and sparse assembly only."""
        bl, ml = self.left.shape
        br, mr = self.right.shape
        r = self.interior.size // 2
        a = np.zeros((self.n, self.n))
        for i in range(bl, self.n - br):
            a[i, i - r : i + r + 1] = self.interior
        a[:bl, :ml] = self.left
        a[self.n - br :, self.n - mr :] = self.right
        return a

    def max_abs_row_sum(self) -> float:
        """The infinity norm, available without densifying."""
        sums = [float(np.sum(np.abs(self.interior)))]
        sums += [float(np.sum(np.abs(row))) for row in self.left]
        sums += [float(np.sum(np.abs(row))) for row in self.right]
        return max(sums)


@dataclass(frozen=True, eq=False)
class SbpOperator1D:
    """First-derivative SBP operator on one axis.

    ``p_diag`` carries the grid-spacing factor, ``q`` is dimensionless and
    ``d = P^{-1} Q`` has units of one over length.
    """

    order: SbpOrder
    n: int
    dx: float
    p_diag: np.ndarray
    q: BandedMatrix
    d: BandedMatrix


def _mirror_block(block: list[list[Fraction]]) -> list[list[Fraction]]:
    return [[-c for c in reversed(row)] for row in reversed(block)]


def _banded_from_fractions(
    n: int,
    interior: list[Fraction],
    left: list[list[Fraction]],
    right: list[list[Fraction]],
    scale: float = 1.0,
) -> BandedMatrix:
    return BandedMatrix(
        n=n,
        interior=np.array([float(c) for c in interior]) * scale,
        left=np.array([[float(c) for c in row] for row in left]) * scale,
        right=np.array([[float(c) for c in row] for row in right]) * scale,
    )


def build_sbp(order: SbpOrder, n: int, dx: float) -> SbpOperator1D:
    """Construct the diagonal-norm operator of the requested order.

    Requires ``n >= 4`` for SBP2 and ``n >= 12`` for SBP4 so the closures
    cannot overlap, and a strictly positive spacing.
    """
    order = SbpOrder(order)
    if n < min_points(order):
        raise ValueError(f"{order.value} needs at least {min_points(order)} points, got {n}")
    if not dx > 0.0:
        raise ValueError(f"grid spacing must be positive, got {dx}")

    p_left = _P_LEFT[order]
    q_left = _Q_LEFT[order]
    q_int = _Q_INTERIOR[order]
    q_right = _mirror_block(q_left)

    p = np.ones(n)
    closure = np.array([float(c) for c in p_left])
    p[: closure.size] = closure
    p[n - closure.size :] = closure[::-1]
    p_diag = p * dx

    q = _banded_from_fractions(n, q_int, q_left, q_right)

    # D rows are exact rationals q_ij / p_i, scaled by 1/dx afterwards.
    d_left = [[c / p_left[i] for c in row] for i, row in enumerate(q_left)]
    d_right = _mirror_block(d_left)
    d = _banded_from_fractions(n, q_int, d_left, d_right, scale=1.0 / dx)

    return SbpOperator1D(order=order, n=n, dx=dx, p_diag=p_diag, q=q, d=d)


def apply_d(op: SbpOperator1D, w: np.ndarray) -> np.ndarray:
    """Differentiate a grid function by banded stencil application."""
    w = np.asarray(w, dtype=float)
    if w.shape != (op.n,):
        raise ValueError(f"expected vector of length {op.n}, got shape {w.shape}")
    return op.d.apply(w)

def p_inner_1d(op: SbpOperator1D, v: np.ndarray, w: np.ndarray) -> float:
    """The quadrature inner product (v, w)_P = sum_j p_j v_j w_j."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (op.n,) or w.shape != (op.n,):
        raise ValueError(f"expected vectors of length {op.n}, got {v.shape} and {w.shape}")
    return float(np.dot(op.p_diag * v, w))


def dump_pq(op: SbpOperator1D) -> str:
    """Plain-text dump of P and Q for test tooling."""
    lines = [f"# {op.order.value} n={op.n} dx={op.dx!r}", "# P diagonal"]
    lines.append(" ".join(f"{x:.17g}" for x in op.p_diag))
    lines.append("# Q")
    for row in op.q.to_dense():
        lines.append(" ".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"
