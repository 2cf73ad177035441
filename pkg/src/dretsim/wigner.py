"""Wigner quasi-probability rendering of Fock-basis phonon states.

Evaluates W(Q, P) in dimensionless phase-space coordinates from a density
matrix in the number basis via the Laguerre expansion

    W = (1/pi) exp(-2(Q^2+P^2)) sum_k (2 - delta_k0) Re[xi^k T_k(B)]

with xi = sqrt(2)(Q + iP), B = 2(Q^2 + P^2) and T_k a Laguerre series over
the k-th diagonal of rho.  The factorial ratios are carried through
log-gamma and the Laguerre polynomials through their three-term
recurrence, which stays stable well past n = 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WignerGrid",
    "GridTooSmall",
    "wigner_function",
    "wigner_on_grid",
    "grid_normalization",
]


class GridTooSmall(ValueError):
    """Grid does not enclose the state: normalization check failed."""


@dataclass(frozen=True)
class WignerGrid:
    """Square (Q, P) lattice; default 201 x 201 points spanning +-8."""

    extent: float = 8.0
    points: int = 201

    def __post_init__(self):
        if self.extent <= 0 or self.points < 2:
            raise ValueError("need positive extent and at least 2 points")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.points - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    def covers(self, n_max: int) -> bool:
        # a Fock state |n> lives inside radius ~sqrt(2n); require headroom
        return self.extent >= math.sqrt(2.0 * n_max) + 2.0


def wigner_function(rho: np.ndarray, q, p) -> np.ndarray:
    """W(Q, P) for a Fock-basis density matrix at broadcastable (q, p)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho must be a square matrix")
    dim = rho.shape[0]
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    b = 2.0 * (q * q + p * p)
    xi = math.sqrt(2.0) * (q + 1j * p)
    out = np.zeros(np.broadcast(q, p).shape, dtype=float)
    for k in range(dim):
        diag = np.diagonal(rho, offset=k)
        if k > 0 and not np.any(diag):
            continue
        series = np.zeros(b.shape, dtype=complex)
        lag_prev = np.zeros_like(b)
        lag = np.ones_like(b)
        for m in range(dim - k):
            ratio = math.exp(
                0.5 * (math.lgamma(m + 1) - math.lgamma(m + k + 1)))
            series += ((-1) ** m) * ratio * diag[m] * lag
            lag, lag_prev = (
                ((2 * m + k + 1 - b) * lag - (m + k) * lag_prev) / (m + 1),
                lag)
        if k == 0:
            out += series.real
        else:
            out += 2.0 * (xi ** k * series).real
    result = (1.0 / np.pi) * np.exp(-0.5 * b) * out
    return float(result) if result.ndim == 0 else result


def grid_normalization(field: np.ndarray, grid: WignerGrid) -> float:
    """2-D trapezoid integral of a rendered field over the grid."""
    axis = grid.axis
    return float(np.trapezoid(np.trapezoid(field, axis, axis=1), axis))


def wigner_on_grid(rho: np.ndarray, grid: WignerGrid | None = None,
                   check_tolerance: float = 1e-3) -> np.ndarray:
    """Render W over a square lattice and verify it integrates to tr(rho).

    Raises GridTooSmall when the quadrature misses tr(rho) by more than
    `check_tolerance`, which is what an under-sized grid looks like.
    """
    if grid is None:
        grid = WignerGrid()
    qq, pp = grid.mesh()
    field = wigner_function(rho, qq, pp)
    trace = float(np.trace(np.asarray(rho)).real)
    total = grid_normalization(field, grid)
    if abs(total - trace) > check_tolerance:
        raise GridTooSmall(
            f"Wigner field integrates to {total:.6f}, expected {trace:.6f}; "
            f"enlarge the grid (extent {grid.extent}) or refine it")
    return field
