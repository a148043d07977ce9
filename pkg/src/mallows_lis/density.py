"""Limiting-density fixed point on [0,1]^2 and the LLN constants.

Solves a(x) = -log int_0^1 exp(-c(x,y) + a(y)) dy on a midpoint grid,
where c(x,y) = theta |x-y| (L1) or theta (x-y)^2 (L2), by alternating
marginal scaling with per-sweep symmetrization. The resulting density
rho(x,y) = exp(-c(x,y) + a(x) + a(y)) has uniform marginals, and the law
of large numbers constant is 2 int_0^1 sqrt(rho(x,x)) dx.

The grid kernel is Toeplitz, so one scaling sweep is an FFT convolution
(O(m log m)); updates run on phi = exp(a) directly, which is safe for any
theta well below the float exponent range (guarded at 600).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .models import ModelKind

THETA_MAX = 600.0


class DensityConvergenceError(RuntimeError):
    def __init__(self, marginal_error: float, iterations: int):
        super().__init__(
            f"marginal scaling did not converge: marginal_error={marginal_error:.3e} "
            f"after {iterations} sweeps"
        )
        self.marginal_error = marginal_error
        self.iterations = iterations


@dataclass(frozen=True)
class DensityGrid:
    """Converged log-scaling function a on midpoints (k+1/2)/m, k = 0..m-1."""

    kind: ModelKind
    theta: float
    m: int
    a: np.ndarray
    marginal_error: float
    iterations: int

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m

    def to_csv(self) -> str:
        """Columns x, a(x)."""
        buf = io.StringIO()
        buf.write("x,a\n")
        for x, v in zip(self.midpoints, self.a):
            buf.write(f"{x:.12g},{v:.12g}\n")
        return buf.getvalue()

    def diagonal_csv(self) -> str:
        """Columns x, rho(x,x); the diagonal density is exp(2 a(x))."""
        buf = io.StringIO()
        buf.write("x,rho_diag\n")
        for x, v in zip(self.midpoints, self.a):
            buf.write(f"{x:.12g},{math.exp(2.0 * v):.12g}\n")
        return buf.getvalue()


def _kernel_row(kind: ModelKind, theta: float, m: int) -> np.ndarray:
    # e^{-c(d/m)} for grid offsets d = -(m-1)..(m-1)
    d = np.abs(np.arange(-(m - 1), m)) / m
    if kind is ModelKind.L1:
        return np.exp(-theta * d)
    return np.exp(-theta * d * d)


def solve_density(
    kind: ModelKind,
    theta: float,
    m: int = 1024,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> DensityGrid:
    """Alternating-scaling solve of the fixed-point equation on an m-cell grid.

    Starts from a = 0 (exact at theta = 0), sweeps A-update / B-update /
    average / reversal-symmetrize, and stops when every row and column
    marginal of rho is within tol of 1.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if theta > THETA_MAX:
        raise ValueError(f"theta > {THETA_MAX} would underflow the grid kernel")
    if m < 16:
        raise ValueError("grid resolution m must be >= 16")
    if not tol > 0:
        raise ValueError("tol must be positive")
    kvec = _kernel_row(kind, theta, m)
    h = 1.0 / m

    def matvec(phi: np.ndarray) -> np.ndarray:
        # Toeplitz product (K phi)_i = sum_j k_{i-j} phi_j
        return fftconvolve(kvec, phi, mode="valid")

    phi = np.ones(m)
    err = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        phi_a = 1.0 / (h * matvec(phi))       # A(x) <- -log int e^{-c+B} dy
        phi_b = 1.0 / (h * matvec(phi_a))     # B(y) <- -log int e^{-c+A} dx
        phi = np.sqrt(phi_a * phi_b)          # a <- (A + B)/2
        phi = np.sqrt(phi * phi[::-1])        # a(x) <- (a(x) + a(1-x))/2
        row = phi * (h * matvec(phi))
        err = float(np.abs(row - 1.0).max())
        if err < tol:
            break
    else:
        raise DensityConvergenceError(err, max_iter)
    return DensityGrid(kind, float(theta), m, np.log(phi), err, iterations)


def _interp_a(grid: DensityGrid, x: np.ndarray) -> np.ndarray:
    # linear interpolation between midpoints, constant in the boundary half-cells
    return np.interp(x, grid.midpoints, grid.a)


def rho_at(grid: DensityGrid, x, y):
    """Density rho(x, y) = exp(-c(x,y) + a(x) + a(y)) via interpolation of a."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x < 0) or np.any(x > 1) or np.any(y < 0) or np.any(y > 1):
        raise ValueError("rho_at is defined on [0,1]^2")
    if grid.kind is ModelKind.L1:
        cost = grid.theta * np.abs(x - y)
    else:
        cost = grid.theta * (x - y) ** 2
    out = np.exp(-cost + _interp_a(grid, x) + _interp_a(grid, y))
    return float(out) if out.ndim == 0 else out


def lln_constant(grid: DensityGrid) -> float:
    """2 int_0^1 sqrt(rho(x,x)) dx by the midpoint rule; sqrt(rho(x,x)) = e^{a(x)}."""
    return float(2.0 * np.exp(grid.a).mean())


def density_bounds(grid: DensityGrid) -> tuple[float, float]:
    """Grid min and max of rho; always straddles 1 since the marginals are uniform."""
    x = grid.midpoints
    if grid.kind is ModelKind.L1:
        cost = grid.theta * np.abs(x[:, None] - x[None, :])
    else:
        cost = grid.theta * (x[:, None] - x[None, :]) ** 2
    logrho = -cost + grid.a[:, None] + grid.a[None, :]
    return float(np.exp(logrho.min())), float(np.exp(logrho.max()))


def marginal_errors(grid: DensityGrid) -> np.ndarray:
    """|row integral of rho - 1| per grid row (columns identical by symmetry)."""
    kvec = _kernel_row(grid.kind, grid.theta, grid.m)
    phi = np.exp(grid.a)
    row = phi * (fftconvolve(kvec, phi, mode="valid") / grid.m)
    return np.abs(row - 1.0)
