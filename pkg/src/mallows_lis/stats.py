"""Empirical measures, test functions, reference integrals, and tail statistics.

The empirical objects are the normalized permutation graph nu (mass 1 on
[0,1]^2) and the local measures mu_{n,t0} obtained by recentering the
graph at t0 and rescaling by beta (L1) or sqrt(beta) (L2). Their analytic
limits are the densities (1/2) e^{-|x-y|} and (1/sqrt(pi)) e^{-(x-y)^2};
reference integrals against compactly supported test functions use an
iterated Gauss-Legendre rule in rotated coordinates u = x-y, v = x+y so
the |x-y| kink never crosses a quadrature panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .models import ModelKind
from .perm import Permutation, displacement_count


@dataclass(frozen=True)
class EmpiricalMeasure2D:
    """Uniformly weighted planar point set; total mass = weight * #points."""

    xs: np.ndarray
    ys: np.ndarray
    point_weight: float

    def __post_init__(self):
        if self.xs.shape != self.ys.shape:
            raise ValueError("coordinate arrays must align")

    @property
    def total_mass(self) -> float:
        return self.point_weight * self.xs.shape[0]

    def transpose(self) -> "EmpiricalMeasure2D":
        return EmpiricalMeasure2D(self.ys, self.xs, self.point_weight)


@dataclass(frozen=True)
class TestFunction:
    """A member of the class B_K: |f| <= 1, Lip(f) <= 1, support in [-K,K]^2.

    evaluator must be vectorized (accept equal-shape numpy arrays).
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support_radius: float
    lip_bound: float = 1.0
    sup_bound: float = 1.0

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def nu_measure(p: Permutation) -> EmpiricalMeasure2D:
    """The probability measure on {(i/n, sigma(i)/n)} with weights 1/n."""
    n = p.n
    i = np.arange(1, n + 1, dtype=float)
    return EmpiricalMeasure2D(i / n, p.values.astype(float) / n, 1.0 / n)


def mu_local(p: Permutation, t0: int, beta: float, kind: ModelKind) -> EmpiricalMeasure2D:
    """Local measure at t0: scale beta (L1, mass n*beta) or sqrt(beta) (L2, mass n*sqrt(beta))."""
    if not 1 <= t0 <= p.n:
        raise ValueError(f"t0 must lie in 1..{p.n}")
    scale = beta if kind is ModelKind.L1 else math.sqrt(beta)
    i = np.arange(1, p.n + 1, dtype=float)
    return EmpiricalMeasure2D(scale * (i - t0), scale * (p.values - t0), scale)


def integrate(m: EmpiricalMeasure2D, f: TestFunction) -> float:
    """sum of weight * f(point) over the point set."""
    if m.xs.shape[0] == 0:
        return 0.0
    return float(m.point_weight * np.asarray(f(m.xs, m.ys), dtype=float).sum())


def _limit_density_1d(kind: ModelKind):
    if kind is ModelKind.L1:
        return lambda u: 0.5 * np.exp(-np.abs(u))
    return lambda u: np.exp(-(u**2)) / math.sqrt(math.pi)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_integral(fn, lo: float, hi: float, panels: int) -> float:
    # composite 8-point Gauss-Legendre; fn must be vectorized
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return float(np.dot(wts, fn(pts)))


def reference_integral(
    f: TestFunction,
    kind: ModelKind,
    rtol: float = 1e-10,
    max_refine: int = 8,
) -> float:
    """int f d(limit measure) over the support box, refined until stable.

    Rotates to u = x - y, v = x + y (Jacobian 1/2) so the L1 density's
    diagonal kink lies on a panel boundary, and doubles the panel count
    until two refinements agree within rtol (absolute floor 1e-12).
    """
    K = float(f.support_radius)
    dens = _limit_density_1d(kind)

    def outer(us: np.ndarray, panels_v: int) -> np.ndarray:
        vals = np.empty_like(us)
        for idx, u in enumerate(us):
            vlim = 2.0 * K - abs(u)
            if vlim <= 0:
                vals[idx] = 0.0
                continue
            inner = _panel_integral(
                lambda v: np.asarray(f((v + u) / 2.0, (v - u) / 2.0), dtype=float),
                -vlim,
                vlim,
                panels_v,
            )
            vals[idx] = dens(u) * inner
        return vals

    prev = None
    panels = 8
    for _ in range(max_refine):
        total = 0.0
        for lo, hi in ((-2.0 * K, 0.0), (0.0, 2.0 * K)):
            total += _panel_integral(lambda us: outer(us, panels), lo, hi, panels)
        total *= 0.5  # Jacobian of (x, y) -> (u, v)
        if prev is not None and abs(total - prev) <= max(rtol * abs(total), 1e-12):
            return total
        prev = total
        panels *= 2
    raise RuntimeError(f"reference quadrature did not stabilize within {max_refine} refinements")


# smooth radial bump g(t) = exp(1 - 1/(1 - t^2)); its peak slope on a fine grid
_BUMP_T = np.linspace(0.0, 1.0 - 1e-9, 200_001)
with np.errstate(over="ignore"):
    _BUMP_G = np.exp(1.0 - 1.0 / (1.0 - _BUMP_T**2))
_BUMP_LIP = float(np.abs(np.diff(_BUMP_G) / np.diff(_BUMP_T)).max())


@dataclass(frozen=True)
class RadialBump:
    """Smooth compactly supported bump; picklable so it can cross process pools."""

    cx: float
    cy: float
    radius: float
    scale: float

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        t2 = ((x - self.cx) ** 2 + (y - self.cy) ** 2) / (self.radius * self.radius)
        out = np.zeros(np.broadcast(x, y).shape)
        mask = t2 < 1.0
        if np.any(mask):
            out[mask] = self.scale * np.exp(1.0 - 1.0 / (1.0 - t2[mask]))
        return out


def bk_functions(K: float, count: int, rng: np.random.Generator) -> list[TestFunction]:
    """Smooth bumps in B_K: random centers and radii >= 1, rescaled for the bounds.

    Supports lie strictly inside [-K,K]^2 so truncation never clips, which
    keeps the functions Lipschitz.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    if K < 1:
        raise ValueError("bump radii are >= 1 (width >= 2), so K must be >= 1")
    out = []
    for _ in range(count):
        radius = float(rng.uniform(1.0, K))
        room = K - radius
        cx = float(rng.uniform(-room, room)) if room > 0 else 0.0
        cy = float(rng.uniform(-room, room)) if room > 0 else 0.0
        scale = min(1.0, radius / _BUMP_LIP)
        out.append(TestFunction(RadialBump(cx, cy, radius, scale), support_radius=K))
    return out


def audit_bk_membership(
    f: TestFunction,
    rng: np.random.Generator,
    samples: int = 2000,
    tol: float = 1e-9,
) -> bool:
    """Randomized membership audit: sup bound, Lipschitz pairs, support box."""
    K = f.support_radius
    xs = rng.uniform(-1.5 * K, 1.5 * K, size=samples)
    ys = rng.uniform(-1.5 * K, 1.5 * K, size=samples)
    vals = np.asarray(f(xs, ys), dtype=float)
    if np.abs(vals).max() > f.sup_bound + tol:
        return False
    outside = (np.abs(xs) > K) | (np.abs(ys) > K)
    if np.any(np.abs(vals[outside]) > tol):
        return False
    xs2 = rng.uniform(-1.2 * K, 1.2 * K, size=samples)
    ys2 = rng.uniform(-1.2 * K, 1.2 * K, size=samples)
    vals2 = np.asarray(f(xs2, ys2), dtype=float)
    dist = np.hypot(xs - xs2, ys - ys2)
    ok = np.abs(vals - vals2) <= f.lip_bound * dist + tol
    return bool(np.all(ok))


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """(1/2) sum |p - q| for two probability vectors on the same index set."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("probability vectors must share an index set")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("inputs must sum to 1 within 1e-9")
    return float(0.5 * np.abs(p - q).sum())


@dataclass(frozen=True)
class TailReport:
    """Empirical survival function u -> P(count >= u)."""

    u: np.ndarray
    survival: np.ndarray

    def at(self, u: float) -> float:
        idx = np.searchsorted(self.u, u, side="right") - 1
        if idx < 0:
            return 1.0
        if idx >= self.u.shape[0]:
            return 0.0
        # survival is right-continuous in u on integer support
        return float(self.survival[idx]) if self.u[idx] <= u else 1.0


def displacement_tail(samples: Sequence[Permutation], i: int) -> TailReport:
    """Empirical survival of the crossing count |D_i| over the given samples."""
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    counts = np.array([displacement_count(p, i) for p in samples], dtype=np.int64)
    return displacement_tail_from_counts(counts)


def displacement_tail_from_counts(counts: np.ndarray) -> TailReport:
    m = counts.shape[0]
    top = int(counts.max())
    u = np.arange(0, top + 2)
    surv = np.empty(u.shape[0])
    for k, uu in enumerate(u):
        surv[k] = np.count_nonzero(counts >= uu) / m
    return TailReport(u, surv)


def nu_histogram(ps: Sequence[Permutation], g: int = 32) -> np.ndarray:
    """Average g x g cell-mass histogram of nu over the given permutations."""
    out = np.zeros((g, g))
    for p in ps:
        m = nu_measure(p)
        cx = np.minimum((m.xs * g).astype(int), g - 1)
        cy = np.minimum((m.ys * g).astype(int), g - 1)
        np.add.at(out, (cx, cy), m.point_weight)
    return out / max(len(ps), 1)


def rho_cell_masses(grid, g: int = 32) -> np.ndarray:
    """Cell masses of the limiting density on a g x g grid (midpoint rule per cell)."""
    from .density import rho_at

    sub = 8
    masses = np.zeros((g, g))
    offs = (np.arange(sub) + 0.5) / (g * sub)
    for a in range(g):
        xs = a / g + offs
        for b in range(g):
            ys = b / g + offs
            vals = rho_at(grid, xs[:, None] * np.ones(sub)[None, :], np.ones(sub)[:, None] * ys[None, :])
            masses[a, b] = vals.mean() / (g * g)
    return masses
