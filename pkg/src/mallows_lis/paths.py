"""Refined lattice paths and the LIS sandwich bounds.

A basic path walks unit steps right/up through a T1 x T2 grid of
sub-rectangles of (A1,A2] x (B1,B2]; a refined path annotates each step
with a sub-interval index r in 1..K0, monotone along straight runs. Each
step l carries an interval I_l on the shared edge of consecutive
rectangles; its midpoint (x_l, y_l) and endpoints (a_l,b_l) <= (c_l,d_l)
drive two bounds on the LIS of a permutation restricted to the rectangle:
the half-open midpoint rectangles give a lower bound for every refined
path, and the closed endpoint rectangles maximized over all refined paths
give an upper bound.

Geometry is computed exactly in Fraction arithmetic whenever the spec
fields are rational; float specs fall back to a documented 1e-12 slack in
the integer-boundary conversions (see perm.interval_int_range).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Sequence

from .perm import Permutation, lis_restricted

ENUMERATION_GUARD = 10_000_000


class PathEnumerationError(ValueError):
    pass


@dataclass(frozen=True)
class PathSpec:
    """Rectangle (a1,a2] x (b1,b2] split into t1 x t2 cells, refinement depth k0."""

    a1: object
    a2: object
    b1: object
    b2: object
    t1: int
    t2: int
    k0: int

    def __post_init__(self):
        if not (0 <= self.a1 < self.a2 <= 1 and 0 <= self.b1 < self.b2 <= 1):
            raise ValueError("need 0 <= a1 < a2 <= 1 and 0 <= b1 < b2 <= 1")
        if min(self.t1, self.t2) < 2:
            raise ValueError("refined paths need min(t1, t2) >= 2")
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")

    @property
    def is_rational(self) -> bool:
        return all(isinstance(v, Rational) for v in (self.a1, self.a2, self.b1, self.b2))

    @property
    def delta1(self):
        if self.is_rational:
            return Fraction(self.a2 - self.a1, self.t1)
        return (self.a2 - self.a1) / self.t1

    @property
    def delta2(self):
        if self.is_rational:
            return Fraction(self.b2 - self.b1, self.t2)
        return (self.b2 - self.b1) / self.t2

    @classmethod
    def unit_square(cls, t1: int, t2: int, k0: int) -> "PathSpec":
        return cls(Fraction(0), Fraction(1), Fraction(0), Fraction(1), t1, t2, k0)

    def path_count_bound(self) -> int:
        return math.comb(self.t1 + self.t2, self.t1) * self.k0 ** (self.t1 + self.t2 - 2)


@dataclass(frozen=True)
class RefinedPath:
    """Cells (i_l, j_l), l = 1..t1+t2-1, with refinements r_l, l = 1..t1+t2-2."""

    cells: tuple[tuple[int, int], ...]
    refinements: tuple[int, ...]

    def validate(self, spec: PathSpec) -> None:
        cells, rs = self.cells, self.refinements
        L = spec.t1 + spec.t2 - 1
        if len(cells) != L or len(rs) != L - 1:
            raise ValueError("path length mismatch")
        if cells[0] != (1, 1) or cells[-1] != (spec.t1, spec.t2):
            raise ValueError("path must run from (1,1) to (t1,t2)")
        for l in range(L - 1):
            di = cells[l + 1][0] - cells[l][0]
            dj = cells[l + 1][1] - cells[l][1]
            if (di, dj) not in ((1, 0), (0, 1)):
                raise ValueError("steps must be unit right or up")
            if not 1 <= rs[l] <= spec.k0:
                raise ValueError("refinement out of range")
        for l in range(L - 2):
            same_col = cells[l][0] == cells[l + 1][0] == cells[l + 2][0]
            same_row = cells[l][1] == cells[l + 1][1] == cells[l + 2][1]
            if (same_col or same_row) and rs[l + 1] < rs[l]:
                raise ValueError("refinements must be monotone along straight runs")


def enumerate_refined_paths(spec: PathSpec) -> Iterator[RefinedPath]:
    """Yield every refined path exactly once, lexicographic in the interleaved sequence.

    The sequence order is cell_1, r_1, cell_2, r_2, ..., cell_{t1+t2-1};
    among next cells the up-step (i, j+1) precedes the right-step (i+1, j).
    """
    if spec.path_count_bound() > ENUMERATION_GUARD:
        raise PathEnumerationError(
            f"refined-path enumeration guard exceeded: bound "
            f"{spec.path_count_bound()} > {ENUMERATION_GUARD}"
        )
    t1, t2, k0 = spec.t1, spec.t2, spec.k0
    L = t1 + t2 - 1

    cells = [(1, 1)]
    rs: list[int] = []

    def emit_r() -> Iterator[RefinedPath]:
        # choose r_l for l = len(rs)+1 (the step leaving cells[-1])
        for r in range(1, k0 + 1):
            rs.append(r)
            yield from emit_cell()
            rs.pop()

    def emit_cell() -> Iterator[RefinedPath]:
        i, j = cells[-1]
        for cell in ((i, j + 1), (i + 1, j)):  # up-step is lexicographically first
            if cell[0] > t1 or cell[1] > t2:
                continue
            cells.append(cell)
            if not _run_ok(cells, rs):
                cells.pop()
                continue
            if len(cells) == L:
                if cell == (t1, t2):
                    yield RefinedPath(tuple(cells), tuple(rs))
            else:
                yield from emit_r()
            cells.pop()

    def _run_ok(cells: list, rs: list) -> bool:
        # check the constraint ending at the cell just appended
        if len(cells) < 3:
            return True
        a, b, c = cells[-3], cells[-2], cells[-1]
        if (a[0] == b[0] == c[0]) or (a[1] == b[1] == c[1]):
            return rs[-1] >= rs[-2]
        return True

    yield from emit_r()


@dataclass(frozen=True)
class PathGeometry:
    """Midpoints and endpoints of the step intervals, with boundary conventions.

    Arrays are indexed l = 0..t1+t2-1: index 0 holds (A1, B1) in every
    slot, index t1+t2-1 holds (A2, B2), and 1..t1+t2-2 come from the
    intervals I_l.
    """

    x: tuple
    y: tuple
    a: tuple
    b: tuple
    c: tuple
    d: tuple


def geometry(path: RefinedPath, spec: PathSpec) -> PathGeometry:
    path.validate(spec)
    d1, d2 = spec.delta1, spec.delta2
    a1, b1 = spec.a1, spec.b1
    two = Fraction(2) if spec.is_rational else 2.0
    xs, ys, as_, bs, cs, ds = [a1], [b1], [a1], [b1], [a1], [b1]
    for l in range(len(path.cells) - 1):
        (i, j), (i2, j2) = path.cells[l], path.cells[l + 1]
        r = path.refinements[l]
        if (i2 - i, j2 - j) == (1, 0):
            # rightward step: vertical interval at x = a1 + i*d1
            x = a1 + i * d1
            ylo = b1 + (j - 1) * d2 + (r - 1) * d2 / spec.k0
            yhi = b1 + (j - 1) * d2 + r * d2 / spec.k0
            as_.append(x)
            cs.append(x)
            bs.append(ylo)
            ds.append(yhi)
            xs.append(x)
            ys.append((ylo + yhi) / two)
        else:
            # upward step: horizontal interval at y = b1 + j*d2
            y = b1 + j * d2
            xlo = a1 + (i - 1) * d1 + (r - 1) * d1 / spec.k0
            xhi = a1 + (i - 1) * d1 + r * d1 / spec.k0
            as_.append(xlo)
            cs.append(xhi)
            bs.append(y)
            ds.append(y)
            xs.append((xlo + xhi) / two)
            ys.append(y)
    xs.append(spec.a2)
    ys.append(spec.b2)
    as_.append(spec.a2)
    bs.append(spec.b2)
    cs.append(spec.a2)
    ds.append(spec.b2)
    return PathGeometry(tuple(xs), tuple(ys), tuple(as_), tuple(bs), tuple(cs), tuple(ds))


def lower_bound_lis(
    p: Permutation,
    path: RefinedPath,
    spec: PathSpec,
    kappa,
    alpha,
    gamma,
) -> int:
    """Sum of LIS over the half-open midpoint rectangles; never exceeds the box LIS."""
    if not (alpha > 0 and gamma > 0):
        raise ValueError("alpha and gamma must be positive")
    g = geometry(path, spec)
    total = 0
    for l in range(1, len(g.x)):
        total += lis_restricted(
            p,
            kappa + alpha * g.x[l - 1],
            kappa + alpha * g.x[l],
            kappa + gamma * g.y[l - 1],
            kappa + gamma * g.y[l],
        )
    return total


def upper_bound_lis(p: Permutation, spec: PathSpec, kappa, alpha, gamma) -> int:
    """Max over all refined paths of the closed endpoint-rectangle LIS sums."""
    if not (alpha > 0 and gamma > 0):
        raise ValueError("alpha and gamma must be positive")
    best = 0
    for path in enumerate_refined_paths(spec):
        g = geometry(path, spec)
        total = 0
        for l in range(1, len(g.x)):
            total += lis_restricted(
                p,
                kappa + alpha * g.a[l - 1],
                kappa + alpha * g.c[l],
                kappa + gamma * g.b[l - 1],
                kappa + gamma * g.d[l],
                closed_x=True,
                closed_y=True,
            )
        if total > best:
            best = total
    return best


def block_bounds(
    p: Permutation,
    boundaries: Sequence,
    covering: str = "lower-left",
) -> tuple[int, int]:
    """Diagonal-block lower bound and L-block upper bound for LIS.

    boundaries must increase from 0 to n. The diagonal blocks are
    (t_{s-1}, t_s]^2; the upper bound adds, per block, the two L-shaped
    side blocks, either toward the origin ("lower-left", the L1-proof
    covering) or away from it ("upper-right", the mirrored L2-proof
    covering).
    """
    bnd = list(boundaries)
    if len(bnd) < 2 or bnd[0] != 0 or bnd[-1] != p.n:
        raise ValueError("boundaries must run 0 = t_0 < ... < t_m = n")
    if any(bnd[i] >= bnd[i + 1] for i in range(len(bnd) - 1)):
        raise ValueError("boundaries must be strictly increasing")
    if covering not in ("lower-left", "upper-right"):
        raise ValueError("covering must be 'lower-left' or 'upper-right'")
    m = len(bnd) - 1
    lower = 0
    for s in range(1, m + 1):
        lower += lis_restricted(p, bnd[s - 1], bnd[s], bnd[s - 1], bnd[s])
    extra = 0
    if covering == "lower-left":
        for s in range(2, m + 1):
            extra += lis_restricted(p, 0, bnd[s - 1], bnd[s - 1], bnd[s])
            extra += lis_restricted(p, bnd[s - 1], bnd[s], 0, bnd[s - 1])
    else:
        for s in range(1, m):
            extra += lis_restricted(p, bnd[s], p.n, bnd[s - 1], bnd[s])
            extra += lis_restricted(p, bnd[s - 1], bnd[s], bnd[s], p.n)
    return lower, lower + extra
