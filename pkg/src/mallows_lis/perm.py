"""Permutations, restrictions to rectangles, LIS, and symmetry transforms.

All public interfaces are 1-based: a permutation of size n maps places
1..n to values 1..n, and sigma(i) means ``p.values[i - 1]``. Instances are
immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from ._fast import lis_in_box, lis_patience, lis_quadratic

#: slack used when interval bounds arrive as floats; rational bounds are exact
FLOAT_BOUNDARY_SLACK = 1e-12

BRUTEFORCE_MAX = 22


class Permutation:
    """A bijection of {1..n} in one-line notation."""

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[int] | np.ndarray, validate: bool = True):
        arr = np.asarray(values, dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError("a permutation needs at least one entry")
        if validate:
            n = arr.shape[0]
            if arr.min() < 1 or arr.max() > n:
                raise ValueError("entries must lie in 1..n")
            if np.bincount(arr, minlength=n + 1)[1:].max() != 1:
                raise ValueError("entries must form a bijection of 1..n")
        arr = arr.copy()
        arr.setflags(write=False)
        self._values = arr

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Read-only one-line array: values[i-1] = sigma(i)."""
        return self._values

    def __call__(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise IndexError(f"place {i} out of range 1..{self.n}")
        return int(self._values[i - 1])

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash(self.as_tuple())

    def __repr__(self) -> str:
        return f"Permutation({list(map(int, self._values))})"

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(map(int, self._values))

    def as_partial(self) -> "PartialBijection":
        return PartialBijection(tuple((i + 1, int(v)) for i, v in enumerate(self._values)))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(1, n + 1), validate=False)

    @classmethod
    def antidiagonal(cls, n: int) -> "Permutation":
        """The reversal i -> n+1-i, i.e. reverse_complement of the identity."""
        return cls(np.arange(n, 0, -1), validate=False)

    def to_line(self) -> str:
        """Serialize as ``sigma(1) sigma(2) ... sigma(n)``."""
        return " ".join(str(int(v)) for v in self._values)

    @classmethod
    def from_line(cls, line: str) -> "Permutation":
        return cls([int(tok) for tok in line.split()])


@dataclass(frozen=True)
class PartialBijection:
    """A bijection between two subsets of [n], stored as sorted (place, value) pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        doms = [p[0] for p in self.pairs]
        vals = [p[1] for p in self.pairs]
        if any(doms[i] >= doms[i + 1] for i in range(len(doms) - 1)):
            raise ValueError("domain points must be strictly increasing")
        if len(set(vals)) != len(vals):
            raise ValueError("values must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.pairs)

    def value_sequence(self) -> tuple[int, ...]:
        return tuple(p[1] for p in self.pairs)


@dataclass(frozen=True)
class PointSet:
    """A weighted planar point set, one point per (place, value) pair."""

    points: tuple[tuple[float, float], ...]
    weight: float = 1.0

    @property
    def total_mass(self) -> float:
        return self.weight * len(self.points)


def graph_points(p: Permutation) -> PointSet:
    """The graph S(sigma) = {(i, sigma(i))} with unit weights."""
    return PointSet(tuple((float(i + 1), float(v)) for i, v in enumerate(p.values)))


def lis(p: Permutation) -> int:
    """LIS length via patience sorting, O(n log n)."""
    return int(lis_patience(p.values))


def lis_dp(p: Permutation | PartialBijection) -> int:
    """Independent O(n^2) dynamic-programming oracle for LIS."""
    if isinstance(p, Permutation):
        return int(lis_quadratic(p.values))
    return int(lis_quadratic(np.asarray(p.value_sequence(), dtype=np.int64)))


def _count_increasing(vals: Sequence[int], start: int, floor: int) -> int:
    best = 0
    for k in range(start, len(vals)):
        if vals[k] > floor:
            got = 1 + _count_increasing(vals, k + 1, vals[k])
            if got > best:
                best = got
    return best


def lis_bruteforce(b: PartialBijection | Permutation) -> int:
    """Exhaustive LIS oracle: walks every increasing subsequence.

    Guarded at 22 elements; the empty bijection has LIS 0.
    """
    if isinstance(b, Permutation):
        b = b.as_partial()
    if len(b) > BRUTEFORCE_MAX:
        raise ValueError(f"brute-force oracle limited to {BRUTEFORCE_MAX} elements, got {len(b)}")
    return _count_increasing(b.value_sequence(), 0, 0)


def inverse(p: Permutation) -> Permutation:
    inv = np.empty(p.n, dtype=np.int64)
    inv[p.values - 1] = np.arange(1, p.n + 1)
    return Permutation(inv, validate=False)


def reverse_complement(p: Permutation) -> Permutation:
    """The involution sigma_bar(i) = n+1-sigma(n+1-i); preserves LIS."""
    n = p.n
    return Permutation(n + 1 - p.values[::-1], validate=False)


def displacement_count(p: Permutation, i: int) -> int:
    """|{j <= i : sigma(j) >= i+1}|, the crossing count of level i."""
    if not 1 <= i <= p.n:
        raise IndexError(f"index {i} out of range 1..{p.n}")
    return int(np.count_nonzero(p.values[:i] >= i + 1))


def displacement_count_primed(p: Permutation, i: int) -> int:
    """|{j >= i+1 : sigma(j) <= i}|, computed independently of displacement_count."""
    if not 1 <= i <= p.n:
        raise IndexError(f"index {i} out of range 1..{p.n}")
    return int(np.count_nonzero(p.values[i:] <= i))


def _lower_open_bound(lo) -> int:
    # smallest integer i with i > lo
    if isinstance(lo, Rational):
        return math.floor(lo) + 1
    return math.floor(lo + FLOAT_BOUNDARY_SLACK * max(1.0, abs(lo))) + 1


def _lower_closed_bound(lo) -> int:
    # smallest integer i with i >= lo
    if isinstance(lo, Rational):
        return math.ceil(lo)
    return math.ceil(lo - FLOAT_BOUNDARY_SLACK * max(1.0, abs(lo)))


def _upper_closed_bound(hi) -> int:
    # largest integer i with i <= hi
    if isinstance(hi, Rational):
        return math.floor(hi)
    return math.floor(hi + FLOAT_BOUNDARY_SLACK * max(1.0, abs(hi)))


def interval_int_range(lo, hi, closed_left: bool) -> tuple[int, int]:
    """Integers inside (lo, hi] or [lo, hi] as an inclusive range (may be empty).

    Rational bounds (int/Fraction) are resolved exactly; float bounds get a
    1e-12 relative slack so grid values sitting on a boundary do not flip
    sides between the half-open and closed computations.
    """
    left = _lower_closed_bound(lo) if closed_left else _lower_open_bound(lo)
    return left, _upper_closed_bound(hi)


def restrict(
    p: Permutation,
    x_lo,
    x_hi,
    y_lo,
    y_hi,
    closed_x: bool = False,
    closed_y: bool = False,
) -> PartialBijection:
    """Restriction sigma|_{X x Y} to a rectangle of places and values.

    Intervals default to left-open right-closed, matching the dyadic
    rectangles used throughout; pass closed_x/closed_y for [lo, hi].
    """
    if x_lo > x_hi or y_lo > y_hi:
        raise ValueError("interval bounds must be ordered")
    ix_lo, ix_hi = interval_int_range(x_lo, x_hi, closed_x)
    iy_lo, iy_hi = interval_int_range(y_lo, y_hi, closed_y)
    ix_lo = max(ix_lo, 1)
    ix_hi = min(ix_hi, p.n)
    pairs = []
    for i in range(ix_lo, ix_hi + 1):
        v = int(p.values[i - 1])
        if iy_lo <= v <= iy_hi:
            pairs.append((i, v))
    return PartialBijection(tuple(pairs))


def lis_restricted(p: Permutation, x_lo, x_hi, y_lo, y_hi, closed_x=False, closed_y=False) -> int:
    """LIS of restrict(...) without building the pair list."""
    if x_lo > x_hi or y_lo > y_hi:
        return 0
    ix_lo, ix_hi = interval_int_range(x_lo, x_hi, closed_x)
    iy_lo, iy_hi = interval_int_range(y_lo, y_hi, closed_y)
    return int(lis_in_box(p.values, ix_lo, ix_hi, iy_lo, iy_hi))
