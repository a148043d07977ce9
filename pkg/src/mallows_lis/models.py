"""Energies, weights, and exact distributions for small n.

The exact enumeration (n <= 8) is the ground-truth oracle behind every
sampler test: weight arithmetic happens in log-space with max-subtraction
so beta * energy never leaves the float exponent range.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .perm import Permutation

ENUMERATION_MAX = 8


class ModelKind(Enum):
    L1 = "l1"
    L2 = "l2"


@dataclass(frozen=True)
class ModelParams:
    n: int
    beta: float
    kind: ModelKind

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def energy(kind: ModelKind, p: Permutation) -> float:
    """H(sigma, Id) = sum |sigma(i)-i| for L1, sum (sigma(i)-i)^2 for L2."""
    disp = p.values - np.arange(1, p.n + 1)
    if kind is ModelKind.L1:
        return float(np.abs(disp).sum())
    return float((disp * disp).sum())


def energy_of_values(kind: ModelKind, values: np.ndarray) -> np.ndarray:
    """Vectorized energy for a (B, n) batch of one-line arrays."""
    disp = values - np.arange(1, values.shape[-1] + 1)
    if kind is ModelKind.L1:
        return np.abs(disp).sum(axis=-1).astype(np.float64)
    return (disp * disp).sum(axis=-1).astype(np.float64)


def log_weight(params: ModelParams, p: Permutation) -> float:
    return -params.beta * energy(params.kind, p)


@dataclass(frozen=True)
class ExactDistribution:
    params: ModelParams
    perms: np.ndarray          # (n!, n) int64, lexicographic order
    probs: np.ndarray          # (n!,) float64, sums to 1
    energies: np.ndarray       # (n!,) float64
    log_z: float
    _cdf: np.ndarray = field(repr=False, default=None)
    _keys: np.ndarray = field(repr=False, default=None)

    def prob_of(self, p: Permutation) -> float:
        return float(self.probs[self.index_of(p)])

    def index_of(self, p: Permutation) -> int:
        key = encode_perm_rows(p.values[None, :])[0]
        idx = int(np.searchsorted(self._keys, key))
        if idx >= self._keys.shape[0] or self._keys[idx] != key:
            raise KeyError(f"permutation {p} not of size {self.params.n}")
        return idx

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(map(int, row)): float(pr) for row, pr in zip(self.perms, self.probs)}

    def to_csv(self) -> str:
        """Columns perm (one-line string), prob, energy."""
        buf = io.StringIO()
        buf.write("perm,prob,energy\n")
        for row, pr, en in zip(self.perms, self.probs, self.energies):
            line = " ".join(str(int(v)) for v in row)
            buf.write(f"{line},{pr:.12g},{en:.12g}\n")
        return buf.getvalue()


def encode_perm_rows(values: np.ndarray) -> np.ndarray:
    """Injective int64 keys for (B, n) one-line arrays, n <= 8.

    First place gets the highest power so lexicographic row order matches
    numeric key order.
    """
    n = values.shape[-1]
    powers = (np.int64(n + 1)) ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return values.astype(np.int64) @ powers


def exact_distribution(params: ModelParams) -> ExactDistribution:
    """Enumerate S_n (n <= 8) and normalize exp(-beta * energy) in log-space."""
    n = params.n
    if n > ENUMERATION_MAX:
        raise ValueError(f"exact enumeration capped at n = {ENUMERATION_MAX}, got {n}")
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)
    energies = energy_of_values(params.kind, perms)
    logw = -params.beta * energies
    shift = logw.max()
    w = np.exp(logw - shift)
    total = w.sum()
    probs = w / total
    log_z = float(shift + math.log(total))
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    keys = encode_perm_rows(perms)  # already sorted: lexicographic rows => sorted keys
    return ExactDistribution(params, perms, probs, energies, log_z, cdf, keys)


def exact_sample(dist: ExactDistribution, rng: np.random.Generator) -> Permutation:
    """Inverse-CDF draw from the exact distribution."""
    return Permutation(dist.perms[exact_sample_indices(dist, rng, 1)[0]], validate=False)


def exact_sample_indices(dist: ExactDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    return np.searchsorted(dist._cdf, rng.random(size), side="right")


def exact_lis_distribution(dist: ExactDistribution) -> np.ndarray:
    """Push-forward of the exact law through LIS: index k holds P(LIS = k)."""
    from ._fast import lis_batch

    out = np.empty(dist.perms.shape[0], dtype=np.int64)
    lis_batch(dist.perms, out)
    probs = np.zeros(dist.params.n + 1)
    np.add.at(probs, out, dist.probs)
    return probs
