"""Markov kernels for the L1 and L2 models: hit-and-run and resampling.

Each hit-and-run step draws one threshold per place and then places the
symbols greedily, each at a uniform choice among the still-eligible
places. For the L1 model symbols go n..1 subject to sigma'(i) <= b_i; for
the L2 model symbols go 1..n subject to sigma'(i) >= b_i. The fast path
keeps the eligible places in a Fenwick tree (O(n log n) per step); a
plain O(n^2) reference placement consuming identical randomness is kept
for cross-checking.

Randomness: every step consumes exactly 2n doubles from the chain's
numpy Generator (n thresholds in place order, then n placement picks in
symbol order), so a chain is exactly replayable from its seed. Replica r
of an experiment uses PCG64 seeded with SeedSequence((master_seed, n, r)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _fast
from .models import ModelKind, ModelParams
from .perm import Permutation

#: doubles drawn per pregenerated block in the chunked chain driver
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class StepTrace:
    """Diagnostics of one hit-and-run step: thresholds and symbol placements."""

    b: np.ndarray           # thresholds b_i, place order
    placements: np.ndarray  # placements[j-1] = place that received symbol j


@dataclass(frozen=True)
class ResampleSpec:
    """Inputs of the L2 resampling kernel: column set, row set, offset t0."""

    set_x: frozenset[int]
    set_y: frozenset[int]
    t0: float

    def __init__(self, set_x: Iterable[int], set_y: Iterable[int], t0: float):
        object.__setattr__(self, "set_x", frozenset(int(i) for i in set_x))
        object.__setattr__(self, "set_y", frozenset(int(j) for j in set_y))
        object.__setattr__(self, "t0", float(t0))
        if not self.set_x or not self.set_y:
            raise ValueError("set_x and set_y must be nonempty")
        if not self.t0 < min(self.set_x):
            raise ValueError("t0 must lie strictly below min(set_x)")


@dataclass
class ChainState:
    """A running chain: single-owner, mutated in place by the kernels."""

    params: ModelParams
    current: np.ndarray
    rng: np.random.Generator
    step_count: int = 0

    @classmethod
    def init(
        cls,
        params: ModelParams,
        seed,
        start: str | Permutation = "identity",
    ) -> "ChainState":
        rng = np.random.default_rng(seed)
        if isinstance(start, Permutation):
            if start.n != params.n:
                raise ValueError("start permutation size mismatch")
            cur = start.values.copy()
        elif start == "identity":
            cur = np.arange(1, params.n + 1, dtype=np.int64)
        elif start == "antidiagonal":
            cur = np.arange(params.n, 0, -1, dtype=np.int64)
        else:
            raise ValueError(f"unknown start {start!r}")
        return cls(params, cur, rng)

    def permutation(self) -> Permutation:
        return Permutation(self.current, validate=False)


def replica_seed(master_seed: int, n: int, replica: int) -> np.random.SeedSequence:
    """Documented replica fan-out: SeedSequence keyed by (master_seed, n, replica)."""
    return np.random.SeedSequence((int(master_seed), int(n), int(replica)))


def _step(state: ChainState, is_l2: bool) -> StepTrace:
    n = state.params.n
    u = state.rng.random((1, 2 * n))
    thresh_logs = np.log1p(-u[0, :n])
    out = np.empty(n, np.int64)
    b_out = np.empty(n, np.float64)
    tree, head, nxt = _fast.placement_scratch(n)
    if is_l2:
        _fast.har_l2_step(state.current, state.params.beta, thresh_logs, u[0, n:], out, b_out, tree, head, nxt)
    else:
        _fast.har_l1_step(state.current, state.params.beta, thresh_logs, u[0, n:], out, b_out, tree, head, nxt)
    placements = np.empty(n, np.int64)
    placements[out - 1] = np.arange(1, n + 1)
    state.current[:] = out
    state.step_count += 1
    if __debug__:
        if is_l2:
            assert np.all(out >= b_out), "L2 contract sigma'(i) >= b_i violated"
        else:
            assert np.all(out <= b_out), "L1 contract sigma'(i) <= b_i violated"
        assert np.bincount(out, minlength=n + 1)[1:].max() == 1, "output not a bijection"
    return StepTrace(b=b_out, placements=placements)


def har_step_l1(state: ChainState, return_trace: bool = False):
    """One hit-and-run step for the L1 model; stationary law is the L1 Mallows measure."""
    if state.params.kind is not ModelKind.L1:
        raise ValueError("har_step_l1 requires an L1 chain")
    trace = _step(state, is_l2=False)
    return (state, trace) if return_trace else state


def har_step_l2(state: ChainState, return_trace: bool = False):
    """One hit-and-run step for the L2 model; stationary law is the L2 Mallows measure."""
    if state.params.kind is not ModelKind.L2:
        raise ValueError("har_step_l2 requires an L2 chain")
    trace = _step(state, is_l2=True)
    return (state, trace) if return_trace else state


def advance(state: ChainState, steps: int) -> ChainState:
    """Advance `steps` kernel steps using the chunked fast driver."""
    n = state.params.n
    is_l2 = state.params.kind is ModelKind.L2
    chunk_max = max(1, _CHUNK_BUDGET // (2 * n))
    remaining = steps
    while remaining > 0:
        chunk = min(chunk_max, remaining)
        u = state.rng.random((chunk, 2 * n))
        _fast.har_run(state.current, state.params.beta, is_l2, u)
        remaining -= chunk
    state.step_count += steps
    return state


def run_chain(
    state: ChainState,
    burn_in: int,
    samples: int,
    thin: int,
    observer: Callable[[ChainState], object] | None = None,
) -> list:
    """Burn in, then record observer(state) every `thin` steps, `samples` times.

    Deterministic given the state's seed. The default observer returns
    (step_count, lis, energy) tuples matching the chain CSV schema.
    """
    if burn_in < 0 or samples < 0 or thin < 0:
        raise ValueError("counts must be nonnegative")
    if observer is None:
        from .models import energy
        from .perm import lis

        def observer(s: ChainState):
            p = s.permutation()
            return (s.step_count, lis(p), energy(s.params.kind, p))

    if samples == 0:
        return []
    advance(state, burn_in)
    out = []
    for k in range(samples):
        if k > 0 and thin > 0:
            advance(state, thin)
        out.append(observer(state))
    return out


def resample_l2(
    p: Permutation,
    spec: ResampleSpec,
    params: ModelParams,
    rng: np.random.Generator,
) -> Permutation:
    """One application of the L2 resampling kernel.

    Redraws sigma on the places i in set_x with sigma(i) in set_y (thresholds
    b_t = sigma(i_t) + log(u_t)/(2 beta (i_t - t0))), fixing every other
    coordinate. Preserves the L2 Mallows measure.
    """
    if params.kind is not ModelKind.L2:
        raise ValueError("resample_l2 requires L2 params")
    if p.n != params.n:
        raise ValueError("permutation size mismatch")
    in_sx, in_sy, kmax = _spec_tables(spec, params.n)
    u = rng.random((1, 2 * kmax)) if kmax > 0 else np.zeros((1, 0))
    perms = p.values[None, :].copy()
    outs = np.empty_like(perms)
    if kmax > 0:
        _fast.resample_l2_batch(perms, outs, params.beta, in_sx, in_sy, spec.t0, kmax, u)
    else:
        outs[:] = perms
    return Permutation(outs[0], validate=False)


def _spec_tables(spec: ResampleSpec, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    in_sx = np.zeros(n + 1, dtype=np.bool_)
    in_sy = np.zeros(n + 1, dtype=np.bool_)
    for i in spec.set_x:
        if 1 <= i <= n:
            in_sx[i] = True
    for j in spec.set_y:
        if 1 <= j <= n:
            in_sy[j] = True
    kmax = min(int(in_sx.sum()), int(in_sy.sum()))
    return in_sx, in_sy, kmax


def resample_l2_many(
    starts: np.ndarray,
    spec: ResampleSpec,
    params: ModelParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Apply the resampling kernel independently to each row of a (B, n) batch."""
    in_sx, in_sy, kmax = _spec_tables(spec, params.n)
    outs = np.empty_like(starts)
    if kmax == 0:
        outs[:] = starts
        return outs
    u = rng.random((starts.shape[0], 2 * kmax))
    _fast.resample_l2_batch(starts, outs, params.beta, in_sx, in_sy, spec.t0, kmax, u)
    return outs


def uniform_perm(n: int, rng: np.random.Generator) -> Permutation:
    """Exact uniform draw (Fisher-Yates shuffle under the hood)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Permutation(rng.permutation(n).astype(np.int64) + 1, validate=False)


# -- reference implementations (documented O(n^2)), same randomness layout --


def har_step_reference(
    values: np.ndarray,
    beta: float,
    kind: ModelKind,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Plain-Python hit-and-run step consuming the same 2n uniforms as the fast path.

    Returns (new_values, thresholds); byte-identical output to the Fenwick
    implementation on the same uniforms, used as a cross-check.
    """
    n = values.shape[0]
    u_thresh, u_place = uniforms[:n], uniforms[n:]
    places = list(range(1, n + 1))
    b = np.empty(n, dtype=np.float64)
    if kind is ModelKind.L1:
        for idx in range(n):
            i = idx + 1
            disp = max(int(values[idx]) - i, 0)
            b[idx] = i + disp - np.log1p(-u_thresh[idx]) / (2.0 * beta)
        symbol_order = range(n, 0, -1)

        def eligible(i, j):
            return b[i - 1] >= j

    else:
        for idx in range(n):
            i = idx + 1
            b[idx] = values[idx] + np.log1p(-u_thresh[idx]) / (2.0 * beta * i)
        symbol_order = range(1, n + 1)

        def eligible(i, j):
            return b[i - 1] <= j

    out = np.empty(n, dtype=np.int64)
    for t, j in enumerate(symbol_order):
        elig = [i for i in places if eligible(i, j)]
        r = min(int(u_place[t] * len(elig)), len(elig) - 1)
        choice = elig[r]
        places.remove(choice)
        out[choice - 1] = j
    return out, b
