"""Experiment orchestration: LLN ratio measurements and lemma-level verifications.

Experiments are fully determined by an ExperimentConfig plus master seed:
replica r of size n runs on PCG64 seeded with SeedSequence((master_seed,
n, r)), replicas are merged by index (never completion order), and CSV
output is byte-identical across reruns. Even replicas start at the
identity, odd replicas at the anti-diagonal; the two groups' means must
agree within combined standard errors (the two-start mixing diagnostic)
or the result row is flagged.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _fast
from .density import DensityGrid, lln_constant, solve_density
from .models import (
    ModelKind,
    ModelParams,
    encode_perm_rows,
    exact_distribution,
    exact_lis_distribution,
    exact_sample_indices,
)
from .perm import Permutation, lis, lis_restricted
from .samplers import (
    ChainState,
    ResampleSpec,
    advance,
    replica_seed,
    resample_l2_many,
    uniform_perm,
)
from .stats import (
    TestFunction,
    bk_functions,
    displacement_tail_from_counts,
    integrate,
    mu_local,
    reference_integral,
    tv_distance,
)

REGIMES = ("l1_theta", "l1_intermediate", "l2_theta", "l2_intermediate", "uniform")


@dataclass(frozen=True)
class ExperimentConfig:
    """A named beta rule beta = c * n^(-p) over a list of sizes.

    Regime compatibility: l1_theta pins p = 1 (c is theta), l2_theta pins
    p = 2; l1_intermediate needs 0 < p < 1 and l2_intermediate 0 < p < 2,
    so beta -> 0 while n*beta (resp. n^2*beta) -> infinity. burn_in and
    thin default to 50*n and max(1, n // 10) when unset.
    """

    regime: str
    n_list: tuple[int, ...]
    beta_c: float = 1.0
    beta_p: float = 0.5
    replicas: int = 50
    burn_in: int | None = None
    burn_in_id: int | None = None
    thin: int | None = None
    samples: int = 20
    master_seed: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ValueError("n_list must hold positive sizes")
        if self.replicas < 1 or self.samples < 1:
            raise ValueError("replicas and samples must be >= 1")
        if self.regime == "l1_theta" and self.beta_p != 1:
            raise ValueError("l1_theta requires beta_p = 1 (beta = theta / n)")
        if self.regime == "l2_theta" and self.beta_p != 2:
            raise ValueError("l2_theta requires beta_p = 2 (beta = theta / n^2)")
        if self.regime == "l1_intermediate" and not 0 < self.beta_p < 1:
            raise ValueError("l1_intermediate requires 0 < p < 1 so beta -> 0 and n*beta -> inf")
        if self.regime == "l2_intermediate" and not 0 < self.beta_p < 2:
            raise ValueError("l2_intermediate requires 0 < p < 2 so beta -> 0 and n^2*beta -> inf")
        if self.regime != "uniform" and self.beta_c <= 0:
            raise ValueError("beta_c must be positive")

    def beta(self, n: int) -> float:
        if self.regime == "uniform":
            return 0.0
        return self.beta_c * float(n) ** (-self.beta_p)

    def kind(self) -> ModelKind | None:
        if self.regime.startswith("l1"):
            return ModelKind.L1
        if self.regime.startswith("l2"):
            return ModelKind.L2
        return None

    def burn_in_for(self, n: int, replica: int = 1) -> int:
        """Burn-in for a replica; even (identity-start) replicas may use a shorter one.

        Anti-diagonal starts relax much more slowly than identity starts
        in the L2 intermediate regime; burn_in_id shortens only the
        identity-start half, and the two-start diagnostic still gates the
        combination.
        """
        if replica % 2 == 0 and self.burn_in_id is not None:
            return self.burn_in_id
        return 50 * n if self.burn_in is None else self.burn_in

    def thin_for(self, n: int) -> int:
        return max(1, n // 10) if self.thin is None else self.thin


_CONFIG_FIELDS = {
    "regime": str,
    "n_list": lambda s: tuple(int(tok) for tok in s.replace(",", " ").split()),
    "beta_c": float,
    "beta_p": float,
    "replicas": int,
    "burn_in": int,
    "burn_in_id": int,
    "thin": int,
    "samples": int,
    "master_seed": int,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (# starts a comment)."""
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        fields[key] = _CONFIG_FIELDS[key](value.strip())
    if "regime" not in fields or "n_list" not in fields:
        raise ValueError("config must set at least regime and n_list")
    return ExperimentConfig(**fields)


def format_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"regime = {cfg.regime}",
        f"n_list = {','.join(str(n) for n in cfg.n_list)}",
        f"beta_c = {cfg.beta_c:.12g}",
        f"beta_p = {cfg.beta_p:.12g}",
        f"replicas = {cfg.replicas}",
    ]
    if cfg.burn_in is not None:
        lines.append(f"burn_in = {cfg.burn_in}")
    if cfg.burn_in_id is not None:
        lines.append(f"burn_in_id = {cfg.burn_in_id}")
    if cfg.thin is not None:
        lines.append(f"thin = {cfg.thin}")
    lines.append(f"samples = {cfg.samples}")
    lines.append(f"master_seed = {cfg.master_seed}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResultRow:
    regime: str
    n: int
    beta: float
    replicas: int
    samples: int
    mean_lis: float
    stderr_lis: float
    normalization: float
    norm_name: str
    ratio: float
    target_constant: float
    two_start_ok: bool


def _normalization(regime: str, n: int, beta: float) -> tuple[float, str]:
    if regime in ("l1_theta", "l2_theta", "uniform"):
        return math.sqrt(n), "sqrt(n)"
    if regime == "l1_intermediate":
        return n * math.sqrt(beta), "n*sqrt(beta)"
    return n * beta**0.25, "n*beta^(1/4)"


def target_constant(cfg: ExperimentConfig, density_grid: DensityGrid | None = None) -> float:
    """The regime's LLN constant; theta-regime targets come from the density solver."""
    if cfg.regime == "uniform":
        return 2.0
    if cfg.regime == "l1_intermediate":
        return math.sqrt(2.0)
    if cfg.regime == "l2_intermediate":
        return 2.0 * math.pi**-0.25
    if density_grid is None:
        density_grid = solve_density(cfg.kind(), cfg.beta_c)
    return lln_constant(density_grid)


def _replica_lis_mean(args) -> tuple[int, float]:
    regime, n, beta, burn_in, thin, samples, master_seed, r = args
    rng_seed = replica_seed(master_seed, n, r)
    if regime == "uniform":
        rng = np.random.default_rng(rng_seed)
        vals = [lis(uniform_perm(n, rng)) for _ in range(samples)]
        return r, float(np.mean(vals))
    kind = ModelKind.L1 if regime.startswith("l1") else ModelKind.L2
    start = "identity" if r % 2 == 0 else "antidiagonal"
    state = ChainState.init(ModelParams(n, beta, kind), rng_seed, start=start)
    advance(state, burn_in)
    vals = np.empty(samples)
    for k in range(samples):
        if k > 0:
            advance(state, thin)
        vals[k] = _fast.lis_patience(state.current)
    return r, float(vals.mean())


def _pool_map(fn, argslist, workers: int | None):
    if workers is None:
        workers = min(os.cpu_count() or 1, len(argslist))
    if workers <= 1 or len(argslist) <= 1:
        return [fn(a) for a in argslist]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, argslist, chunksize=1))


def run_lln_experiment(
    cfg: ExperimentConfig,
    workers: int | None = None,
    density_grid: DensityGrid | None = None,
) -> list[ResultRow]:
    """Per size: independent replica chains, replica-batched mean and stderr.

    Results are merged by (n, replica index), so the output is invariant
    under worker count and completion order.
    """
    target = target_constant(cfg, density_grid)
    rows = []
    for n in cfg.n_list:
        beta = cfg.beta(n)
        args = [
            (
                cfg.regime,
                n,
                beta,
                cfg.burn_in_for(n, r),
                cfg.thin_for(n),
                cfg.samples,
                cfg.master_seed,
                r,
            )
            for r in range(cfg.replicas)
        ]
        results = sorted(_pool_map(_replica_lis_mean, args, workers))
        means = np.array([m for _, m in results])
        mean = float(means.mean())
        stderr = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
        norm, norm_name = _normalization(cfg.regime, n, beta)
        two_start_ok = True
        if cfg.regime != "uniform" and cfg.replicas >= 4:
            g0, g1 = means[0::2], means[1::2]
            se = math.sqrt(g0.var(ddof=1) / len(g0) + g1.var(ddof=1) / len(g1))
            two_start_ok = bool(abs(g0.mean() - g1.mean()) <= 3.0 * se + 1e-12)
        rows.append(
            ResultRow(
                regime=cfg.regime,
                n=n,
                beta=beta,
                replicas=cfg.replicas,
                samples=cfg.samples,
                mean_lis=mean,
                stderr_lis=stderr,
                normalization=norm,
                norm_name=norm_name,
                ratio=mean / norm,
                target_constant=target,
                two_start_ok=two_start_ok,
            )
        )
    return rows


# -- lemma-level verifications ------------------------------------------------


@dataclass(frozen=True)
class StationarityReport:
    kind: ModelKind
    kernel: str
    n: int
    beta: float
    steps: int
    trials: int
    tv: float | None
    mc_noise: float | None

    def passes(self, threshold: float) -> bool | None:
        if self.tv is None:
            return None
        return self.tv < threshold


def verify_stationarity(
    kind: ModelKind,
    n: int,
    beta: float,
    kernel_steps: int,
    trials: int,
    seed: int = 0,
    resample: ResampleSpec | None = None,
    chunk: int = 100_000,
) -> StationarityReport:
    """Exact-start, k-step TV against the enumerated distribution (n <= 8).

    With `resample` set, applies the L2 resampling kernel instead of
    hit-and-run. mc_noise is the expected TV of a perfect sampler at this
    trial count (binomial noise floor).
    """
    params = ModelParams(n, beta, kind)
    dist = exact_distribution(params)
    kernel = "resample" if resample is not None else "hit-and-run"
    if resample is not None and kind is not ModelKind.L2:
        raise ValueError("the resampling kernel is an L2 kernel")
    if trials <= 0:
        return StationarityReport(kind, kernel, n, beta, kernel_steps, 0, None, None)
    rng = np.random.default_rng(np.random.SeedSequence((seed, n)))
    counts = np.zeros(dist.perms.shape[0], dtype=np.int64)
    done = 0
    is_l2 = kind is ModelKind.L2
    while done < trials:
        b = min(chunk, trials - done)
        starts = dist.perms[exact_sample_indices(dist, rng, b)].copy()
        if resample is not None:
            for _ in range(kernel_steps):
                starts = resample_l2_many(starts, resample, params, rng)
        elif kernel_steps > 0:
            u = rng.random((b, kernel_steps, 2 * n))
            _fast.har_batch(starts, beta, is_l2, u)
        keys = encode_perm_rows(starts)
        counts += np.bincount(np.searchsorted(dist._keys, keys), minlength=counts.shape[0])
        done += b
    emp = counts / trials
    tv = float(0.5 * np.abs(emp - dist.probs).sum())
    noise = float(
        0.5 * np.sqrt(2.0 / (math.pi * trials)) * np.sqrt(dist.probs * (1 - dist.probs)).sum()
    )
    return StationarityReport(kind, kernel, n, beta, kernel_steps, trials, tv, noise)


def chain_lis_tv(
    kind: ModelKind,
    n: int,
    beta: float,
    burn_in: int,
    samples: int,
    thin: int,
    seed: int = 0,
) -> float:
    """TV between chain-sampled LIS frequencies and the exact LIS law (n <= 8)."""
    dist_lis = exact_lis_distribution(exact_distribution(ModelParams(n, beta, kind)))
    state = ChainState.init(ModelParams(n, beta, kind), seed)
    advance(state, burn_in)
    counts = np.zeros(n + 1, dtype=np.int64)
    for k in range(samples):
        if k > 0:
            advance(state, thin)
        counts[_fast.lis_patience(state.current)] += 1
    return tv_distance(counts / samples, dist_lis)


@dataclass(frozen=True)
class DetailedBalanceCheck:
    tau: tuple[int, ...]
    tau_prime: tuple[int, ...]
    log_ratio_emp: float
    log_ratio_theory: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.log_ratio_emp - self.log_ratio_theory) / self.stderr


def verify_detailed_balance(
    tau: Permutation,
    tau_prime: Permutation,
    spec: ResampleSpec,
    params: ModelParams,
    trials: int,
    seed: int = 0,
) -> DetailedBalanceCheck:
    """Monte Carlo check of K(tau,tau')/K(tau',tau) = exp(2 beta sum (i_t - t0) dsigma).

    tau and tau' must agree outside set_x x set_y; the empirical transition
    frequencies are compared on the log scale with delta-method errors.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    hits = []
    for a, b in ((tau, tau_prime), (tau_prime, tau)):
        starts = np.repeat(a.values[None, :], trials, axis=0)
        outs = resample_l2_many(starts, spec, params, rng)
        hit = int(np.all(outs == b.values[None, :], axis=1).sum())
        if hit == 0:
            raise RuntimeError("no transitions observed; increase trials or pick closer states")
        hits.append(hit)
    p1, p2 = hits[0] / trials, hits[1] / trials
    i_ts = [i for i in sorted(spec.set_x) if tau(i) in spec.set_y]
    theory = 2.0 * params.beta * sum((i - spec.t0) * (tau_prime(i) - tau(i)) for i in i_ts)
    stderr = math.sqrt((1 - p1) / hits[0] + (1 - p2) / hits[1])
    return DetailedBalanceCheck(
        tau.as_tuple(), tau_prime.as_tuple(), math.log(p1 / p2), theory, stderr
    )


@dataclass(frozen=True)
class PathsReport:
    trials: int
    violations: list
    seed: int

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_paths(
    trials: int,
    n_max: int = 60,
    t_max: int = 3,
    k0_max: int = 2,
    seed: int = 0,
) -> PathsReport:
    """Random-instance sandwich check: lower <= restricted LIS <= upper for all paths."""
    from fractions import Fraction

    from .paths import PathSpec, enumerate_refined_paths, geometry, lower_bound_lis, upper_bound_lis

    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    violations = []
    for t in range(trials):
        n = int(rng.integers(1, n_max + 1))
        perm = uniform_perm(n, rng)
        t1 = int(rng.integers(2, t_max + 1))
        t2 = int(rng.integers(2, t_max + 1))
        k0 = int(rng.integers(1, k0_max + 1))
        if rng.random() < 0.5:
            spec = PathSpec.unit_square(t1, t2, k0)
        else:
            denom = int(rng.integers(2, 5))
            lo1, hi1 = sorted(rng.choice(denom + 1, size=2, replace=False))
            lo2, hi2 = sorted(rng.choice(denom + 1, size=2, replace=False))
            spec = PathSpec(
                Fraction(int(lo1), denom),
                Fraction(int(hi1), denom),
                Fraction(int(lo2), denom),
                Fraction(int(hi2), denom),
                t1,
                t2,
                k0,
            )
        kappa = int(rng.integers(-2, 3))
        alpha = gamma = n
        exact = lis_restricted(
            perm,
            kappa + alpha * spec.a1,
            kappa + alpha * spec.a2,
            kappa + gamma * spec.b1,
            kappa + gamma * spec.b2,
        )
        upper = upper_bound_lis(perm, spec, kappa, alpha, gamma)
        if upper < exact:
            violations.append((t, "upper", perm.as_tuple(), spec, kappa))
            continue
        for path in enumerate_refined_paths(spec):
            if lower_bound_lis(perm, path, spec, kappa, alpha, gamma) > exact:
                violations.append((t, "lower", perm.as_tuple(), spec, kappa, path))
                break
    return PathsReport(trials, violations, seed)


@dataclass(frozen=True)
class LocalMeasureReport:
    kind: ModelKind
    n: int
    t0: int
    K: float
    fn_count: int
    replicas: int
    betas: tuple[float, ...]
    discrepancies: tuple[float, ...]  # mean over replicas of sup_f |emp - ref|

    @property
    def decreasing(self) -> bool:
        return all(
            self.discrepancies[i + 1] < self.discrepancies[i]
            for i in range(len(self.discrepancies) - 1)
        )


def _local_measure_replica(args) -> tuple[int, float]:
    kind_val, n, beta, t0, burn_in, master_seed, r, fns, refs = args
    kind = ModelKind(kind_val)
    state = ChainState.init(
        ModelParams(n, beta, kind),
        replica_seed(master_seed, n, r),
        start="identity" if r % 2 == 0 else "antidiagonal",
    )
    advance(state, burn_in)
    m = mu_local(state.permutation(), t0, beta, kind)
    sup = 0.0
    for f, ref in zip(fns, refs):
        sup = max(sup, abs(integrate(m, f) - ref))
    return r, sup


def verify_local_measure(
    kind: ModelKind,
    n: int,
    betas: Sequence[float],
    t0: int,
    K: float,
    fn_count: int,
    replicas: int,
    burn_in: int,
    seed: int = 0,
    workers: int | None = None,
) -> LocalMeasureReport:
    """Mean over replicas of sup_f |int f dmu_{n,t0} - int f dmu| per beta.

    t0 must leave a K * (band width) margin to both ends (the bulk
    condition); the report records whether the discrepancy decreases
    along the given beta sequence.
    """
    for beta in betas:
        band = 1.0 / beta if kind is ModelKind.L1 else beta**-0.5
        if not (K * band + 1 <= t0 <= n - K * band):
            raise ValueError(f"t0={t0} outside the bulk for beta={beta} (margin {K * band:.0f})")
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    fns = bk_functions(K, fn_count, rng)
    # reference integrals do not depend on beta; evaluate once per function
    refs = [reference_integral(f, kind) for f in fns]
    discrepancies = []
    for beta in betas:
        args = [
            (kind.value, n, beta, t0, burn_in, seed, r, fns, refs)
            for r in range(replicas)
        ]
        sups = [s for _, s in sorted(_pool_map(_local_measure_replica, args, workers))]
        discrepancies.append(float(np.mean(sups)))
    return LocalMeasureReport(
        kind, n, t0, K, fn_count, replicas, tuple(betas), tuple(discrepancies)
    )


@dataclass(frozen=True)
class DisplacementReport:
    kind: ModelKind
    n: int
    beta: float
    index: int
    samples: int
    u_values: tuple[float, ...]
    empirical: tuple[float, ...]
    bounds: tuple[float, ...]       # 3 exp(-u/4)
    slacks: tuple[float, ...]       # 3 * Monte Carlo standard error

    @property
    def ok(self) -> bool:
        return all(e <= b + s for e, b, s in zip(self.empirical, self.bounds, self.slacks))


def _displacement_replica(args) -> tuple[int, np.ndarray]:
    kind_val, n, beta, index, burn_in, thin, samples, master_seed, r = args
    kind = ModelKind(kind_val)
    state = ChainState.init(
        ModelParams(n, beta, kind),
        replica_seed(master_seed, n, r),
        start="identity" if r % 2 == 0 else "antidiagonal",
    )
    advance(state, burn_in)
    counts = np.empty(samples, dtype=np.int64)
    for k in range(samples):
        if k > 0:
            advance(state, thin)
        counts[k] = np.count_nonzero(state.current[:index] >= index + 1)
    return r, counts


def verify_displacement(
    kind: ModelKind,
    n: int,
    beta: float,
    index: int,
    u_values: Sequence[float],
    replicas: int,
    samples_per_replica: int,
    burn_in: int,
    thin: int,
    seed: int = 0,
    workers: int | None = None,
) -> DisplacementReport:
    """Empirical tails of |D_i| against the 3 exp(-u/4) bound plus 3 SE of slack."""
    args = [
        (kind.value, n, beta, index, burn_in, thin, samples_per_replica, seed, r)
        for r in range(replicas)
    ]
    chunks = [c for _, c in sorted(_pool_map(_displacement_replica, args, workers))]
    counts = np.concatenate(chunks)
    m = counts.shape[0]
    emp, bounds, slacks = [], [], []
    for u in u_values:
        p = float(np.count_nonzero(counts >= u) / m)
        emp.append(p)
        bounds.append(3.0 * math.exp(-u / 4.0))
        slacks.append(3.0 * math.sqrt(max(p * (1 - p), 1.0 / m) / m))
    return DisplacementReport(
        kind, n, beta, index, m, tuple(float(u) for u in u_values),
        tuple(emp), tuple(bounds), tuple(slacks),
    )
