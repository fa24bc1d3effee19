"""Monte Carlo checks of the forward and backward laws.

Forward: each replication runs N independent survival trials and records the
survivor count. Backward: each attempt draws an earlier cohort m from the
Poisson(a) prior, thins it with survival probability p, and keeps m when
exactly n survive; the kept draws are samples from the Bayes posterior.
Both empirical laws are compared with the analytic ones in
:mod:`cohortkit.distribution`.

Replication r reads its random numbers from streams keyed by (seed, r), so
results do not depend on chunking, thread count or kernel backend.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import pdtrc

from . import _backend
from .distribution import (
    DEFAULT_TAIL_EPSILON,
    ForwardDistribution,
    backward_moments,
    backward_pmf_table,
    backward_support,
    forward_pmf_table,
    make_backward_posterior,
)
from .errors import AcceptanceStarvation, DomainError

__all__ = [
    "SimConfig",
    "EmpiricalComparison",
    "simulate_forward",
    "simulate_backward_bayes",
    "total_variation",
    "poisson_inversion_table",
    "INVERSION_MAX_MEAN",
]

# Poisson draws use table inversion up to this mean, PTRS rejection above
INVERSION_MAX_MEAN = 30.0

_FORWARD_CHUNK_DRAWS = 1 << 22
_BACKWARD_CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``replications`` counts forward replications, or the number of accepted
    samples wanted by the backward sampler. The backward sampler stops after
    ``max_attempts`` and fails if fewer than ``min_accepted`` draws were kept.
    """

    seed: int = 0
    replications: int = 100_000
    tail_epsilon: float = DEFAULT_TAIL_EPSILON
    max_attempts: int = 10_000_000
    min_accepted: int = 1_000
    threads: Optional[int] = None
    backend: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.replications < 1:
            raise DomainError("replications must be at least 1")
        if not self.tail_epsilon > 0:
            raise DomainError("tail_epsilon must be positive")
        if self.max_attempts < 1 or self.min_accepted < 0:
            raise DomainError("invalid rejection budget")


@dataclass(frozen=True)
class EmpiricalComparison:
    empirical_mean: float
    empirical_variance: float
    analytic_mean: float
    analytic_variance: float
    total_variation_distance: float
    accepted_samples: int

    def to_report(self, cfg: SimConfig, parameters: dict) -> dict:
        report = asdict(self)
        report["seed"] = cfg.seed
        report["replications"] = cfg.replications
        report["parameters"] = dict(parameters)
        return report

    def to_json(self, cfg, parameters) -> str:
        return json.dumps(self.to_report(cfg, parameters))


def total_variation(empirical, analytic, atol=1e-9) -> float:
    """Half the L1 distance between two pmfs on the same finite support.

    Any analytic mass beyond the support must already be folded into a
    remainder bin by the caller.
    """
    e = np.asarray(empirical, dtype=np.float64)
    a = np.asarray(analytic, dtype=np.float64)
    if e.shape != a.shape or e.ndim != 1:
        raise DomainError("pmfs must be 1-d arrays over the same support")
    for name, arr in (("empirical", e), ("analytic", a)):
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DomainError(f"{name} pmf has negative or non-finite entries")
        if abs(math.fsum(arr) - 1.0) > atol:
            raise DomainError(f"{name} pmf is not normalized (sum {math.fsum(arr)!r})")
    return min(1.0, 0.5 * math.fsum(np.abs(e - a)))


def _threads(cfg):
    n = cfg.threads or os.cpu_count() or 1
    cap = os.environ.get("COHORTKIT_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise DomainError(f"COHORTKIT_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def _run_ordered(fn, ranges, threads):
    if threads == 1 or len(ranges) == 1:
        return [fn(r0, r1) for r0, r1 in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def _histogram_moments(support, hist):
    total = int(hist.sum())
    mean = float(np.dot(support, hist)) / total
    if total < 2:
        return mean, 0.0
    var = float(np.dot((support - mean) ** 2, hist)) / (total - 1)
    return mean, var


def simulate_forward(cfg: SimConfig, N, p) -> EmpiricalComparison:
    """Binomial survival scheme: ``cfg.replications`` runs of N Bernoulli(p) trials."""
    d = ForwardDistribution(N, p)
    N, p = d.trials, d.success_prob
    if N < 1:
        raise DomainError("N must be at least 1")
    kernels = _backend.get(cfg.backend)
    R = cfg.replications
    chunk = max(1, _FORWARD_CHUNK_DRAWS // N)
    ranges = [(r0, min(R, r0 + chunk)) for r0 in range(0, R, chunk)]
    parts = _run_ordered(lambda r0, r1: kernels.forward_counts(cfg.seed, N, p, r0, r1),
                         ranges, _threads(cfg))
    counts = np.concatenate(parts)

    hist = np.bincount(counts, minlength=N + 1)
    support = np.arange(N + 1, dtype=np.float64)
    mean, var = _histogram_moments(support, hist)
    tv = total_variation(hist / R, forward_pmf_table(d))
    return EmpiricalComparison(mean, var, d.mean, d.variance, tv, R)


def poisson_inversion_table(a):
    """Cumulative Poisson(a) probabilities for inversion, closed by +inf."""
    t = math.exp(-a)
    cdf = [t]
    k = 0
    while True:
        k += 1
        t *= a / k
        c = cdf[-1] + t
        if k > a and (t < 1e-17 * c or c == cdf[-1]):
            break
        cdf.append(c)
    cdf.append(math.inf)
    return np.array(cdf)


def _tail_cutoff(bp, start, tail_epsilon):
    # smallest m >= start with posterior mass beyond m below tail_epsilon
    k = start - bp.n
    while bp.lam > 0 and pdtrc(k, bp.lam) >= tail_epsilon:
        k += max(1, int(math.sqrt(bp.lam)))
    return bp.n + k


def simulate_backward_bayes(cfg: SimConfig, n, p) -> EmpiricalComparison:
    """Rejection sampling of the backward posterior from prior and thinning.

    Attempts run in order until ``cfg.replications`` draws are accepted or
    ``cfg.max_attempts`` is spent; only the first ``cfg.replications``
    accepted draws are used.
    """
    bp = make_backward_posterior(n, p)
    kernels = _backend.get(cfg.backend)
    cdf = poisson_inversion_table(bp.a) if bp.a <= INVERSION_MAX_MEAN else None
    threads = _threads(cfg)
    target = cfg.replications

    parts, accepted, start = [], 0, 0
    while accepted < target and start < cfg.max_attempts:
        stop = min(cfg.max_attempts, start + threads * _BACKWARD_CHUNK)
        ranges = [(r0, min(stop, r0 + _BACKWARD_CHUNK)) for r0 in range(start, stop, _BACKWARD_CHUNK)]
        for values, _ in _run_ordered(
            lambda r0, r1: kernels.backward_attempts(cfg.seed, bp.n, bp.p, bp.a, cdf, r0, r1),
            ranges, threads,
        ):
            parts.append(values)
            accepted += values.size
        start = stop

    samples = np.concatenate(parts)[:target] if parts else np.empty(0, dtype=np.int64)
    if samples.size < min(cfg.min_accepted, target):
        raise AcceptanceStarvation(int(samples.size), start, min(cfg.min_accepted, target))

    top = max(int(samples.max()), int(backward_support(bp)[-1]))
    top = _tail_cutoff(bp, top, cfg.tail_epsilon)
    support, pmf = backward_pmf_table(bp, np.arange(bp.n, top + 1))
    remainder = float(pdtrc(top - bp.n, bp.lam)) if bp.lam > 0 else 0.0
    hist = np.bincount(samples - bp.n, minlength=support.size)

    mean, var = _histogram_moments(support.astype(np.float64), hist)
    emp = np.append(hist / samples.size, 0.0)
    ana = np.append(pmf, remainder)
    tv = total_variation(emp, ana)
    a_mean, a_var = backward_moments(bp)
    return EmpiricalComparison(mean, var, a_mean, a_var, tv, int(samples.size))
