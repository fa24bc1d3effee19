"""Exact laws of the projected counts.

Forward: the survivors of N independent persons with survival probability p
are Binomial(N, p).

Backward: observing n survivors, with a Poisson(a) prior on the earlier
cohort and binomial thinning as the likelihood, the posterior of the earlier
cohort is n plus an independent Poisson(lambda), lambda = a (1 - p). Matching
prior and posterior means fixes a = n / p. ``posterior_oracle`` evaluates the
same posterior by brute-force Bayes summation, independently of that algebra.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from numbers import Integral

import numpy as np
from scipy.special import gammaln, xlogy

from . import _backend
from .errors import DomainError

__all__ = [
    "ForwardDistribution",
    "BackwardPosterior",
    "forward_pmf",
    "forward_pmf_table",
    "make_backward_posterior",
    "backward_pmf",
    "backward_pmf_table",
    "backward_support",
    "backward_pgf",
    "backward_moments",
    "posterior_oracle",
    "posterior_oracle_table",
    "DEFAULT_TAIL_EPSILON",
]

DEFAULT_TAIL_EPSILON = 1e-15


def _as_count(value, what):
    if isinstance(value, bool) or not isinstance(value, (Integral, float, np.floating)):
        raise DomainError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, (float, np.floating)):
        if not float(value).is_integer():
            raise DomainError(f"{what} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise DomainError(f"{what} must be nonnegative, got {value}")
    return value


def _as_integer(value, what):
    # like _as_count but allows negatives (pmf arguments)
    if isinstance(value, bool) or not isinstance(value, (Integral, float, np.floating)):
        raise DomainError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, (float, np.floating)) and not float(value).is_integer():
        raise DomainError(f"{what} must be an integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class ForwardDistribution:
    """Binomial law of survivors: ``trials`` persons each surviving with ``success_prob``."""

    trials: int
    success_prob: float

    def __post_init__(self):
        object.__setattr__(self, "trials", _as_count(self.trials, "trials"))
        p = float(self.success_prob)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"success probability must lie in [0, 1], got {p}")
        object.__setattr__(self, "success_prob", p)

    @property
    def mean(self):
        return self.trials * self.success_prob

    @property
    def variance(self):
        return self.trials * self.success_prob * (1.0 - self.success_prob)


# Stirling-series error lgamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi), n = 0..15
_STIRLERR_TABLE = np.array([
    0.0,
    0.08106146679532726,
    0.0413406959554093,
    0.02767792568499834,
    0.020790672103765093,
    0.016644691189821193,
    0.013876128823070748,
    0.01189670994589177,
    0.010411265261972096,
    0.009255462182712733,
    0.00833056343336287,
    0.007573675487951841,
    0.00694284010720953,
    0.006408994188004207,
    0.0059513701127588475,
    0.005554733551962801,
])
_LOG_2PI = math.log(2 * math.pi)


def _stirlerr(n):
    n = np.asarray(n, dtype=np.float64)
    small = n <= 15
    out = _STIRLERR_TABLE[np.where(small, n, 0).astype(np.int64)]
    nb = np.where(small, 16.0, n)
    nn = nb * nb
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    big = np.select(
        [nb > 500, nb > 80, nb > 35],
        [(s0 - s1 / nn) / nb,
         (s0 - (s1 - s2 / nn) / nn) / nb,
         (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / nb],
        (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / nb,
    )
    return np.where(small, out, big)


def _bd0(x, M):
    """Deviance term x log(x / M) + M - x, without cancellation when x ~ M."""
    x = np.asarray(x, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        near = np.abs(x - M) < 0.1 * (x + M)
        v = np.where(near, (x - M) / (x + M), 0.0)
        s = (x - M) * v
        ej = 2 * x * v
        v2 = v * v
        # |v| < 1/19 on this branch, so 12 terms reach full precision
        for j in range(1, 13):
            ej = ej * v2
            s = s + ej / (2 * j + 1)
        far = xlogy(x, x / M) + M - x
    return np.where(near, s, far)


def _forward_logpmf(N, p, m):
    """log C(N, m) p^m (1 - p)^(N - m) in saddle-point form (Loader 2000)."""
    m = np.asarray(m, dtype=np.float64)
    inside = (m >= 0) & (m <= N)
    mm = np.where(inside, m, 0.0)
    q = 1.0 - p
    if p == 0.0 or q == 0.0 or N == 0:
        hit = mm == (N if q == 0.0 else 0)
        return np.where(inside & hit, 0.0, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        lc = (_stirlerr(N) - _stirlerr(mm) - _stirlerr(N - mm)
              - _bd0(mm, N * p) - _bd0(N - mm, N * q))
        lf = _LOG_2PI + np.log(mm) + np.log1p(-mm / N)
        interior = lc - 0.5 * lf
    at_zero = -_bd0(N, N * q) - N * p if p < 0.1 else N * math.log(q)
    at_full = -_bd0(N, N * p) - N * q if q < 0.1 else N * math.log(p)
    out = np.where(mm == 0, at_zero, np.where(mm == N, at_full, interior))
    return np.where(inside, out, -np.inf)


def forward_pmf(d: ForwardDistribution, m) -> float:
    """P{survivors = m} = C(N, m) p^m (1 - p)^(N - m); zero outside 0..N."""
    m = _as_integer(m, "m")
    return float(np.exp(_forward_logpmf(d.trials, d.success_prob, m)))


def forward_pmf_table(d: ForwardDistribution) -> np.ndarray:
    """Probabilities for m = 0..N."""
    return np.exp(_forward_logpmf(d.trials, d.success_prob, np.arange(d.trials + 1)))


@dataclass(frozen=True)
class BackwardPosterior:
    """Posterior of the earlier cohort size: ``shift`` plus Poisson(``poisson_rate``).

    Build it with :func:`make_backward_posterior`.
    """

    shift: int
    survival_prob: float
    prior_mean: float
    poisson_rate: float

    def __post_init__(self):
        object.__setattr__(self, "shift", _as_count(self.shift, "shift"))
        p = self.survival_prob
        if not 0.0 < p <= 1.0:
            raise DomainError(f"survival probability must lie in (0, 1], got {p}")
        if self.poisson_rate < 0 or self.prior_mean < 0:
            raise DomainError("prior mean and Poisson rate must be nonnegative")
        if not math.isclose(self.prior_mean * p, self.shift, rel_tol=1e-12, abs_tol=1e-300):
            raise DomainError("prior mean must equal shift / survival probability")
        slack = 1e-9 * self.poisson_rate + 4 * math.ulp(self.prior_mean)
        if abs(self.poisson_rate - self.prior_mean * (1 - p)) > slack:
            raise DomainError("Poisson rate must equal prior mean * (1 - survival probability)")

    # short aliases matching the usual notation
    @property
    def n(self):
        return self.shift

    @property
    def p(self):
        return self.survival_prob

    @property
    def a(self):
        return self.prior_mean

    @property
    def lam(self):
        return self.poisson_rate


def make_backward_posterior(n, p) -> BackwardPosterior:
    """Posterior for an observed count ``n`` with survival probability ``p``.

    The prior mean is a = n / p. The Poisson rate a (1 - p) is computed as
    a - n, which is the same quantity and keeps n + rate == a exact.
    """
    n = _as_count(n, "n")
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise DomainError(f"survival probability must lie in (0, 1], got {p}")
    a = n / p
    return BackwardPosterior(n, p, a, a - n)


def backward_support(bp: BackwardPosterior) -> np.ndarray:
    """Truncated support n .. n + ceil(10 lambda) + 50 used for tables and checks."""
    return np.arange(bp.n, bp.n + math.ceil(10 * bp.lam) + 51)


def _backward_logpmf(bp, m):
    k = np.asarray(m, dtype=np.float64) - bp.n
    inside = k >= 0
    kk = np.where(inside, k, 0.0)
    out = xlogy(kk, bp.lam) - bp.lam - gammaln(kk + 1)
    return np.where(inside, out, -np.inf)


def backward_pmf(bp: BackwardPosterior, m) -> float:
    """e^(-lambda) lambda^(m - n) / (m - n)! for m >= n, else 0."""
    m = _as_integer(m, "m")
    return float(np.exp(_backward_logpmf(bp, m)))


def backward_pmf_table(bp: BackwardPosterior, support=None):
    """``(support, probabilities)``; default support from :func:`backward_support`."""
    if support is None:
        support = backward_support(bp)
    support = np.asarray(support)
    return support, np.exp(_backward_logpmf(bp, support))


def backward_pgf(bp: BackwardPosterior, z) -> float:
    """Generating function z^n exp((z - 1) lambda) on z in [0, 1]."""
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [0, 1], got {z}")
    return z ** bp.n * math.exp((z - 1.0) * bp.lam)


def backward_moments(bp: BackwardPosterior):
    """Posterior ``(mean, variance)`` = ``(n + lambda, lambda)``."""
    return bp.n + bp.lam, bp.lam


@lru_cache(maxsize=4096)
def _log_denominator(n, a, p, tail_epsilon):
    log_den, _ = _backend.kernels.oracle_log_series(n, a, p, tail_epsilon)
    if log_den == -math.inf:
        raise DomainError(f"posterior undefined: prior mean {a} cannot produce {n} survivors")
    return log_den


def _check_oracle_args(n, a, p, tail_epsilon):
    n = _as_count(n, "n")
    a = float(a)
    p = float(p)
    if not (math.isfinite(a) and a >= 0):
        raise DomainError(f"prior mean must be finite and nonnegative, got {a}")
    if not 0.0 < p <= 1.0:
        raise DomainError(f"survival probability must lie in (0, 1], got {p}")
    if not tail_epsilon > 0:
        raise DomainError("tail_epsilon must be positive")
    return n, a, p, float(tail_epsilon)


def _log_joint(n, a, p, v):
    """log of C(v, n) p^n (1 - p)^(v - n) * a^v e^(-a) / v!, for v >= n."""
    lik = math.lgamma(v + 1) - math.lgamma(n + 1) - math.lgamma(v - n + 1) + n * math.log(p)
    if v > n:
        lik += (v - n) * math.log1p(-p) if p < 1 else -math.inf
    if v == 0:
        prior = -a
    elif a == 0:
        return -math.inf
    else:
        prior = v * math.log(a) - a - math.lgamma(v + 1)
    return lik + prior


def posterior_oracle(n, a, p, m, tail_epsilon=DEFAULT_TAIL_EPSILON) -> float:
    """P{earlier cohort = m | n survivors} by direct Bayes summation.

    Numerator: binomial likelihood of n survivors out of m times the
    Poisson(a) prior at m. Denominator: the same product summed over
    v = n, n + 1, ... with a certified truncation (see
    ``oracle_log_series``). Makes no use of the generating-function result.
    """
    n, a, p, tail_epsilon = _check_oracle_args(n, a, p, tail_epsilon)
    m = _as_integer(m, "m")
    if m < n:
        return 0.0
    log_den = _log_denominator(n, a, p, tail_epsilon)
    return math.exp(_log_joint(n, a, p, m) - log_den)


def posterior_oracle_table(n, a, p, support, tail_epsilon=DEFAULT_TAIL_EPSILON) -> np.ndarray:
    """:func:`posterior_oracle` evaluated at every m in ``support``."""
    n, a, p, tail_epsilon = _check_oracle_args(n, a, p, tail_epsilon)
    log_den = _log_denominator(n, a, p, tail_epsilon)
    return np.array([
        math.exp(_log_joint(n, a, p, int(m)) - log_den) if m >= n else 0.0
        for m in support
    ])
