"""Pure-Python (numpy-vectorized) kernels.

Fallback for the compiled ``_ckernels`` extension, with identical signatures
and identical random streams: every uniform is a SplitMix64 hash of
(seed, stream, counter), so both backends consume exactly the same numbers.
"""

import math

import numpy as np
from scipy.special import gammaln

NAME = "python"

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
TWO_M53 = 1.0 / 9007199254740992.0

_U30, _U27, _U31, _U11 = (np.uint64(k) for k in (30, 27, 31, 11))
_GOLDEN = np.uint64(GOLDEN)
_MIX1 = np.uint64(MIX1)
_MIX2 = np.uint64(MIX2)

# inner-loop work per vectorized block, in uniforms
_BLOCK = 1 << 21


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def _mix64_array(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


def stream_keys(seed, replications, lane):
    """Per-replication stream keys for ``lane`` (0 or 1)."""
    base = np.uint64(mix64(seed + GOLDEN))
    r = np.asarray(replications, dtype=np.uint64)
    return _mix64_array(base + (np.uint64(2) * r + np.uint64(lane + 1)) * _GOLDEN)


def uniforms(keys, counters):
    """Uniform doubles in [0, 1) at ``counters`` of the streams ``keys`` (broadcast)."""
    keys = np.asarray(keys, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    if c.ndim == 0:
        # numpy warns on scalar overflow but wraps arrays silently
        c = c.reshape(1)
    h = _mix64_array(keys + (c + np.uint64(1)) * _GOLDEN)
    return (h >> _U11).astype(np.float64) * TWO_M53


def forward_counts(seed, N, p, start, stop):
    """Survivor counts for replications ``start..stop-1``: N Bernoulli(p) draws each."""
    out = np.empty(stop - start, dtype=np.int64)
    if N == 0:
        out[:] = 0
        return out
    rows = max(1, _BLOCK // N)
    cols = np.arange(N, dtype=np.uint64)
    col_blocks = [cols[i:i + _BLOCK] for i in range(0, N, _BLOCK)]
    for r0 in range(start, stop, rows):
        r1 = min(stop, r0 + rows)
        keys = stream_keys(seed, np.arange(r0, r1), 0)[:, None]
        total = np.zeros(r1 - r0, dtype=np.int64)
        for cb in col_blocks:
            total += np.count_nonzero(uniforms(keys, cb[None, :]) < p, axis=1)
        out[r0 - start:r1 - start] = total
    return out


def _poisson_ptrs(keys, lam):
    """Transformed rejection (PTRS, Hormann 1993) for Poisson(lam), lam >= 10."""
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    log_invalpha = math.log(1.1239 + 1.1328 / (b - 3.4))
    vr = 0.9277 - 3.6224 / (b - 2)

    out = np.empty(keys.shape[0], dtype=np.int64)
    pending = np.arange(keys.shape[0])
    trial = 0
    while pending.size:
        k_p = keys[pending]
        U = uniforms(k_p, 2 * trial) - 0.5
        V = uniforms(k_p, 2 * trial + 1)
        us = 0.5 - np.abs(U)
        with np.errstate(divide="ignore", invalid="ignore"):
            kf = np.floor((2 * a / us + b) * U + lam + 0.43)
            quick = (us >= 0.07) & (V <= vr)
            bad = (us == 0) | (kf < 0) | ((us < 0.013) & (V > us))
            slow = ~quick & ~bad
            kk = np.where(slow, kf, 0.0)
            lhs = np.log(V) + log_invalpha - np.log(a / (us * us) + b)
            rhs = -lam + kk * loglam - gammaln(kk + 1)
        done = quick | (slow & (lhs <= rhs))
        out[pending[done]] = kf[done].astype(np.int64)
        pending = pending[~done]
        trial += 1
    return out


def backward_attempts(seed, n, p, a, cdf, start, stop):
    """Run rejection attempts ``start..stop-1`` of the prior-then-thin sampler.

    Each attempt draws m ~ Poisson(a) on lane 0 (table inversion when ``cdf``
    is given, PTRS otherwise), thins it with m Bernoulli(p) draws on lane 1
    and accepts iff exactly ``n`` survive. Returns accepted m values and
    their attempt indices, both in attempt order.
    """
    idx = np.arange(start, stop, dtype=np.int64)
    keys0 = stream_keys(seed, idx, 0)
    if cdf is not None:
        m = np.searchsorted(cdf, uniforms(keys0, 0), side="right").astype(np.int64)
    else:
        m = _poisson_ptrs(keys0, a)
    keys1 = stream_keys(seed, idx, 1)

    accepted = np.zeros(idx.size, dtype=bool)
    i = 0
    while i < idx.size:
        # grow the block until it holds about _BLOCK thinning draws
        csum = np.cumsum(m[i:])
        j = i + max(1, int(np.searchsorted(csum, _BLOCK, side="right")))
        mb = m[i:j]
        total = int(mb.sum())
        if total:
            row = np.repeat(np.arange(j - i), mb)
            offsets = np.cumsum(mb) - mb
            ctr = np.arange(total, dtype=np.int64) - np.repeat(offsets, mb)
            alive = uniforms(keys1[i:j][row], ctr) < p
            survivors = np.bincount(row, weights=alive, minlength=j - i).astype(np.int64)
        else:
            survivors = np.zeros(j - i, dtype=np.int64)
        accepted[i:j] = survivors == n
        i = j
    return m[accepted], idx[accepted]


def oracle_log_series(n, a, p, tail_epsilon):
    """Log of the Bayes denominator sum over v >= n of likelihood times Poisson prior.

    Terms are evaluated directly in log space. Summation stops once the
    ratio-test bound on the prior mass beyond v falls below
    ``tail_epsilon`` times the partial sum. Returns ``(log_sum, n_terms)``.
    """
    log_p = math.log(p)
    log_q = math.log1p(-p) if p < 1 else -math.inf
    log_a = math.log(a) if a > 0 else -math.inf
    lg = math.lgamma
    lg_n = lg(n + 1)

    def log_term(v):
        lik = lg(v + 1) - lg_n - lg(v - n + 1) + n * log_p
        if v > n:
            lik += (v - n) * log_q
        prior = (v * log_a if v else 0.0) - a - lg(v + 1)
        return lik + prior

    mode = n + int(math.floor(a * (1 - p)))
    shift = log_term(mode)
    if shift == -math.inf:
        return -math.inf, 0
    log_eps = math.log(tail_epsilon)
    total = 0.0
    v = n
    while True:
        total += math.exp(log_term(v) - shift)
        if v + 2 > a:
            log_next = ((v + 1) * log_a if a > 0 else -math.inf) - a - lg(v + 2)
            log_bound = log_next - math.log1p(-a / (v + 2))
            if log_bound < log_eps + shift + math.log(total):
                break
        v += 1
    return shift + math.log(total), v - n + 1
