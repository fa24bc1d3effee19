# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; mirror ``_pykernels`` exactly (same streams, same decisions)."""

import numpy as np

from libc.math cimport exp, floor, fabs, log, log1p, lgamma, sqrt, INFINITY
from libc.stdint cimport int64_t, uint64_t

NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = 0x94D049BB133111EB
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t base, uint64_t rep, uint64_t lane) noexcept nogil:
    return mix64(base + (2 * rep + lane + 1) * GOLDEN)


cdef inline double uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(mix64(key + (counter + 1) * GOLDEN) >> 11) * TWO_M53


def forward_counts(uint64_t seed, int64_t N, double p, int64_t start, int64_t stop):
    out = np.empty(stop - start, dtype=np.int64)
    cdef int64_t[::1] res = out
    cdef uint64_t base = mix64(seed + GOLDEN)
    cdef uint64_t key
    cdef int64_t r, j, alive
    with nogil:
        for r in range(start, stop):
            key = stream_key(base, <uint64_t>r, 0)
            alive = 0
            for j in range(N):
                if uniform(key, <uint64_t>j) < p:
                    alive += 1
            res[r - start] = alive
    return out


cdef int64_t poisson_ptrs(uint64_t key, double lam) noexcept nogil:
    cdef double slam = sqrt(lam)
    cdef double loglam = log(lam)
    cdef double b = 0.931 + 2.53 * slam
    cdef double a = -0.059 + 0.02483 * b
    cdef double log_invalpha = log(1.1239 + 1.1328 / (b - 3.4))
    cdef double vr = 0.9277 - 3.6224 / (b - 2)
    cdef double U, V, us, kf
    cdef uint64_t trial = 0
    while True:
        U = uniform(key, 2 * trial) - 0.5
        V = uniform(key, 2 * trial + 1)
        trial += 1
        us = 0.5 - fabs(U)
        if us == 0:
            continue
        kf = floor((2 * a / us + b) * U + lam + 0.43)
        if us >= 0.07 and V <= vr:
            return <int64_t>kf
        if kf < 0 or (us < 0.013 and V > us):
            continue
        if log(V) + log_invalpha - log(a / (us * us) + b) <= -lam + kf * loglam - lgamma(kf + 1):
            return <int64_t>kf


cdef int64_t search_right(const double[::1] cdf, double u) noexcept nogil:
    # first index with u < cdf[i]; cdf ends with +inf
    cdef int64_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def backward_attempts(uint64_t seed, int64_t n, double p, double a, cdf, int64_t start, int64_t stop):
    cdef int64_t size = stop - start
    values = np.empty(size, dtype=np.int64)
    indices = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] vals = values
    cdef int64_t[::1] idxs = indices
    cdef const double[::1] table
    cdef bint use_table = cdf is not None
    if use_table:
        table = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef uint64_t base = mix64(seed + GOLDEN)
    cdef uint64_t key0, key1
    cdef int64_t r, j, m, alive, count = 0
    with nogil:
        for r in range(start, stop):
            key0 = stream_key(base, <uint64_t>r, 0)
            if use_table:
                m = search_right(table, uniform(key0, 0))
            else:
                m = poisson_ptrs(key0, a)
            if m < n:
                continue
            key1 = stream_key(base, <uint64_t>r, 1)
            alive = 0
            for j in range(m):
                if uniform(key1, <uint64_t>j) < p:
                    alive += 1
                    if alive > n:
                        break
                elif alive + (m - j - 1) < n:
                    break
            if alive == n:
                vals[count] = m
                idxs[count] = r
                count += 1
    return values[:count].copy(), indices[:count].copy()


cdef double log_term(int64_t v, int64_t n, double a, double log_p, double log_q,
                     double log_a, double lg_n) noexcept nogil:
    cdef double lik = lgamma(v + 1.0) - lg_n - lgamma(v - n + 1.0) + n * log_p
    if v > n:
        lik += (v - n) * log_q
    cdef double prior = -a - lgamma(v + 1.0)
    if v:
        prior += v * log_a
    return lik + prior


def oracle_log_series(int64_t n, double a, double p, double tail_epsilon):
    cdef double log_p = log(p)
    cdef double log_q = log1p(-p) if p < 1 else -INFINITY
    cdef double log_a = log(a) if a > 0 else -INFINITY
    cdef double lg_n = lgamma(n + 1.0)
    cdef int64_t mode = n + <int64_t>floor(a * (1 - p))
    cdef double shift = log_term(mode, n, a, log_p, log_q, log_a, lg_n)
    if shift == -INFINITY:
        return -INFINITY, 0
    cdef double log_eps = log(tail_epsilon)
    cdef double total = 0.0, log_next, log_bound
    cdef int64_t v = n
    with nogil:
        while True:
            total += exp(log_term(v, n, a, log_p, log_q, log_a, lg_n) - shift)
            if v + 2 > a:
                log_next = (((v + 1) * log_a) if a > 0 else -INFINITY) - a - lgamma(v + 2.0)
                log_bound = log_next - log1p(-a / (v + 2))
                if log_bound < log_eps + shift + log(total):
                    break
            v += 1
    return shift + log(total), v - n + 1
