"""Compiled random-walk kernel used by the particle oracle.

Random streams
--------------
Every walker owns an independent xoshiro256++ generator (Blackman & Vigna).
Its 256-bit state is filled with four consecutive splitmix64 outputs started
from ``mix64(mix64(seed) ^ walker_index)``, where ``mix64`` is the splitmix64
output finaliser. A walker's path therefore depends only on ``(seed, index)``,
which makes results independent of how walkers are split across workers.

Normal variates use the 256-layer ziggurat of Marsaglia & Tsang (2000) in the
52-bit form: one 64-bit draw supplies the layer (low 8 bits), the sign (next
bit) and a 52-bit magnitude. The tail beyond ``ZIG_R`` uses Marsaglia's
exponential rejection method.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

ZIG_R = 3.6541528853610088
_ZIG_V = 4.92867323399e-3
_TWO_53_INV = 1.0 / 9007199254740992.0


def _ziggurat_tables():
    m1 = 2.0**52
    dn = tn = ZIG_R
    ki = np.zeros(256)
    wi = np.zeros(256)
    fi = np.zeros(256)
    q = _ZIG_V / math.exp(-0.5 * dn * dn)
    ki[0] = (dn / q) * m1
    ki[1] = 0.0
    wi[0] = q / m1
    wi[255] = dn / m1
    fi[0] = 1.0
    fi[255] = math.exp(-0.5 * dn * dn)
    for i in range(254, 0, -1):
        dn = math.sqrt(-2.0 * math.log(_ZIG_V / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = (dn / tn) * m1
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / m1
    return ki.astype(np.uint64), wi, fi


KI, WI, FI = _ziggurat_tables()


@njit(inline="always")
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(inline="always")
def _next(s0, s1, s2, s3):
    r = _rotl(s0 + s3, 23) + s0
    t = s1 << uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    return r, s0, s1, s2, s3


@njit(inline="always")
def _seed_walker(key, index):
    sm = mix64(uint64(key) ^ uint64(index))
    s0 = mix64(sm + GOLDEN)
    s1 = mix64(sm + uint64(2) * GOLDEN)
    s2 = mix64(sm + uint64(3) * GOLDEN)
    s3 = mix64(sm + uint64(4) * GOLDEN)
    return s0, s1, s2, s3


@njit(inline="always")
def _normal(s0, s1, s2, s3, ki, wi, fi):
    while True:
        r, s0, s1, s2, s3 = _next(s0, s1, s2, s3)
        idx = np.intp(r & uint64(0xFF))
        r >>= uint64(8)
        rabs = (r >> uint64(1)) & uint64(0x000FFFFFFFFFFFFF)
        x = np.float64(rabs) * wi[idx]
        negative = (r & uint64(1)) != uint64(0)
        if negative:
            x = -x
        if rabs < ki[idx]:
            return x, s0, s1, s2, s3
        if idx == 0:
            # tail beyond ZIG_R
            while True:
                u, s0, s1, s2, s3 = _next(s0, s1, s2, s3)
                xx = -math.log1p(-np.float64(u >> uint64(11)) * _TWO_53_INV) / ZIG_R
                u, s0, s1, s2, s3 = _next(s0, s1, s2, s3)
                yy = -math.log1p(-np.float64(u >> uint64(11)) * _TWO_53_INV)
                if yy + yy > xx * xx:
                    if negative:
                        return -(ZIG_R + xx), s0, s1, s2, s3
                    return ZIG_R + xx, s0, s1, s2, s3
        else:
            u, s0, s1, s2, s3 = _next(s0, s1, s2, s3)
            uf = np.float64(u >> uint64(11)) * _TWO_53_INV
            if (fi[idx - 1] - fi[idx]) * uf + fi[idx] < math.exp(-0.5 * x * x):
                return x, s0, s1, s2, s3


@njit(nogil=True, cache=True)
def walker_key(seed):
    return mix64(uint64(seed))


@njit(nogil=True, cache=True)
def raw_stream(key, index, n):
    """First ``n`` xoshiro256++ outputs of walker ``index``."""
    s0, s1, s2, s3 = _seed_walker(key, index)
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        r, s0, s1, s2, s3 = _next(s0, s1, s2, s3)
        out[i] = r
    return out


@njit(nogil=True, cache=True)
def normal_stream(key, index, n, ki, wi, fi):
    """First ``n`` standard normal variates of walker ``index``."""
    s0, s1, s2, s3 = _seed_walker(key, index)
    out = np.empty(n)
    for i in range(n):
        z, s0, s1, s2, s3 = _normal(s0, s1, s2, s3, ki, wi, fi)
        out[i] = z
    return out


@njit(nogil=True, cache=True)
def first_passage_steps(barrier, drift_step, sigma, n_steps, key, first_index, count,
                        ki, wi, fi):
    """Step index at which each walker first sits at or beyond ``barrier``.

    Walkers start at 0 and move by ``drift_step + sigma * xi`` per step.
    Entry ``-1`` marks a walker still free after ``n_steps`` steps.
    """
    out = np.empty(count, dtype=np.int64)
    for w in range(count):
        s0, s1, s2, s3 = _seed_walker(key, first_index + w)
        pos = 0.0
        hit = -1
        for k in range(1, n_steps + 1):
            z, s0, s1, s2, s3 = _normal(s0, s1, s2, s3, ki, wi, fi)
            pos += drift_step + sigma * z
            if pos >= barrier:
                hit = k
                break
        out[w] = hit
    return out
