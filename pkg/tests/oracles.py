"""Independent reference computations used to derive frozen test values.

Nothing here imports the package under test.
"""
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 60


def erfc_oracle(z) -> float:
    """erfc by Maclaurin series (|z| < 3) or Lentz continued fraction, at 60 digits."""
    z = mpmath.mpf(z)
    if z < 0:
        return float(2 - mpmath.mpf(erfc_oracle(-z)))
    if z < 3:
        term = z
        total = z
        n = 0
        while True:
            n += 1
            term *= -z * z / n
            add = term / (2 * n + 1)
            total += add
            if abs(add) < mpmath.mpf(10) ** -55:
                break
        return float(1 - 2 / mpmath.sqrt(mpmath.pi) * total)
    # erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    tiny = mpmath.mpf(10) ** -80
    f = z
    c = z
    d = mpmath.mpf(0)
    k = 1
    while True:
        a = mpmath.mpf(k) / 2
        d = z + a * d
        d = 1 / (d if d != 0 else tiny)
        c = z + a / c
        delta = c * d
        f *= delta
        if abs(delta - 1) < mpmath.mpf(10) ** -55:
            break
        k += 1
    return float(mpmath.exp(-z * z) / mpmath.sqrt(mpmath.pi) / f)


def capture_fraction_oracle(x, d, t) -> float:
    if t == 0:
        return 0.0
    return erfc_oracle(mpmath.mpf(x) / (2 * mpmath.sqrt(mpmath.mpf(d) * t)))


def dense_grid_delay_spread(x, d, m=1.0, points=2_000_001):
    """Peak and 3 dB crossing of the zero-drift pulse by dense scan plus bisection."""

    def phi(t):
        return m / np.sqrt(np.pi * d * t) * np.exp(-(x * x) / (4 * d * t))

    t = np.linspace(1e-6, 40 * x * x / d, points)
    values = phi(t)
    i = int(np.argmax(values))
    peak_t, peak = t[i], values[i]
    level = peak / np.sqrt(2.0)
    j = i + int(np.nonzero(values[i:] <= level)[0][0])
    lo, hi = t[j - 1], t[j]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > level:
            lo = mid
        else:
            hi = mid
    return peak_t, 0.5 * (lo + hi)


def exact_line_fit(xs, ys):
    """Ordinary least squares in exact rational arithmetic."""
    xs = [Fraction(str(v)) for v in xs]
    ys = [Fraction(str(v)) for v in ys]
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(v * v for v in xs)
    sxy = sum(a * b for a, b in zip(xs, ys))
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    intercept = (sy - slope * sx) / n
    return float(intercept), float(slope)


MASK64 = (1 << 64) - 1


def _rotl64(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix_finalize(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def xoshiro256pp(state, n):
    """Plain-integer xoshiro256++ from an explicit 4-word state."""
    s0, s1, s2, s3 = state
    out = []
    for _ in range(n):
        out.append((_rotl64((s0 + s3) & MASK64, 23) + s0) & MASK64)
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl64(s3, 45)
    return out


def walker_state(seed, index):
    golden = 0x9E3779B97F4A7C15
    sm = splitmix_finalize(splitmix_finalize(seed) ^ index)
    return [splitmix_finalize((sm + k * golden) & MASK64) for k in range(1, 5)]
