"""Closed-form 1-D diffusion channel with an absorbing receiver.

All functions accept a scalar or an array of times and return the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import UnsupportedRegimeError, ValidationError

__all__ = [
    "ChannelParams",
    "TimeWindow",
    "erfc",
    "peak_time",
    "hit_concentration",
    "cumulative_capture_fraction",
    "windowed_capture",
]


@dataclass(frozen=True)
class ChannelParams:
    """Transmitter-receiver separation, diffusivity, drift and pulse size (SI units)."""

    distance_x: float
    diffusivity_d: float
    drift_v: float = 0.0
    molecules_m: float = 1.0

    def __post_init__(self):
        for name in ("distance_x", "diffusivity_d", "molecules_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.drift_v) and self.drift_v >= 0):
            raise ValidationError(f"drift_v must be finite and >= 0, got {self.drift_v!r}")

    @property
    def zero_drift(self) -> bool:
        return self.drift_v == 0.0


@dataclass(frozen=True)
class TimeWindow:
    """Receiver integration window [start_t, start_t + duration_tau]."""

    start_t: float
    duration_tau: float

    def __post_init__(self):
        if not (math.isfinite(self.start_t) and self.start_t >= 0):
            raise ValidationError(f"start_t must be >= 0, got {self.start_t!r}")
        if not (self.duration_tau > 0):
            raise ValidationError(f"duration_tau must be > 0, got {self.duration_tau!r}")

    @property
    def end_t(self) -> float:
        return self.start_t + self.duration_tau


def peak_time(p: ChannelParams) -> float:
    """Time of the maximum of :func:`hit_concentration`.

    Setting the log-derivative to zero gives ``v²t² + 2Dt − x² = 0``; for zero
    drift this reduces to ``x²/(2D)``.
    """
    x, d, v = p.distance_x, p.diffusivity_d, p.drift_v
    if v == 0.0:
        return x * x / (2.0 * d)
    # rationalised root avoids cancellation when v·x << D
    return x * x / (d + math.sqrt(d * d + v * v * x * x))


def _require_zero_drift(p: ChannelParams) -> None:
    if not p.zero_drift:
        raise UnsupportedRegimeError(
            "capture is only modelled for zero drift (drift_v must be 0)"
        )


def hit_concentration(p: ChannelParams, t):
    """Concentration ``M/sqrt(pi D t) * exp(-(x - v t)^2 / (4 D t))`` at time ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValidationError("hit_concentration requires t > 0")
    x, d, v, m = p.distance_x, p.diffusivity_d, p.drift_v, p.molecules_m
    out = m / np.sqrt(np.pi * d * t) * np.exp(-((x - v * t) ** 2) / (4.0 * d * t))
    return out[()]


def cumulative_capture_fraction(p: ChannelParams, t):
    """Fraction of released molecules absorbed by time ``t``: ``erfc(x / (2 sqrt(D t)))``.

    ``F(0)`` is 0 by continuity.
    """
    _require_zero_drift(p)
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= 0)):
        raise ValidationError("cumulative_capture_fraction requires t >= 0")
    safe_t = np.where(t > 0, t, 1.0)
    with np.errstate(divide="ignore"):
        # subnormal t underflows D*t to 0; erfc(inf) = 0 is the right limit
        f = erfc(p.distance_x / (2.0 * np.sqrt(p.diffusivity_d * safe_t)))
    return np.where(t > 0, f, 0.0)[()]


def windowed_capture(p: ChannelParams, w: TimeWindow) -> float:
    """Expected number of molecules absorbed during the window ``w``."""
    f_lo, f_hi = cumulative_capture_fraction(p, np.array([w.start_t, w.end_t]))
    return float(p.molecules_m * max(f_hi - f_lo, 0.0))
