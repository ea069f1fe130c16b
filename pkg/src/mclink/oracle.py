"""Brute-force Brownian first-passage oracle.

Walkers start at the origin and take Euler-Maruyama steps
``dz = v dt + sqrt(2 D dt) xi``; a walker is absorbed at the first step
boundary where ``z >= x``. No Brownian-bridge correction is applied, so the
absorbed fraction is biased slightly low; the bias shrinks as ``sqrt(dt)``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _walk
from .diffusion import ChannelParams, TimeWindow, peak_time
from .errors import ValidationError

__all__ = [
    "DEFAULT_STEP_FRACTION",
    "WalkConfig",
    "FirstPassageHistogram",
    "default_step",
    "first_passage_times",
    "simulate_first_passage",
    "empirical_capture",
    "capture_tolerance",
    "histogram_to_csv",
    "suggested_horizon",
]

DEFAULT_STEP_FRACTION = 1e-3
DISCRETIZATION_ALLOWANCE = 0.005
_UINT64_MAX = 2**64 - 1
_EDGE_EPS = 1e-9


def default_step(channel: ChannelParams) -> float:
    """``1e-3 * x^2 / (2D)``: a fixed fraction of the zero-drift peak time."""
    x, d = channel.distance_x, channel.diffusivity_d
    return DEFAULT_STEP_FRACTION * x * x / (2.0 * d)


@dataclass(frozen=True)
class WalkConfig:
    channel: ChannelParams
    step_dt: float
    horizon_t: float
    walker_count: int
    rng_seed: int

    def __post_init__(self):
        if not (math.isfinite(self.step_dt) and self.step_dt > 0):
            raise ValidationError(f"step_dt must be > 0, got {self.step_dt!r}")
        if not (math.isfinite(self.horizon_t) and self.horizon_t >= self.step_dt):
            raise ValidationError("horizon_t must be finite and >= step_dt")
        if int(self.walker_count) != self.walker_count or self.walker_count < 1:
            raise ValidationError(f"walker_count must be a positive integer, got {self.walker_count!r}")
        if int(self.rng_seed) != self.rng_seed or not 0 <= self.rng_seed <= _UINT64_MAX:
            raise ValidationError("rng_seed must be an integer in [0, 2**64)")

    @classmethod
    def with_default_step(cls, channel: ChannelParams, horizon_t: float,
                          walker_count: int, rng_seed: int) -> "WalkConfig":
        return cls(channel, default_step(channel), horizon_t, walker_count, rng_seed)

    @property
    def n_steps(self) -> int:
        return _steps_upto(self.horizon_t, self.step_dt)


@dataclass(frozen=True)
class FirstPassageHistogram:
    """First-passage counts in bins ``(edge[i], edge[i+1]]``."""

    bin_edges: np.ndarray
    counts: np.ndarray
    absorbed_total: int
    walker_count: int

    def __post_init__(self):
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValidationError("bin_edges must be strictly increasing")
        if int(self.counts.sum()) != self.absorbed_total or self.absorbed_total > self.walker_count:
            raise ValidationError("counts must sum to absorbed_total <= walker_count")


def _steps_upto(t: float, dt: float) -> int:
    """Number of whole steps ``k`` with ``k*dt <= t`` (robust to rounding at exact multiples)."""
    return int(math.floor(t / dt + _EDGE_EPS))


def _chunks(count: int, workers: int):
    bounds = np.linspace(0, count, workers + 1).astype(np.int64)
    return [(int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def first_passage_steps(channel: ChannelParams, step_dt: float, n_steps: int, seed: int,
                        first_index: int, count: int, workers: int = 1) -> np.ndarray:
    """Absorption step index per walker (``-1`` if never absorbed within ``n_steps``).

    Walker ``first_index + i`` always draws from the same random stream, so the
    output does not depend on ``workers``.
    """
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    key = np.uint64(_walk.walker_key(np.uint64(seed)))
    sigma = math.sqrt(2.0 * channel.diffusivity_d * step_dt)
    drift_step = channel.drift_v * step_dt

    def run(chunk):
        start, size = chunk
        return _walk.first_passage_steps(
            channel.distance_x, drift_step, sigma, n_steps, key,
            first_index + start, size, _walk.KI, _walk.WI, _walk.FI,
        )

    chunks = _chunks(count, workers)
    if workers == 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def first_passage_times(cfg: WalkConfig, workers: int = 1) -> np.ndarray:
    """First-passage time of every walker in seconds; ``inf`` when not absorbed by the horizon."""
    steps = first_passage_steps(cfg.channel, cfg.step_dt, cfg.n_steps, cfg.rng_seed,
                                0, int(cfg.walker_count), workers)
    return np.where(steps >= 0, steps * cfg.step_dt, np.inf)


def _count_in(steps_sorted: np.ndarray, edges_steps: np.ndarray) -> np.ndarray:
    # walkers absorbed at step k fall in (lo, hi] iff lo_k < k <= hi_k
    return np.diff(np.searchsorted(steps_sorted, edges_steps, side="right"))


def _absorbed_sorted(cfg: WalkConfig, workers: int) -> np.ndarray:
    steps = first_passage_steps(cfg.channel, cfg.step_dt, cfg.n_steps, cfg.rng_seed,
                                0, int(cfg.walker_count), workers)
    return np.sort(steps[steps >= 0])


def simulate_first_passage(cfg: WalkConfig, bins, workers: int = 1) -> FirstPassageHistogram:
    """Bin walker first-passage times into ``bins`` (edges in seconds within ``[0, horizon]``)."""
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValidationError("bins must contain at least two edges")
    if np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing")
    if edges[0] < 0 or edges[-1] > cfg.horizon_t * (1 + _EDGE_EPS):
        raise ValidationError("bin edges must lie within [0, horizon_t]")
    absorbed = _absorbed_sorted(cfg, workers)
    edge_steps = np.array([_steps_upto(e, cfg.step_dt) for e in edges])
    counts = _count_in(absorbed, edge_steps)
    return FirstPassageHistogram(edges, counts, int(counts.sum()), int(cfg.walker_count))


def empirical_capture(cfg: WalkConfig, w: TimeWindow, workers: int = 1) -> float:
    """Fraction of walkers whose first passage falls in ``(T, T + tau]``."""
    if w.end_t > cfg.horizon_t * (1 + _EDGE_EPS):
        raise ValidationError(
            f"window end {w.end_t:g} s lies beyond the walk horizon {cfg.horizon_t:g} s"
        )
    hist = simulate_first_passage(cfg, [w.start_t, w.end_t], workers)
    return hist.absorbed_total / hist.walker_count


def capture_tolerance(expected_fraction: float, walker_count: int,
                      allowance: float = DISCRETIZATION_ALLOWANCE) -> float:
    """Three binomial standard errors plus the step-discretisation allowance."""
    p = min(max(expected_fraction, 0.0), 1.0)
    return 3.0 * math.sqrt(p * (1.0 - p) / walker_count) + allowance


def histogram_to_csv(hist: FirstPassageHistogram, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_lo", "t_hi", "count"])
    for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
        writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])
    return buf.getvalue()


def suggested_horizon(channel: ChannelParams, multiple: float = 2.0) -> float:
    """A horizon of ``multiple`` peak times."""
    return multiple * peak_time(channel)
