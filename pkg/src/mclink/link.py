"""Bit error rate and goodput of the molecular OOK link.

``molecular_ber`` is the fraction of a pulse's molecules that arrive outside
the sampling window ``[T, T + n tau]``; ``molecular_throughput`` divides the
in-window fraction by the window length. ``simulate_ook_link`` runs an actual
threshold detector over Brownian walkers, so the stragglers of earlier pulses
(inter-symbol interference) are counted too.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .diffusion import ChannelParams, cumulative_capture_fraction, peak_time
from .errors import UnsupportedRegimeError, ValidationError
from .oracle import WalkConfig, first_passage_steps
from .propagation import (
    CENSORED, Censored, MolecularModel, PipeTopology, RadioModel,
    classify_feasibility, predict_delay_spread, predict_rssi,
)
from .pulse import SPREAD_PEAK_RATIO, EmissionSchedule

__all__ = [
    "SamplingPolicy",
    "RatePoint",
    "OOKResult",
    "LinkReport",
    "molecular_ber",
    "molecular_throughput",
    "rate_surface",
    "rate_surface_to_csv",
    "default_threshold",
    "simulate_ook_link",
    "ook_log_to_csv",
    "effective_channel",
    "link_report",
]


@dataclass(frozen=True)
class SamplingPolicy:
    """Receiver samples ``[peak_arrival_T, peak_arrival_T + multiplier_n * delay_spread_tau]``."""

    peak_arrival_T: float
    delay_spread_tau: float
    multiplier_n: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.peak_arrival_T) and self.peak_arrival_T >= 0):
            raise ValidationError("peak_arrival_T must be >= 0")
        if not (self.delay_spread_tau > 0):
            raise ValidationError("delay_spread_tau must be > 0")
        if not (self.multiplier_n > 0):
            raise ValidationError("multiplier_n must be > 0")

    @property
    def window(self) -> float:
        return self.multiplier_n * self.delay_spread_tau


@dataclass(frozen=True)
class RatePoint:
    tau: float
    T: float
    rate: float
    ber: float


def _captured(p: ChannelParams, pol: SamplingPolicy) -> float:
    if not p.zero_drift:
        raise UnsupportedRegimeError("BER and throughput are only modelled for zero drift")
    lo, hi = cumulative_capture_fraction(p, np.array([pol.peak_arrival_T,
                                                      pol.peak_arrival_T + pol.window]))
    return float(max(hi - lo, 0.0))


def molecular_ber(p: ChannelParams, pol: SamplingPolicy) -> float:
    """``1 - [F(T + n tau) - F(T)]``: the out-of-window molecule fraction."""
    return 1.0 - _captured(p, pol)


def molecular_throughput(p: ChannelParams, pol: SamplingPolicy) -> float:
    """In-window molecule fraction per second of window, in bits/s per chemical."""
    return _captured(p, pol) / pol.window


def rate_surface(p: ChannelParams, tau_grid: Sequence[float], T_grid: Sequence[float],
                 n: float = 1.0) -> list[list[RatePoint]]:
    """Throughput and BER on the ``tau_grid x T_grid`` mesh (rows follow ``tau_grid``)."""
    taus = np.asarray(tau_grid, dtype=float)
    Ts = np.asarray(T_grid, dtype=float)
    if taus.size == 0 or Ts.size == 0:
        raise ValidationError("rate_surface grids must be nonempty")
    if np.any(~(taus > 0)) or np.any(~(Ts >= 0)):
        raise ValidationError("tau grid must be > 0 and T grid >= 0")
    if not p.zero_drift:
        raise UnsupportedRegimeError("BER and throughput are only modelled for zero drift")
    if not (n > 0):
        raise ValidationError("multiplier n must be > 0")
    start, window = np.broadcast_arrays(Ts[None, :], n * taus[:, None])
    f_lo = cumulative_capture_fraction(p, start)
    f_hi = cumulative_capture_fraction(p, start + window)
    cap = np.maximum(f_hi - f_lo, 0.0)
    rate = cap / window
    ber = 1.0 - cap
    return [[RatePoint(float(taus[i]), float(Ts[j]), float(rate[i, j]), float(ber[i, j]))
             for j in range(Ts.size)] for i in range(taus.size)]


def rate_surface_to_csv(surface: list[list[RatePoint]], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau_s", "T_s", "rate_bps", "ber"])
    for row in surface:
        for pt in row:
            writer.writerow([repr(pt.tau), repr(pt.T), repr(pt.rate), repr(pt.ber)])
    return buf.getvalue()


def default_threshold(p: ChannelParams, pol: SamplingPolicy) -> float:
    """Half the expected in-window count of an isolated 1-bit."""
    return 0.5 * p.molecules_m * _captured(p, pol)


@dataclass(frozen=True)
class OOKResult:
    bits: tuple
    decisions: tuple
    per_symbol_captures: np.ndarray
    isi_captures: np.ndarray
    threshold: float
    empirical_ber: float


def simulate_ook_link(p: ChannelParams, sched: EmissionSchedule, pol: SamplingPolicy,
                      detector_threshold: float | None, cfg: WalkConfig,
                      workers: int = 1) -> OOKResult:
    """Monte Carlo OOK link with a counting threshold detector.

    Each 1-bit releases ``round(M)`` walkers at its symbol start. Symbol ``k``
    counts every absorption, from any earlier pulse, in
    ``(s_k + T, s_k + T + n tau]`` and decides 1 when the count reaches the
    threshold. Walkers still free ``cfg.horizon_t`` after release are dropped.
    Walker streams are keyed by symbol index, so flipping one bit leaves every
    other pulse's walkers unchanged. ``cfg.walker_count`` is not used.
    """
    if cfg.channel != p:
        raise ValidationError("cfg.channel must equal the link channel")
    per_pulse = int(round(p.molecules_m))
    if per_pulse < 1 or abs(per_pulse - p.molecules_m) > 1e-9:
        raise ValidationError("molecules_m must be a positive integer for the walker simulation")
    if sched.symbol_period < pol.window:
        warnings.warn("symbol period is shorter than the sampling window n*tau", stacklevel=2)
    threshold = default_threshold(p, pol) if detector_threshold is None else float(detector_threshold)
    if not (threshold > 0):
        raise ValidationError("detector threshold must be > 0")

    bits = sched.bit_sequence
    dt = cfg.step_dt
    starts = sched.symbol_starts()
    lo = starts + pol.peak_arrival_T
    hi = lo + pol.window
    total = np.zeros(len(bits), dtype=np.int64)
    isi = np.zeros(len(bits), dtype=np.int64)
    reach_end = cfg.n_steps * dt
    for k, bit in enumerate(bits):
        if not bit:
            continue
        steps = first_passage_steps(p, dt, cfg.n_steps, cfg.rng_seed, k * per_pulse, per_pulse, workers)
        arrivals = starts[k] + np.sort(steps[steps >= 0]) * dt
        # only windows that can still see this pulse
        idx = np.nonzero((hi > starts[k]) & (lo < starts[k] + reach_end))[0]
        counts = (np.searchsorted(arrivals, hi[idx], side="right")
                  - np.searchsorted(arrivals, lo[idx], side="right"))
        total[idx] += counts
        later = idx > k
        isi[idx[later]] += counts[later]

    decisions = tuple(int(c >= threshold) for c in total)
    errors = sum(int(d != b) for d, b in zip(decisions, bits))
    return OOKResult(bits, decisions, total, isi, threshold, errors / len(bits))


def ook_log_to_csv(result: OOKResult, sched: EmissionSchedule, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["symbol", "bit", "start_s", "captures", "isi_captures", "decided"])
    for k, start in enumerate(sched.symbol_starts()):
        writer.writerow([k, result.bits[k], repr(float(start)), int(result.per_symbol_captures[k]),
                         int(result.isi_captures[k]), result.decisions[k]])
    return buf.getvalue()


@dataclass(frozen=True)
class LinkReport:
    topology: PipeTopology
    rssi_dbm: float | Censored
    radio_up: bool
    molecular_up: bool
    delay_spread_s: float | None
    multiplier_n: float | None = None
    ber: float | None = None
    rate_bps: float | None = None
    ber_target: float | None = None
    n_for_target: float | None = None
    rate_at_target: float | None = None


def effective_channel(distance_x: float, delay_spread_s: float) -> ChannelParams:
    """Zero-drift channel whose analytic delay spread equals ``delay_spread_s``."""
    d_eff = SPREAD_PEAK_RATIO * distance_x ** 2 / (2.0 * delay_spread_s)
    return ChannelParams(distance_x, d_eff)


def link_report(rm: RadioModel, mm: MolecularModel, topo: PipeTopology,
                multiplier_n: float | None = None, ber_target: float | None = None) -> LinkReport:
    """Joint radio/molecular prediction for a topology.

    Throughput uses the zero-drift channel over the pipe length whose delay
    spread matches the predicted one, sampled from its peak arrival. The BER
    target is met by the smallest ``n`` found by root bracketing; it stays
    ``None`` when the target lies below the achievable floor.
    """
    feas = classify_feasibility(rm, mm, topo)
    if not topo.pipe_regime:
        return LinkReport(topo, CENSORED, feas.radio_up, feas.molecular_up, None)
    rssi = predict_rssi(rm, topo)
    tau = predict_delay_spread(mm, topo)
    report = dict(topology=topo, rssi_dbm=rssi, radio_up=feas.radio_up,
                  molecular_up=feas.molecular_up, delay_spread_s=tau)
    channel = effective_channel(topo.total_length, tau)
    T = peak_time(channel)
    if multiplier_n is not None:
        pol = SamplingPolicy(T, tau, multiplier_n)
        report.update(multiplier_n=multiplier_n, ber=molecular_ber(channel, pol),
                      rate_bps=molecular_throughput(channel, pol))
    if ber_target is not None:
        if not 0 < ber_target < 1:
            raise ValidationError("ber_target must lie in (0, 1)")
        report["ber_target"] = ber_target
        floor = float(cumulative_capture_fraction(channel, T))
        if ber_target > floor:
            def gap(n):
                return molecular_ber(channel, SamplingPolicy(T, tau, n)) - ber_target
            hi = 1.0
            while gap(hi) > 0:
                hi *= 2.0
            n_star = brentq(gap, 1e-12, hi, xtol=1e-12, rtol=1e-12)
            report.update(n_for_target=n_star,
                          rate_at_target=molecular_throughput(channel, SamplingPolicy(T, tau, n_star)))
    return LinkReport(**report)
