"""Pulse responses, OOK pulse trains and delay-spread estimation."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import lambertw

from .diffusion import ChannelParams, hit_concentration, peak_time
from .errors import IncompleteTraceError, NoSignalError, ValidationError

__all__ = [
    "Origin",
    "PulseTrace",
    "DelaySpread",
    "EmissionSchedule",
    "SPREAD_PEAK_RATIO",
    "analytic_delay_spread",
    "synthesize_impulse_trace",
    "synthesize_train_trace",
    "pre_pulse_floors",
    "estimate_delay_spread",
    "ingest_trace_csv",
    "trace_to_csv",
]

MIN_SAMPLES = 8
MIN_PEAK_SNR = 10.0
JITTER_TOLERANCE = 0.01
BASELINE_FRACTION = 0.05

# Zero-drift pulse in units of its peak time: s^-1/2 exp(-1/(2s)). Its 3 dB
# point solves ln s + 1/s = 1 + ln 2, i.e. s = -1 / W0(-1/(2e)).
SPREAD_PEAK_RATIO = float(-1.0 / lambertw(-0.5 / math.e, 0).real) - 1.0


class Origin(enum.Enum):
    SYNTHESIZED = "synthesized"
    MEASURED = "measured"


@dataclass(frozen=True)
class PulseTrace:
    """Uniformly sampled amplitude; sample ``i`` is taken at ``start_time + i * sample_period``."""

    sample_period: float
    samples: np.ndarray
    origin: Origin = Origin.SYNTHESIZED
    start_time: float = 0.0

    def __post_init__(self):
        if not (self.sample_period > 0):
            raise ValidationError("sample_period must be > 0")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.samples.ndim != 1 or self.samples.size < MIN_SAMPLES:
            raise ValidationError(f"a trace needs at least {MIN_SAMPLES} samples")

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) * self.sample_period

    def scaled(self, factor: float) -> "PulseTrace":
        return PulseTrace(self.sample_period, self.samples * factor, self.origin, self.start_time)

    def shifted(self, offset: float) -> "PulseTrace":
        return PulseTrace(self.sample_period, self.samples, self.origin, self.start_time + offset)


@dataclass(frozen=True)
class DelaySpread:
    peak_time: float
    cross_time: float
    tau: float


@dataclass(frozen=True)
class EmissionSchedule:
    bit_sequence: tuple
    symbol_period: float
    spray_duration: float = 0.5

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bit_sequence)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError("bit_sequence must contain only 0 and 1")
        object.__setattr__(self, "bit_sequence", bits)
        if not (self.spray_duration > 0):
            raise ValidationError("spray_duration must be > 0")
        if not (self.symbol_period >= self.spray_duration):
            raise ValidationError("symbol_period must be >= spray_duration")

    @classmethod
    def from_string(cls, bits: str, symbol_period: float, spray_duration: float = 0.5):
        if not bits or set(bits) - {"0", "1"}:
            raise ValidationError(f"bit string must be nonempty 0/1 text, got {bits!r}")
        return cls(tuple(int(c) for c in bits), symbol_period, spray_duration)

    def symbol_starts(self) -> np.ndarray:
        return np.arange(len(self.bit_sequence)) * self.symbol_period


def analytic_delay_spread(p: ChannelParams) -> float:
    """Peak-to-3 dB delay spread of the zero-drift pulse, ``(s* - 1) x^2 / (2D)``."""
    if not p.zero_drift:
        raise ValidationError("closed-form delay spread assumes zero drift")
    return SPREAD_PEAK_RATIO * peak_time(p)


def _check_horizon(p: ChannelParams, sample_period: float, horizon: float) -> int:
    if not (sample_period > 0):
        raise ValidationError("sample_period must be > 0")
    need = 3.0 * peak_time(p)
    if not (horizon >= need):
        raise ValidationError(
            f"horizon {horizon:g} s must cover 3x the peak time ({need:g} s)"
        )
    n = int(math.floor(horizon / sample_period + 1e-9))
    if n < MIN_SAMPLES:
        raise ValidationError("horizon holds fewer than 8 samples")
    return n


def synthesize_impulse_trace(p: ChannelParams, sample_period: float, horizon: float) -> PulseTrace:
    n = _check_horizon(p, sample_period, horizon)
    t = np.arange(1, n + 1) * sample_period
    return PulseTrace(sample_period, hit_concentration(p, t), Origin.SYNTHESIZED, sample_period)


def synthesize_train_trace(p: ChannelParams, sched: EmissionSchedule,
                           sample_period: float, horizon: float) -> PulseTrace:
    """Superpose one impulse response per 1-bit, each released at its symbol start.

    The finite spray is treated as an impulse at the start of the symbol.
    """
    n = _check_horizon(p, sample_period, horizon)
    t = np.arange(1, n + 1) * sample_period
    out = np.zeros(n)
    for bit, start in zip(sched.bit_sequence, sched.symbol_starts()):
        if not bit:
            continue
        lag = t - start
        live = lag > 0
        out[live] += hit_concentration(p, lag[live])
    return PulseTrace(sample_period, out, Origin.SYNTHESIZED, sample_period)


def pre_pulse_floors(trace: PulseTrace, sched: EmissionSchedule) -> np.ndarray:
    """Minimum of the trace over the symbol interval preceding each symbol start.

    Entry 0 is 0 because nothing precedes the first symbol.
    """
    times = trace.times
    starts = sched.symbol_starts()
    floors = np.zeros(starts.size)
    for k in range(1, starts.size):
        sel = (times >= starts[k - 1]) & (times < starts[k])
        if np.any(sel):
            floors[k] = trace.samples[sel].min()
    return floors


def _noise_scale(a: np.ndarray) -> float:
    # robust sigma of white noise from first differences
    d = np.diff(a)
    mad = np.median(np.abs(d - np.median(d)))
    return 1.4826 * mad / math.sqrt(2.0)


def estimate_delay_spread(trace: PulseTrace) -> DelaySpread:
    """Time from the global maximum to the first later fall to ``1/sqrt(2)`` of it.

    The crossing is located by linear interpolation between the bracketing
    samples. Raises :class:`NoSignalError` when the peak does not stand out
    from the sample-to-sample noise and :class:`IncompleteTraceError` when the
    trace ends before the crossing.
    """
    a = trace.samples
    i_peak = int(np.argmax(a))
    peak = a[i_peak]
    prominence = peak - a.min()
    if not (peak > 0 and prominence > 0 and prominence >= MIN_PEAK_SNR * _noise_scale(a)):
        raise NoSignalError("no pulse stands out from the trace noise")
    level = peak / math.sqrt(2.0)
    below = np.nonzero(a[i_peak + 1:] <= level)[0]
    if below.size == 0:
        raise IncompleteTraceError("trace ends before falling to the 3 dB point")
    j = i_peak + 1 + int(below[0])
    frac = (a[j - 1] - level) / (a[j - 1] - a[j])
    offset = (j - 1 - i_peak) + frac
    dt = trace.sample_period
    peak_t = trace.start_time + i_peak * dt
    return DelaySpread(peak_t, peak_t + offset * dt, offset * dt)


def _data_lines(lines: Iterable[str]):
    for line in lines:
        s = line.strip()
        if s and not s.startswith("#"):
            yield s


def ingest_trace_csv(lines: Iterable[str]) -> PulseTrace:
    """Read a ``t_s,amplitude`` CSV and remove the pre-arrival baseline.

    The baseline is the median of the first 5% of samples; amplitudes are
    clamped at zero after subtraction.
    """
    reader = csv.reader(_data_lines(lines))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["t_s", "amplitude"]:
        raise ValidationError("trace CSV must start with the header 't_s,amplitude'")
    t, a = [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise ValidationError(f"row {lineno}: expected 2 columns, got {len(row)}")
        try:
            t.append(float(row[0]))
            a.append(float(row[1]))
        except ValueError:
            raise ValidationError(f"row {lineno}: non-numeric value in {row!r}") from None
    if len(t) < MIN_SAMPLES:
        raise ValidationError(f"trace has {len(t)} rows; at least {MIN_SAMPLES} required")
    t = np.asarray(t)
    a = np.asarray(a)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
        raise ValidationError("trace contains non-finite values")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise ValidationError("t_s must be strictly increasing")
    period = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(steps - period)) > JITTER_TOLERANCE * period:
        raise ValidationError("t_s spacing is not uniform within 1%")
    n_base = max(1, math.ceil(BASELINE_FRACTION * a.size))
    baseline = float(np.median(a[:n_base]))
    samples = np.clip(a - baseline, 0.0, None)
    return PulseTrace(period, samples, Origin.MEASURED, float(t[0]))


def trace_to_csv(trace: PulseTrace, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t_s", "amplitude"])
    for ti, ai in zip(trace.times, trace.samples):
        writer.writerow([repr(float(ti)), repr(float(ai))])
    return buf.getvalue()

