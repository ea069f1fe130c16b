"""Empirical radio and molecular propagation laws for tank-and-pipe networks.

Radio power falls linearly with pipe length plus a one-off loss at the first
bend. Molecular delay spread grows linearly with length and is multiplied by a
constant factor per bend. Both laws are calibrated on the built-in field
measurements, where "No Signal" readings are carried as :data:`CENSORED`.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .constants import RECEIVER_SENSITIVITY_DBM
from .errors import UnsupportedRegimeError, ValidationError

__all__ = [
    "Censored",
    "CENSORED",
    "Endpoints",
    "PipeTopology",
    "MeasurementRecord",
    "RadioModel",
    "MolecularModel",
    "Feasibility",
    "BEND_FACTOR_RANGE",
    "builtin_dataset",
    "calibration_dataset",
    "deduplicate",
    "predict_rssi",
    "predict_delay_spread",
    "fit_radio",
    "fit_molecular",
    "classify_feasibility",
    "score_feasibility",
    "dataset_to_csv",
    "read_dataset_csv",
]

BEND_FACTOR_RANGE = (1.35, 1.5)
CSV_COLUMNS = ["shape", "length_m", "bends", "rssi_dbm", "rssi_sd", "delay_s", "delay_sd"]
NS_TOKEN = "NS"


class Censored(enum.Enum):
    """A reading below the detection threshold ("No Signal")."""

    NS = "NS"

    def __str__(self):
        return NS_TOKEN


CENSORED = Censored.NS


class Endpoints(enum.Enum):
    SEALED_TANKS = "sealed_tanks"
    OPEN_TANKS = "open_tanks"
    FREE_SPACE = "free_space"


@dataclass(frozen=True)
class PipeTopology:
    """Pipe length and bend count between the transmitter and receiver zones.

    ``piped=False`` describes sealed tanks with no connecting pipe, where
    ``total_length`` is just the tank separation.
    """

    total_length: float
    bend_count: int = 0
    shape_label: str = ""
    endpoints: Endpoints = Endpoints.SEALED_TANKS
    piped: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.total_length) and self.total_length > 0):
            raise ValidationError(f"total_length must be > 0, got {self.total_length!r}")
        if int(self.bend_count) != self.bend_count or self.bend_count < 0:
            raise ValidationError(f"bend_count must be a nonnegative integer, got {self.bend_count!r}")

    @property
    def pipe_regime(self) -> bool:
        return self.endpoints is Endpoints.SEALED_TANKS and self.piped

    @property
    def geometry(self) -> tuple:
        return (self.total_length, int(self.bend_count), self.endpoints, self.piped)


@dataclass(frozen=True)
class MeasurementRecord:
    topology: PipeTopology
    rssi_dbm: float | Censored
    rssi_sd: float | Censored
    delay_spread_s: float | Censored
    delay_sd: float | Censored

    def __post_init__(self):
        if self.rssi_dbm is not CENSORED and self.rssi_dbm < RECEIVER_SENSITIVITY_DBM:
            raise ValidationError(
                f"an RSSI below {RECEIVER_SENSITIVITY_DBM} dBm is undetectable; record it as censored"
            )
        for sd in (self.rssi_sd, self.delay_sd):
            if sd is not CENSORED and sd < 0:
                raise ValidationError("standard deviations must be >= 0")

    @property
    def shape(self) -> str:
        return self.topology.shape_label


@dataclass(frozen=True)
class RadioModel:
    rssi_intercept: float
    slope_db_per_m: float = -8.0
    first_bend_loss_db: float = -10.0
    sensitivity_dbm: float = RECEIVER_SENSITIVITY_DBM

    def __post_init__(self):
        if not self.slope_db_per_m < 0:
            raise ValidationError("slope_db_per_m must be negative")
        if not self.first_bend_loss_db <= 0:
            raise ValidationError("first_bend_loss_db must be <= 0")


@dataclass(frozen=True)
class MolecularModel:
    tau_intercept_s: float
    slope_s_per_m: float = 0.6
    bend_factor: float = 1.4
    bend_factor_unclamped: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.slope_s_per_m > 0:
            raise ValidationError("slope_s_per_m must be positive")
        if not self.bend_factor >= 1:
            raise ValidationError("bend_factor must be >= 1")


@dataclass(frozen=True)
class Feasibility:
    radio_up: bool
    molecular_up: bool


def _pipe(length, bends, label):
    return PipeTopology(length, bends, label, Endpoints.SEALED_TANKS, True)


def _row(topo, rssi, rssi_sd, delay, delay_sd):
    return MeasurementRecord(topo, rssi, rssi_sd, delay, delay_sd)


def builtin_dataset() -> list[MeasurementRecord]:
    """Field measurements in printed order, repeated configurations included.

    Each value is the mean of 3-4 test batches with its standard deviation.
    """
    ns = CENSORED
    return [
        _row(PipeTopology(4.0, 0, "Free Space (4.0m)", Endpoints.FREE_SPACE, False), -70.0, 1.0, 17.0, 3.0),
        _row(PipeTopology(2.5, 0, "1 Sealed Tank (2.5m)", Endpoints.SEALED_TANKS, False), ns, ns, ns, ns),
        _row(PipeTopology(1.0, 0, "2 Sealed Tanks (1.0m)", Endpoints.SEALED_TANKS, False), ns, ns, ns, ns),
        _row(PipeTopology(4.0, 0, "2 Open Tanks (4.0m)", Endpoints.OPEN_TANKS, False), -90.0, 1.0, 65.0, 11.0),
        _row(_pipe(3.6, 0, "Straight (0 bend, 3.6m)"), -79.0, 1.0, 3.57, 0.4),
        _row(_pipe(3.7, 1, "L-Shape (1 bend, 3.7m)"), -92.0, 0.0, 4.29, 0.3),
        _row(_pipe(4.8, 1, "L-Shape (1 bend, 4.8m)"), ns, ns, 6.24, 0.5),
        _row(_pipe(3.8, 2, "Z-Shape (2 bends, 3.8m)"), -93.0, 3.0, 9.07, 2.0),
        _row(_pipe(3.9, 2, "U-Shape (2 bends, 3.9m)"), ns, ns, 8.81, 1.1),
        _row(_pipe(1.3, 0, "Short (0 bend, 1.3m)"), -62.0, 1.0, 2.20, 0.2),
        _row(_pipe(2.5, 0, "Medium (0 bend, 2.5m)"), -71.0, 1.0, 2.91, 0.4),
        _row(_pipe(2.6, 1, "Medium (1 bend, 2.6m)"), -87.0, 1.0, 4.45, 0.4),
        _row(_pipe(3.6, 0, "Long (0 bend, 3.6m)"), -80.0, 1.0, 3.57, 0.4),
        _row(_pipe(3.9, 2, "Long (2 bends, 3.9m)"), ns, ns, 8.81, 1.1),
        _row(_pipe(4.8, 1, "L-Shape (1 bend, 4.8m)"), ns, ns, 6.24, 0.5),
    ]


def deduplicate(records: Iterable[MeasurementRecord]) -> list[MeasurementRecord]:
    """One record per geometry; the last occurrence wins and keeps its position."""
    out: dict[tuple, MeasurementRecord] = {}
    for rec in records:
        key = rec.topology.geometry
        if key in out:
            del out[key]
        out[key] = rec
    return list(out.values())


def calibration_dataset() -> list[MeasurementRecord]:
    """The built-in measurements reduced to one row per distinct geometry (12 rows)."""
    return deduplicate(builtin_dataset())


def _require_pipe(topo: PipeTopology) -> None:
    if not topo.pipe_regime:
        raise UnsupportedRegimeError(
            "propagation laws apply only to sealed tanks joined by a pipe"
        )


def predict_rssi(m: RadioModel, topo: PipeTopology) -> float | Censored:
    _require_pipe(topo)
    rssi = m.rssi_intercept + m.slope_db_per_m * topo.total_length
    if topo.bend_count >= 1:
        rssi += m.first_bend_loss_db
    return CENSORED if rssi < m.sensitivity_dbm else rssi


def predict_delay_spread(m: MolecularModel, topo: PipeTopology) -> float:
    _require_pipe(topo)
    straight = m.tau_intercept_s + m.slope_s_per_m * topo.total_length
    return straight * m.bend_factor ** int(topo.bend_count)


def _line_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise ValidationError("a line fit needs at least two distinct pipe lengths")
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    return ym - slope * xm, slope


def _pipe_rows(data, attr):
    return [r for r in data if r.topology.pipe_regime and getattr(r, attr) is not CENSORED]


def fit_radio(data: Iterable[MeasurementRecord],
              sensitivity_dbm: float = RECEIVER_SENSITIVITY_DBM) -> RadioModel:
    """Least-squares length law on straight pipes; first-bend loss from 1-bend residuals.

    Censored rows are excluded from the fit.
    """
    rows = _pipe_rows(data, "rssi_dbm")
    straight = [r for r in rows if r.topology.bend_count == 0]
    bent = [r for r in rows if r.topology.bend_count == 1]
    if len(straight) < 2 or not bent:
        raise ValidationError(
            "radio fit needs >= 2 uncensored straight rows and >= 1 uncensored 1-bend row"
        )
    intercept, slope = _line_fit([r.topology.total_length for r in straight],
                                 [r.rssi_dbm for r in straight])
    residuals = [r.rssi_dbm - (intercept + slope * r.topology.total_length) for r in bent]
    bend_loss = float(np.mean(residuals))
    if slope >= 0:
        raise ValidationError(f"fitted radio slope {slope:.3g} dB/m is not a loss")
    return RadioModel(intercept, slope, min(bend_loss, 0.0), sensitivity_dbm)


def fit_molecular(data: Iterable[MeasurementRecord],
                  clamp: tuple[float, float] = BEND_FACTOR_RANGE) -> MolecularModel:
    """Least-squares length law on straight pipes; geometric-mean per-bend factor.

    The factor is clamped to ``clamp``; the raw estimate is kept in
    ``bend_factor_unclamped``.
    """
    rows = _pipe_rows(data, "delay_spread_s")
    straight = [r for r in rows if r.topology.bend_count == 0]
    bent = [r for r in rows if r.topology.bend_count > 0]
    if len(straight) < 2 or not bent:
        raise ValidationError(
            "molecular fit needs >= 2 straight rows and >= 1 bent row with delay spreads"
        )
    intercept, slope = _line_fit([r.topology.total_length for r in straight],
                                 [r.delay_spread_s for r in straight])
    if slope <= 0:
        raise ValidationError(f"fitted delay slope {slope:.3g} s/m is not positive")
    logs = []
    for r in bent:
        base = intercept + slope * r.topology.total_length
        logs.append(math.log(r.delay_spread_s / base) / r.topology.bend_count)
    raw = math.exp(math.fsum(logs) / len(logs))
    lo, hi = clamp
    return MolecularModel(intercept, slope, min(max(raw, lo), hi), raw)


def classify_feasibility(rm: RadioModel, mm: MolecularModel, topo: PipeTopology) -> Feasibility:
    """Radio is up when the predicted RSSI clears sensitivity; molecules pass any pipe."""
    if topo.endpoints is Endpoints.SEALED_TANKS and not topo.piped:
        return Feasibility(False, False)
    _require_pipe(topo)
    return Feasibility(predict_rssi(rm, topo) is not CENSORED, True)


def score_feasibility(rm: RadioModel, mm: MolecularModel,
                      data: Iterable[MeasurementRecord]) -> list[tuple[MeasurementRecord, Feasibility, Feasibility]]:
    """``(record, predicted, observed)`` for every sealed-tank record, censored rows included."""
    out = []
    for rec in data:
        topo = rec.topology
        if topo.endpoints is not Endpoints.SEALED_TANKS:
            continue
        observed = Feasibility(rec.rssi_dbm is not CENSORED, rec.delay_spread_s is not CENSORED)
        out.append((rec, classify_feasibility(rm, mm, topo), observed))
    return out


def _fmt(v) -> str:
    if v is CENSORED:
        return NS_TOKEN
    return repr(float(v))


def dataset_to_csv(records: Iterable[MeasurementRecord], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# {header}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        t = r.topology
        writer.writerow([t.shape_label, repr(float(t.total_length)), int(t.bend_count),
                         _fmt(r.rssi_dbm), _fmt(r.rssi_sd), _fmt(r.delay_spread_s), _fmt(r.delay_sd)])
    return buf.getvalue()


def _infer_endpoints(label: str) -> tuple[Endpoints, bool]:
    low = label.lower()
    if "free space" in low:
        return Endpoints.FREE_SPACE, False
    if "open tank" in low:
        return Endpoints.OPEN_TANKS, False
    if "sealed tank" in low:
        return Endpoints.SEALED_TANKS, False
    return Endpoints.SEALED_TANKS, True


def _cell(value: str, lineno: int):
    value = value.strip()
    if value == NS_TOKEN:
        return CENSORED
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"row {lineno}: bad numeric cell {value!r}") from None


def read_dataset_csv(lines: Iterable[str]) -> list[MeasurementRecord]:
    """Parse the dataset CSV; ``NS`` marks a censored cell.

    An optional trailing ``endpoints`` column (``sealed_tanks``, ``open_tanks``,
    ``free_space`` or ``sealed_no_pipe``) overrides the label-based inference
    (labels mentioning free space, open tanks or sealed tanks are baselines;
    anything else is a sealed-tank pipe).
    """
    reader = csv.reader(l for l in lines if l.strip() and not l.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None:
        raise ValidationError("dataset CSV is empty")
    header = [h.strip() for h in header]
    has_endpoints = header == CSV_COLUMNS + ["endpoints"]
    if header != CSV_COLUMNS and not has_endpoints:
        raise ValidationError(f"dataset CSV header must be {','.join(CSV_COLUMNS)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ValidationError(f"row {lineno}: expected {len(header)} columns")
        label = row[0].strip()
        length = _cell(row[1], lineno)
        try:
            bends = int(row[2])
        except ValueError:
            raise ValidationError(f"row {lineno}: bends must be an integer") from None
        if length is CENSORED:
            raise ValidationError(f"row {lineno}: length cannot be censored")
        if has_endpoints:
            tag = row[7].strip()
            if tag == "sealed_no_pipe":
                endpoints, piped = Endpoints.SEALED_TANKS, False
            else:
                try:
                    endpoints = Endpoints(tag)
                except ValueError:
                    raise ValidationError(f"row {lineno}: unknown endpoints {tag!r}") from None
                piped = endpoints is Endpoints.SEALED_TANKS
        else:
            endpoints, piped = _infer_endpoints(label)
        topo = PipeTopology(length, bends, label, endpoints, piped)
        records.append(MeasurementRecord(topo, *(_cell(c, lineno) for c in row[3:7])))
    if not records:
        raise ValidationError("dataset CSV has no rows")
    return records
