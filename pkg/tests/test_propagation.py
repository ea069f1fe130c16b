import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mclink import (
    CENSORED, PipeTopology, UnsupportedRegimeError, ValidationError, builtin_dataset,
    calibration_dataset, classify_feasibility, fit_molecular, fit_radio,
    predict_delay_spread, predict_rssi,
)
from mclink.propagation import (
    Endpoints, MeasurementRecord, MolecularModel, RadioModel, dataset_to_csv,
    read_dataset_csv, score_feasibility,
)
from oracles import exact_line_fit

STRAIGHT_LEN = [1.3, 2.5, 3.6]
STRAIGHT_RSSI = [-62.0, -71.0, -80.0]
STRAIGHT_DELAY = [2.20, 2.91, 3.57]
BENT = [(3.7, 1, 4.29), (4.8, 1, 6.24), (3.8, 2, 9.07), (3.9, 2, 8.81), (2.6, 1, 4.45)]


def by_label(label, rows=None):
    rows = builtin_dataset() if rows is None else rows
    return [r for r in rows if r.shape == label]


def test_builtin_rows_verbatim():
    rows = builtin_dataset()
    assert len(rows) == 15
    (straight,) = by_label("Straight (0 bend, 3.6m)")
    assert (straight.rssi_dbm, straight.rssi_sd, straight.delay_spread_s, straight.delay_sd) == (-79.0, 1.0, 3.57, 0.4)
    l_rows = by_label("L-Shape (1 bend, 4.8m)")
    assert len(l_rows) == 2
    assert l_rows[0].rssi_dbm is CENSORED and l_rows[0].delay_spread_s == 6.24 and l_rows[0].delay_sd == 0.5
    (tank,) = by_label("1 Sealed Tank (2.5m)")
    assert tank.rssi_dbm is CENSORED and tank.delay_spread_s is CENSORED


def test_calibration_dataset_dedupes_last_wins():
    rows = calibration_dataset()
    assert len(rows) == 12
    straight36 = [r for r in rows if r.topology.geometry[:2] == (3.6, 0)]
    assert len(straight36) == 1 and straight36[0].rssi_dbm == -80.0
    pipes = [r for r in rows if r.topology.pipe_regime]
    assert len(pipes) == 8


def test_radio_fit_matches_exact_least_squares():
    want_b, want_s = exact_line_fit(STRAIGHT_LEN, STRAIGHT_RSSI)
    rm = fit_radio(calibration_dataset())
    assert rm.rssi_intercept == pytest.approx(want_b, abs=1e-12)
    assert rm.slope_db_per_m == pytest.approx(want_s, abs=1e-12)
    assert rm.slope_db_per_m == pytest.approx(-7.83, abs=0.01)
    # first-bend loss is the mean residual of the uncensored 1-bend rows
    resid = [-92 - (want_b + want_s * 3.7), -87 - (want_b + want_s * 2.6)]
    assert rm.first_bend_loss_db == pytest.approx(np.mean(resid), abs=1e-12)


def test_molecular_fit_matches_exact_least_squares():
    want_b, want_s = exact_line_fit(STRAIGHT_LEN, STRAIGHT_DELAY)
    mm = fit_molecular(calibration_dataset())
    assert mm.tau_intercept_s == pytest.approx(want_b, abs=1e-12)
    assert mm.slope_s_per_m == pytest.approx(want_s, abs=1e-12)
    assert mm.slope_s_per_m == pytest.approx(0.595, abs=1e-3)
    assert mm.tau_intercept_s == pytest.approx(1.41, abs=0.02)
    per_bend = [(d / (want_b + want_s * x)) ** (1 / b) for x, b, d in BENT]
    assert mm.bend_factor_unclamped == pytest.approx(math.exp(np.mean(np.log(per_bend))), rel=1e-12)
    assert 1.35 <= mm.bend_factor <= 1.5
    assert min(per_bend) > 1.18
    # the steepest single-row factor (Z-shape) sits just above 1.56
    assert max(per_bend) == pytest.approx(1.5683, abs=1e-4)


def test_prediction_examples():
    rm = RadioModel(-51.6)
    assert predict_rssi(rm, PipeTopology(3.6, 0)) == pytest.approx(-80.4)
    assert predict_rssi(rm, PipeTopology(4.8, 1)) is CENSORED
    assert predict_rssi(rm, PipeTopology(1e-9, 0)) == pytest.approx(-51.6)
    mm = MolecularModel(1.41, 0.6, 1.45)
    assert predict_delay_spread(mm, PipeTopology(4.8, 1)) == pytest.approx(6.2205, abs=1e-9)
    assert abs(predict_delay_spread(MolecularModel(1.41, 0.6, 1.5), PipeTopology(3.9, 2)) - 8.81) < 0.05 * 8.81
    assert predict_delay_spread(MolecularModel(1.41, 0.6, 9.0), PipeTopology(2.0, 0)) == pytest.approx(2.61)


def test_fit_errors():
    rows = [r for r in calibration_dataset() if r.shape != "Medium (0 bend, 2.5m)"
            and r.shape != "Short (0 bend, 1.3m)"]
    with pytest.raises(ValidationError):
        fit_radio(rows)
    dup = MeasurementRecord(PipeTopology(2.0, 0, "a"), -60.0, 0.0, 2.0, 0.0)
    bent = MeasurementRecord(PipeTopology(2.0, 1, "b"), -75.0, 0.0, 3.0, 0.0)
    with pytest.raises(ValidationError):
        fit_radio([dup, dup, bent])
    censored = [MeasurementRecord(r.topology, CENSORED, CENSORED, CENSORED, CENSORED)
                for r in calibration_dataset()]
    with pytest.raises(ValidationError):
        fit_radio(censored)
    with pytest.raises(ValidationError):
        fit_molecular(censored)


def synthetic(rm, mm, lengths, bends):
    rows = []
    for x, b in zip(lengths, bends):
        topo = PipeTopology(x, b, f"s{x}-{b}")
        rssi = rm.rssi_intercept + rm.slope_db_per_m * x + (rm.first_bend_loss_db if b else 0.0)
        if rssi < -99.0:
            rssi = CENSORED
        rows.append(MeasurementRecord(topo, rssi, 0.0, predict_delay_spread(mm, topo), 0.0))
    return rows


def test_exact_recovery_of_the_stated_laws():
    rm = RadioModel(-50.0, -8.0, -10.0)
    mm = MolecularModel(1.41, 0.6, 1.42)
    rows = synthetic(rm, mm, [0.5, 1.0, 2.0, 3.0, 1.5, 2.5, 2.2], [0, 0, 0, 0, 1, 1, 2])
    frm = fit_radio(rows)
    fmm = fit_molecular(rows)
    assert abs(frm.rssi_intercept + 50) < 1e-9 and abs(frm.slope_db_per_m + 8) < 1e-9
    assert abs(frm.first_bend_loss_db + 10) < 1e-9
    assert abs(fmm.tau_intercept_s - 1.41) < 1e-9 and abs(fmm.slope_s_per_m - 0.6) < 1e-9
    assert abs(fmm.bend_factor - 1.42) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-60, -30), st.floats(-12, -2), st.floats(-20, 0), st.floats(0.1, 3),
       st.floats(0.1, 2), st.floats(1.35, 1.5))
def test_fit_round_trip_property(b, s, loss, tb, ts, f):
    rm = RadioModel(b, s, loss)
    mm = MolecularModel(tb, ts, f)
    rows = synthetic(rm, mm, [0.4, 1.1, 1.9, 0.8, 1.3], [0, 0, 0, 1, 2])
    frm = fit_radio(rows)
    fmm = fit_molecular(rows)
    for got, want in [(frm.rssi_intercept, b), (frm.slope_db_per_m, s), (frm.first_bend_loss_db, loss),
                      (fmm.tau_intercept_s, tb), (fmm.slope_s_per_m, ts), (fmm.bend_factor, f)]:
        assert abs(got - want) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(0, 5), st.integers(0, 5))
def test_monotonicity(x1, x2, b1, b2):
    rm = RadioModel(-40.0, -3.0, -10.0, sensitivity_dbm=-1e9)
    mm = MolecularModel(1.41, 0.6, 1.4)
    (x1, x2), (b1, b2) = sorted((x1, x2)), sorted((b1, b2))
    assert predict_rssi(rm, PipeTopology(x2, b2)) <= predict_rssi(rm, PipeTopology(x1, b1))
    if (x1, b1) != (x2, b2):
        assert predict_delay_spread(mm, PipeTopology(x2, b2)) > predict_delay_spread(mm, PipeTopology(x1, b1))
    # the bend step applies once
    assert predict_rssi(rm, PipeTopology(x1, 3)) == predict_rssi(rm, PipeTopology(x1, 1))


def test_classification_examples():
    rm = fit_radio(calibration_dataset())
    mm = fit_molecular(calibration_dataset())
    f = classify_feasibility(rm, mm, PipeTopology(4.8, 1))
    assert (f.radio_up, f.molecular_up) == (False, True)
    f = classify_feasibility(rm, mm, PipeTopology(1.3, 0))
    assert (f.radio_up, f.molecular_up) == (True, True)
    f = classify_feasibility(rm, mm, PipeTopology(2.5, 0, "tank", Endpoints.SEALED_TANKS, piped=False))
    assert (f.radio_up, f.molecular_up) == (False, False)
    with pytest.raises(UnsupportedRegimeError):
        classify_feasibility(rm, mm, PipeTopology(4.0, 0, "free", Endpoints.FREE_SPACE, piped=False))
    with pytest.raises(UnsupportedRegimeError):
        predict_rssi(rm, PipeTopology(4.0, 0, "open", Endpoints.OPEN_TANKS, piped=False))


def test_feasibility_scoring_has_single_miss():
    rows = calibration_dataset()
    scored = score_feasibility(fit_radio(rows), fit_molecular(rows), rows)
    misses = [rec.shape for rec, pred, obs in scored if pred != obs]
    assert misses == ["Long (2 bends, 3.9m)"]


def test_validation():
    with pytest.raises(ValidationError):
        PipeTopology(0.0, 0)
    with pytest.raises(ValidationError):
        PipeTopology(1.0, -1)
    with pytest.raises(ValidationError):
        PipeTopology(1.0, 1.5)
    with pytest.raises(ValidationError):
        MeasurementRecord(PipeTopology(1.0), -100.0, 1.0, 2.0, 0.1)
    with pytest.raises(ValidationError):
        MeasurementRecord(PipeTopology(1.0), -80.0, -1.0, 2.0, 0.1)
    with pytest.raises(ValidationError):
        RadioModel(-50.0, 1.0)
    with pytest.raises(ValidationError):
        MolecularModel(1.0, 0.6, 0.9)


def test_dataset_csv_round_trip():
    rows = builtin_dataset()
    text = dataset_to_csv(rows, "hdr")
    back = read_dataset_csv(text.splitlines())
    assert back == rows
    assert "NS" in text.splitlines()[3]


def test_dataset_csv_errors():
    with pytest.raises(ValidationError):
        read_dataset_csv([])
    with pytest.raises(ValidationError):
        read_dataset_csv(["a,b,c"])
    head = "shape,length_m,bends,rssi_dbm,rssi_sd,delay_s,delay_sd"
    with pytest.raises(ValidationError):
        read_dataset_csv([head, "x,1.0,0,-60,1"])
    with pytest.raises(ValidationError):
        read_dataset_csv([head, "x,1.0,zero,-60,1,2,0.1"])
    with pytest.raises(ValidationError):
        read_dataset_csv([head, "x,abc,0,-60,1,2,0.1"])
