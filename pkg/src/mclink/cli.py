"""Command-line front end.

Every CSV artifact starts with one ``#`` comment line holding the tool version,
the subcommand and the fully resolved parameters (seed included), so two runs
with the same flags write byte-identical files.

``--config FILE`` loads a JSON object whose keys are option names with dashes
replaced by underscores (``{"x": 1.0, "walkers": 100000}``); flags given on the
command line take precedence.

Exit codes: 0 success, 2 invalid parameters, 3 no signal, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .diffusion import ChannelParams, TimeWindow, peak_time, windowed_capture
from .errors import NoSignalError, ValidationError
from .link import (
    SamplingPolicy, link_report, molecular_ber, molecular_throughput, ook_log_to_csv,
    rate_surface, rate_surface_to_csv, simulate_ook_link,
)
from .oracle import (
    WalkConfig, capture_tolerance, default_step, histogram_to_csv, simulate_first_passage,
)
from .propagation import (
    CENSORED, Endpoints, PipeTopology, builtin_dataset, dataset_to_csv,
    deduplicate, fit_molecular, fit_radio, predict_delay_spread, predict_rssi,
    read_dataset_csv, score_feasibility,
)
from .pulse import (
    EmissionSchedule, analytic_delay_spread, estimate_delay_spread, ingest_trace_csv,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NO_SIGNAL, EXIT_IO = 0, 2, 3, 4
_META_SKIP = {"command", "func", "config", "output"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _grid(text: str, name: str) -> np.ndarray:
    """``start:stop:count`` -> ``count`` evenly spaced values (inclusive)."""
    try:
        lo, hi, count = text.split(":")
        values = np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise ValidationError(f"{name} grid must look like start:stop:count, got {text!r}") from None
    if values.size == 0:
        raise ValidationError(f"{name} grid is empty")
    return values


def _surface_axes(items: list[str]) -> tuple[np.ndarray, np.ndarray]:
    axes = {}
    for item in items:
        key, sep, text = item.partition("=")
        if not sep or key not in ("tau", "T"):
            raise ValidationError(f"surface axis must be tau=... or T=..., got {item!r}")
        axes[key] = _grid(text, key)
    if set(axes) != {"tau", "T"}:
        raise ValidationError("--surface needs both tau=start:stop:count and T=start:stop:count")
    return axes["tau"], axes["T"]


def _header(args) -> str:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _META_SKIP}
    body = " ".join(f"{k}={v}" for k, v in params.items())
    return f"mclink {__version__} {args.command} {body}".rstrip()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _scalar(args, value: float) -> None:
    print(f"{value:.{args.precision}f}")


def _channel(args) -> ChannelParams:
    return ChannelParams(args.x, args.d, args.v, args.m)


def _policy(args, channel: ChannelParams) -> SamplingPolicy:
    T = peak_time(channel) if args.t0 is None else args.t0
    if getattr(args, "ntau", None) is not None:
        return SamplingPolicy(T, args.ntau, 1.0)
    tau = analytic_delay_spread(channel) if args.tau is None else args.tau
    return SamplingPolicy(T, tau, args.n)


def _require(args, *names) -> None:
    # checked after config loading so a config file can supply these
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValidationError(f"missing required option(s): {', '.join(missing)}")


def cmd_capture(args) -> int:
    _require(args, "t0", "tau")
    p = _channel(args)
    value = windowed_capture(p, TimeWindow(args.t0, args.tau))
    _scalar(args, value)
    _emit(args, f"# {_header(args)}\ncapture\n{value!r}\n")
    return EXIT_OK


def cmd_ber(args) -> int:
    p = _channel(args)
    value = molecular_ber(p, _policy(args, p))
    _scalar(args, value)
    _emit(args, f"# {_header(args)}\nber\n{value!r}\n")
    return EXIT_OK


def cmd_rate(args) -> int:
    p = _channel(args)
    if args.surface:
        taus, Ts = _surface_axes(args.surface)
        surface = rate_surface(p, taus, Ts, args.n)
        best = max((pt for row in surface for pt in row), key=lambda pt: pt.rate)
        print(f"max_rate_bps {best.rate:.{args.precision}f} at tau={best.tau:g} T={best.T:g}")
        _emit(args, rate_surface_to_csv(surface, _header(args)))
        return EXIT_OK
    value = molecular_throughput(p, _policy(args, p))
    _scalar(args, value)
    _emit(args, f"# {_header(args)}\nrate_bps\n{value!r}\n")
    return EXIT_OK


def cmd_delay_spread(args) -> int:
    with open(args.trace_file, encoding="utf-8") as fh:
        trace = ingest_trace_csv(fh)
    try:
        ds = estimate_delay_spread(trace)
    except NoSignalError:
        if args.no_signal_ok:
            print("NS")
            return EXIT_OK
        raise
    print(f"peak_time {ds.peak_time:.{args.precision}f}")
    print(f"cross_time {ds.cross_time:.{args.precision}f}")
    print(f"tau {ds.tau:.{args.precision}f}")
    return EXIT_OK


def _load_records(args):
    if args.builtin or (args.command == "predict" and not args.dataset):
        return builtin_dataset()
    if not args.dataset:
        raise ValidationError("give a dataset file or --builtin")
    with open(args.dataset, encoding="utf-8") as fh:
        return read_dataset_csv(fh)


def _fitted(args):
    records = _load_records(args)
    if not args.keep_duplicates:
        records = deduplicate(records)
    return records, fit_radio(records), fit_molecular(records)


def _fmt(v, fmt=".2f"):
    return "NS" if v is CENSORED or v is None else format(v, fmt)


def cmd_fit(args) -> int:
    records, rm, mm = _fitted(args)
    print(f"radio: intercept_dbm={rm.rssi_intercept:.4f} slope_db_per_m={rm.slope_db_per_m:.4f} "
          f"first_bend_loss_db={rm.first_bend_loss_db:.4f} sensitivity_dbm={rm.sensitivity_dbm:g}")
    print(f"molecular: intercept_s={mm.tau_intercept_s:.4f} slope_s_per_m={mm.slope_s_per_m:.4f} "
          f"bend_factor={mm.bend_factor:.4f} bend_factor_unclamped={mm.bend_factor_unclamped:.4f}")
    print("shape,length_m,bends,rssi_meas,rssi_pred,rssi_resid,delay_meas,delay_pred,delay_resid")
    for r in records:
        t = r.topology
        if not t.pipe_regime:
            continue
        pr, pd = predict_rssi(rm, t), predict_delay_spread(mm, t)
        rr = None if CENSORED in (pr, r.rssi_dbm) else r.rssi_dbm - pr
        dr = None if r.delay_spread_s is CENSORED else r.delay_spread_s - pd
        print(f"{t.shape_label},{t.total_length:g},{t.bend_count},{_fmt(r.rssi_dbm)},{_fmt(pr)},"
              f"{_fmt(rr)},{_fmt(r.delay_spread_s)},{_fmt(pd)},{_fmt(dr)}")
    print("shape,radio_pred,radio_meas,molecular_pred,molecular_meas,match")
    misses = 0
    for rec, pred, obs in score_feasibility(rm, mm, records):
        ok = pred == obs
        misses += not ok
        print(f"{rec.shape},{int(pred.radio_up)},{int(obs.radio_up)},"
              f"{int(pred.molecular_up)},{int(obs.molecular_up)},{'yes' if ok else 'NO'}")
    print(f"misclassified {misses}")
    return EXIT_OK


def cmd_predict(args) -> int:
    _require(args, "length")
    _, rm, mm = _fitted(args)
    if args.no_pipe:
        topo = PipeTopology(args.length, args.bends, args.shape, Endpoints.SEALED_TANKS, False)
    else:
        topo = PipeTopology(args.length, args.bends, args.shape)
    rep = link_report(rm, mm, topo, args.n, args.ber_target)
    print(f"rssi_dbm {_fmt(rep.rssi_dbm)}")
    print(f"radio_up {str(rep.radio_up).lower()}")
    print(f"molecular_up {str(rep.molecular_up).lower()}")
    print(f"delay_spread_s {_fmt(rep.delay_spread_s, '.3f')}")
    if rep.multiplier_n is not None:
        print(f"n {rep.multiplier_n:g}")
        print(f"ber {rep.ber:.5f}")
        print(f"rate_bps {rep.rate_bps:.5f}")
    if rep.ber_target is not None:
        print(f"ber_target {rep.ber_target:g}")
        print(f"n_for_target {_fmt(rep.n_for_target, '.5f')}")
        print(f"rate_at_target_bps {_fmt(rep.rate_at_target, '.5f')}")
    return EXIT_OK


def _walk_config(args, channel, horizon) -> WalkConfig:
    dt = default_step(channel) if args.dt is None else args.dt
    return WalkConfig(channel, dt, horizon, args.walkers, args.seed)


def cmd_oracle(args) -> int:
    p = _channel(args)
    horizon = 2.0 * peak_time(p) if args.horizon is None else args.horizon
    cfg = _walk_config(args, p, horizon)
    args.dt, args.horizon = cfg.step_dt, cfg.horizon_t
    edges = _grid(args.bins, "bins") if args.bins else np.linspace(0.0, horizon, 51)
    hist = simulate_first_passage(cfg, edges, args.workers)
    print(f"absorbed {hist.absorbed_total} of {hist.walker_count}")
    if args.t0 is not None and args.tau is not None:
        w = TimeWindow(args.t0, args.tau)
        steps = simulate_first_passage(cfg, [w.start_t, w.end_t], args.workers)
        empirical = steps.absorbed_total / steps.walker_count
        print(f"empirical_capture {empirical:.{args.precision}f}")
        if p.zero_drift:
            analytic = windowed_capture(ChannelParams(p.distance_x, p.diffusivity_d), w)
            tol = capture_tolerance(analytic, cfg.walker_count)
            print(f"analytic_capture {analytic:.{args.precision}f}")
            print(f"tolerance {tol:.{args.precision}f}")
            print(f"agree {'yes' if abs(empirical - analytic) <= tol else 'no'}")
    _emit(args, histogram_to_csv(hist, _header(args)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    _require(args, "bits")
    p = _channel(args)
    if args.period is None:
        args.period = 5.0 * peak_time(p)
    sched = EmissionSchedule.from_string(args.bits, args.period, args.spray)
    pol = _policy(args, p)
    args.t0, args.tau, args.n = pol.peak_arrival_T, pol.delay_spread_tau, pol.multiplier_n
    horizon = 20.0 * peak_time(p) if args.horizon is None else args.horizon
    args.walkers = int(round(p.molecules_m))
    cfg = _walk_config(args, p, horizon)
    args.dt, args.horizon = cfg.step_dt, cfg.horizon_t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = simulate_ook_link(p, sched, pol, args.threshold, cfg, args.workers)
    args.threshold = result.threshold
    print(f"threshold {result.threshold:.{args.precision}f}")
    print(f"empirical_ber {result.empirical_ber:.{args.precision}f}")
    _emit(args, ook_log_to_csv(result, sched, _header(args)))
    return EXIT_OK


def cmd_dataset(args) -> int:
    text = dataset_to_csv(builtin_dataset(), _header(args) if args.with_header else None)
    if args.output:
        _emit(args, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_channel(p):
    p.add_argument("--x", type=float, default=1.0, help="distance to receiver (m)")
    p.add_argument("--d", type=float, default=0.1, help="diffusivity (m^2/s)")
    p.add_argument("--v", type=float, default=0.0, help="drift velocity (m/s)")
    p.add_argument("--m", type=float, default=1.0, help="molecules per pulse")


def _add_policy(p):
    p.add_argument("--t0", type=float, default=None, help="window start T (s); default peak time")
    p.add_argument("--tau", type=float, default=None, help="delay spread tau (s); default analytic")
    p.add_argument("--n", type=float, default=1.0, help="window multiplier n")


def _add_walk(p):
    p.add_argument("--dt", type=float, default=None, help="walk step (s); default 1e-3 x^2/(2D)")
    p.add_argument("--horizon", type=float, default=None, help="walk horizon (s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _add_dataset(p):
    p.add_argument("dataset", nargs="?", help="dataset CSV (shape,length_m,bends,...)")
    p.add_argument("--builtin", action="store_true", help="use the built-in measurements")
    p.add_argument("--keep-duplicates", action="store_true",
                   help="fit on repeated geometries as-is instead of keeping the last")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mclink", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"mclink {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("-o", "--output", help="write the CSV artifact here")
    common.add_argument("--precision", type=int, default=5, help="printed decimals")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("capture", parents=[common], help="expected molecules captured in a window")
    _add_channel(p)
    p.add_argument("--t0", type=float, help="window start T (s), required")
    p.add_argument("--tau", type=float, help="window length (s), required")
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("ber", parents=[common], help="out-of-window molecule fraction")
    _add_channel(p)
    _add_policy(p)
    p.add_argument("--ntau", type=float, default=None, help="window length n*tau (s)")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("rate", parents=[common], help="throughput, or a throughput surface")
    _add_channel(p)
    _add_policy(p)
    p.add_argument("--ntau", type=float, default=None, help="window length n*tau (s)")
    p.add_argument("--surface", nargs=2, metavar="AXIS", help="tau=a:b:k T=a:b:k")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("delay-spread", parents=[common], help="peak-to-3dB delay spread of a trace")
    p.add_argument("trace_file")
    p.add_argument("--no-signal-ok", action="store_true", help="print NS instead of failing")
    p.set_defaults(func=cmd_delay_spread)

    p = sub.add_parser("fit", parents=[common], help="fit the propagation laws")
    _add_dataset(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="predict a topology's link report")
    _add_dataset(p)
    p.add_argument("--length", type=float, help="total pipe length (m), required")
    p.add_argument("--bends", type=int, default=0)
    p.add_argument("--shape", default="")
    p.add_argument("--no-pipe", action="store_true", help="sealed tanks without a pipe")
    p.add_argument("--n", type=float, default=None, help="window multiplier for throughput")
    p.add_argument("--ber-target", type=float, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("oracle", parents=[common], help="Brownian first-passage histogram")
    _add_channel(p)
    _add_walk(p)
    p.add_argument("--walkers", type=int, default=100_000)
    p.add_argument("--bins", default=None, help="histogram edges start:stop:count")
    p.add_argument("--t0", type=float, default=None, help="check window start (s)")
    p.add_argument("--tau", type=float, default=None, help="check window length (s)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo OOK link")
    _add_channel(p)
    _add_policy(p)
    _add_walk(p)
    p.add_argument("--bits", help="bit string, e.g. 10110 (required)")
    p.add_argument("--period", type=float, default=None, help="symbol period (s)")
    p.add_argument("--spray", type=float, default=0.5, help="spray duration (s)")
    p.add_argument("--threshold", type=float, default=None, help="detector threshold (molecules)")
    p.set_defaults(func=cmd_simulate, m=100.0)

    p = sub.add_parser("dataset", parents=[common], help="export the built-in measurements")
    p.add_argument("--with-header", action="store_true", help="prepend the metadata comment")
    p.set_defaults(func=cmd_dataset)
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            try:
                values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(values, dict):
            raise ValidationError("config file must hold a JSON object")
        known = set(vars(args))
        unknown = set(values) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"mclink: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoSignalError as exc:
        print(f"mclink: no signal: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    except OSError as exc:
        print(f"mclink: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
