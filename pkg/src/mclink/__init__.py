"""Molecular diffusion OOK link through confined pipe networks."""

__version__ = "0.1.0"

from .diffusion import (
    ChannelParams,
    TimeWindow,
    cumulative_capture_fraction,
    hit_concentration,
    peak_time,
    windowed_capture,
)
from .errors import IncompleteTraceError, NoSignalError, UnsupportedRegimeError, ValidationError
from .link import (
    SamplingPolicy,
    link_report,
    molecular_ber,
    molecular_throughput,
    rate_surface,
    simulate_ook_link,
)
from .oracle import WalkConfig, empirical_capture, simulate_first_passage
from .propagation import (
    CENSORED,
    PipeTopology,
    builtin_dataset,
    calibration_dataset,
    classify_feasibility,
    fit_molecular,
    fit_radio,
    predict_delay_spread,
    predict_rssi,
)
from .pulse import (
    EmissionSchedule,
    PulseTrace,
    estimate_delay_spread,
    ingest_trace_csv,
    synthesize_impulse_trace,
    synthesize_train_trace,
)
