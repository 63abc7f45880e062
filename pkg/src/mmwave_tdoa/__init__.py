"""Sampling-free TDOA localization simulator for mmWave impulse links."""

from .channel import (
    C0,
    AbsorptionTable,
    ChannelSpec,
    channel_response,
    ingest_absorption,
    noise_variance,
    propagate,
    transmit_psd,
)
from .detector import (
    DetectorBankConfig,
    ToaEstimate,
    ctma_output,
    iterative_toa,
    lpf_approximation,
    pulse_start_from_toa,
    sampling_toa,
)
from .errors import ConfigurationError, SimulationError
from .harness import (
    ExperimentConfig,
    TrialResult,
    aede,
    run_experiment,
    sweep_report,
    toa_sweep,
)
from .locate import BsLayout, ToaTriplet, solve_position, tdoa_ranges
from .pulse import (
    DEFAULT_STEP,
    PulseSpec,
    effective_duration,
    generate_pulse,
    half_power_band,
    spectral_peak,
)
from .trace import SignalTrace

__version__ = "0.1.0"

__all__ = [
    "AbsorptionTable",
    "BsLayout",
    "C0",
    "ChannelSpec",
    "ConfigurationError",
    "DEFAULT_STEP",
    "DetectorBankConfig",
    "ExperimentConfig",
    "PulseSpec",
    "SignalTrace",
    "SimulationError",
    "ToaEstimate",
    "ToaTriplet",
    "TrialResult",
    "aede",
    "channel_response",
    "ctma_output",
    "effective_duration",
    "generate_pulse",
    "half_power_band",
    "ingest_absorption",
    "iterative_toa",
    "lpf_approximation",
    "noise_variance",
    "propagate",
    "pulse_start_from_toa",
    "run_experiment",
    "sampling_toa",
    "solve_position",
    "spectral_peak",
    "sweep_report",
    "tdoa_ranges",
    "toa_sweep",
    "transmit_psd",
    "__version__",
]
