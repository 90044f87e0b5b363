"""Slotted random multiple access with a SIC receiver: simulation and analysis."""

__version__ = "0.1.0"

from .model import SystemConfig, config_hash, slot_time, target_snr
from .policy import SchemeParams, adaptive_params, fixed_params
from .sic import DecodeOutcome, MhTable, decode_slot, estimate_mh, mh_table
from .analytic import FixedMetrics, fixed_metrics
from .sim import SimConfig, SimMetrics, aoi_time_average, replicate, run

__all__ = [
    "__version__",
    "SystemConfig",
    "config_hash",
    "slot_time",
    "target_snr",
    "SchemeParams",
    "adaptive_params",
    "fixed_params",
    "DecodeOutcome",
    "MhTable",
    "decode_slot",
    "estimate_mh",
    "mh_table",
    "FixedMetrics",
    "fixed_metrics",
    "SimConfig",
    "SimMetrics",
    "aoi_time_average",
    "replicate",
    "run",
]
