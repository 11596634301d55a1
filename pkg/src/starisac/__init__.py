"""Alternating-optimization beamforming for an active STAR-RIS assisted
integrated sensing and communication downlink."""
from .ao import AoOptions, AoTrace, initialize, run_ao, write_trace
from .channels import ChannelSet, equivalent_channel, equivalent_channels, generate_channel_set
from .fp import fp_objective, update_gamma, update_rho
from .metrics import (BeamformingState, Noise, StarState, check_feasibility, radar_snr_worst,
                      ris_power, sum_rate, user_sinr)
from .scenario import ConfigError, Mode, ScenarioConfig, build_scenario, desk_scenario, full_scale_scenario

__version__ = "0.1.0"

__all__ = [
    "AoOptions", "AoTrace", "BeamformingState", "ChannelSet", "ConfigError", "Mode", "Noise",
    "ScenarioConfig", "StarState", "build_scenario", "check_feasibility", "desk_scenario",
    "equivalent_channel", "equivalent_channels", "fp_objective", "generate_channel_set",
    "initialize", "full_scale_scenario", "radar_snr_worst", "ris_power", "run_ao", "sum_rate",
    "update_gamma", "update_rho", "user_sinr", "write_trace",
]
