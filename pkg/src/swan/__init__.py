"""Tri-hybrid beamforming for segmented-waveguide pinching-antenna receivers."""
from .geometry import GeometryConfig, RadioConfig, uplink_channel
from .metrics import BeamformerState, EnergyModel, sum_rate
from .fc import bcd_fc
from .pc import bcd_pc, build_interleaved
from .harness import ScenarioConfig, run_scenario

__all__ = ["GeometryConfig", "RadioConfig", "uplink_channel", "BeamformerState",
           "EnergyModel", "sum_rate", "bcd_fc", "bcd_pc", "build_interleaved",
           "ScenarioConfig", "run_scenario"]
__version__ = "0.1.0"
