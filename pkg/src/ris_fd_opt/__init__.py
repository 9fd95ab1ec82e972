"""Joint BS/RIS beamforming for RIS-assisted full-duplex links."""
from .channels import ChannelSet, RicianParams, ScenarioGeometry, Sizes, generate_drop
from .fris import FrisConfig, FrisResult, run_fris
from .system import PowerConfig, RisPhase, rates

__all__ = ["ChannelSet", "FrisConfig", "FrisResult", "PowerConfig", "RicianParams", "RisPhase",
           "ScenarioGeometry", "Sizes", "generate_drop", "rates", "run_fris"]
__version__ = "0.1.0"
