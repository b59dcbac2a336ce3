"""Population process-algebra performance engine with 5G MBS signalling models."""

from .core import ModelSpec, PopulationModel, compile_model, validate
from .ctmc import enumerate_states, expected_throughput, steady_state_distribution
from .errors import PepaError
from .fluid import SteadyStateResult, integrate_to_steady_state
from .parser import parse_model, serialize_model

__version__ = "0.1.0"

__all__ = [
    "ModelSpec", "PopulationModel", "compile_model", "validate", "parse_model",
    "serialize_model", "integrate_to_steady_state", "SteadyStateResult",
    "enumerate_states", "steady_state_distribution", "expected_throughput",
    "PepaError",
]
