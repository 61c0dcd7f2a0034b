"""Lyapunov control of W-state generation in a three-node cavity network."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .control import ControlLaw, compute_T
from .detection import DetectionParams, NoClick, run_detection
from .dynamics import EvolutionSpec, Generator, StateInvalid, Trajectory, integrate
from .hilbert import SectorLeakage, SpaceDescriptor, build_space
from .model import ModelParams, NetworkModel, dark_state, dark_state_overlap
from .scenarios import run_scenario, sweep

__all__ = [
    "ConfigError", "ControlLaw", "DetectionParams", "EvolutionSpec", "Generator",
    "ModelParams", "NetworkModel", "NoClick", "ScenarioConfig", "SectorLeakage",
    "SpaceDescriptor", "StateInvalid", "Trajectory", "build_space", "compute_T",
    "dark_state", "dark_state_overlap", "integrate", "load_config", "parse_config",
    "run_detection", "run_scenario", "sweep",
]
