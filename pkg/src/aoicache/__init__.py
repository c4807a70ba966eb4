"""Edge-cache update simulator: age-of-information vs transmission-energy
tradeoff with a from-scratch DQN, comparison baselines, and an exact
small-instance solver."""

__version__ = "0.1.0"

from .env import CacheEnv, EnvConfig, MdpState, RequestBatch, StepOutcome
from .radio import EnergyTable, RadioConfig, SensorProfile
from .agent import AgentConfig, DqnAgent, ReplayBuffer, Transition, run_training
from .policies import (MpuPolicy, OuPolicy, RuPolicy, DqnPolicy, TablePolicy,
                       TinyMdpSpec, evaluate_policy, value_iteration)
from .harness import ExperimentConfig, load_config, run_experiment, validate_energy_model

__all__ = [
    "__version__",
    "CacheEnv", "EnvConfig", "MdpState", "RequestBatch", "StepOutcome",
    "EnergyTable", "RadioConfig", "SensorProfile",
    "AgentConfig", "DqnAgent", "ReplayBuffer", "Transition", "run_training",
    "MpuPolicy", "OuPolicy", "RuPolicy", "DqnPolicy", "TablePolicy",
    "TinyMdpSpec", "evaluate_policy", "value_iteration",
    "ExperimentConfig", "load_config", "run_experiment", "validate_energy_model",
]
