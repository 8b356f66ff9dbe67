"""Dyna-style hybrids: model rollouts as extra data for a model-free
improver, gated or penalized by ensemble uncertainty."""

from .buffer import ReplayBuffer
from .improve import offpolicy_improve, soft_losses
from .synth import SynthStats, SyntheticRows, synthesize_rollouts
from .train import HYBRID_IDS, HybridConfig, train_hybrid
from .uncertainty import USADGate, calibrate_usad, mopo_penalized_reward, usad

__all__ = [
    "HYBRID_IDS",
    "HybridConfig",
    "ReplayBuffer",
    "SynthStats",
    "SyntheticRows",
    "USADGate",
    "calibrate_usad",
    "mopo_penalized_reward",
    "offpolicy_improve",
    "soft_losses",
    "synthesize_rollouts",
    "train_hybrid",
    "usad",
]
