"""Trajectory Entropy for multimodal predictions and an entropy-gated level-k game."""
from .core import ModeTrajectory, MtpResult, Point2, validate_mtp
from .entropy import EntropyConfig, NormalizationVariant, PairConvention, trajectory_entropy
from .game import GateConfig, GameTrace, run_level_k_game, run_ungated
from .policies import FanPolicy, FanPolicyParams

__version__ = "0.1.0"

__all__ = [
    "EntropyConfig",
    "FanPolicy",
    "FanPolicyParams",
    "GameTrace",
    "GateConfig",
    "ModeTrajectory",
    "MtpResult",
    "NormalizationVariant",
    "PairConvention",
    "Point2",
    "run_level_k_game",
    "run_ungated",
    "trajectory_entropy",
    "validate_mtp",
]
