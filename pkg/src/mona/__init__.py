"""Muon-style orthogonalized optimizers with gradient-difference acceleration,
plus the landscapes, toy networks and checks used to study them."""

from .optimizers import (ALGORITHMS, AdamConfig, NonFiniteGradientError, Optimizer,
                         OptimizerConfig, ParamGroup, ParamKind, Precision, StepTrace,
                         adamw_acc_step, adamw_step, classify_param, default_alpha,
                         mona_lite_step, mona_step, muon_step)
from .orthogonalize import DEFAULT_NS, NsConfig, newton_schulz

__all__ = [
    "ALGORITHMS", "AdamConfig", "DEFAULT_NS", "NonFiniteGradientError", "NsConfig", "Optimizer",
    "OptimizerConfig", "ParamGroup", "ParamKind", "Precision", "StepTrace", "adamw_acc_step",
    "adamw_step", "classify_param", "default_alpha", "mona_lite_step", "mona_step", "muon_step",
    "newton_schulz",
]
