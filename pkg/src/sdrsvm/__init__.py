"""Sparse reject-option kernel classifiers trained with the double ramp loss.

The l1-regularized double-ramp risk is minimized by DC programming: each
iteration solves one linear program with a bundled dense simplex solver.
"""
__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    CorruptModelError,
    DataError,
    DomainError,
    InvalidConfigError,
    LpIterationLimit,
    ModelFormatError,
    SdrSvmError,
    ShapeError,
    TrainingError,
    VersionMismatchError,
)
from .kernel import KernelSpec, eval_kernel, gram_matrix  # noqa: E402
from .loss import LossConfig, bayes_discriminant, l_d, l_dr  # noqa: E402
from .model import SavedModel, decision_value, predict, support_count  # noqa: E402
from .trainer import ModelParams, TrainConfig, TrainReport, train  # noqa: E402

__all__ = [
    "__version__",
    "LossConfig",
    "l_d",
    "l_dr",
    "bayes_discriminant",
    "KernelSpec",
    "eval_kernel",
    "gram_matrix",
    "TrainConfig",
    "ModelParams",
    "TrainReport",
    "train",
    "SavedModel",
    "decision_value",
    "predict",
    "support_count",
    "SdrSvmError",
    "InvalidConfigError",
    "DomainError",
    "ShapeError",
    "LpIterationLimit",
    "TrainingError",
    "ModelFormatError",
    "CorruptModelError",
    "VersionMismatchError",
    "DataError",
]
