"""Adaptive segmented robust loss (ASRL) with a gradient-boosted tree engine."""

from asrl.errors import DataError, DomainError, InvariantError
from asrl.gbdt import Dataset, GBDTModel, RegressionTree, TrainConfig, build_tree, predict, train
from asrl.losses import (
    ASRLConfig,
    ASRLState,
    Absolute,
    Asrl,
    Huber,
    Squared,
    asrl_refresh,
)

__version__ = "0.1.0"
