from .data import LabeledDataset, Scaler
from .training import (
    Estimator,
    EstimatorParams,
    cross_validate,
    recalibrate,
    train,
)

__all__ = [
    "Estimator",
    "EstimatorParams",
    "LabeledDataset",
    "Scaler",
    "cross_validate",
    "recalibrate",
    "train",
]
