from .core import (
    BacklogEstimate,
    ColdStart,
    History,
    LstmPredictor,
    MovingAveragePredictor,
    N_FEATURES,
    Observation,
    OraclePredictor,
    Triplet,
    history_features,
    mse,
    observation_features,
    predict,
)
from .lstm import LstmModel, TrainConfig, TrainResult, TrainingDiverged, gradient_check, train

__all__ = [
    "BacklogEstimate", "ColdStart", "History", "LstmPredictor", "MovingAveragePredictor",
    "N_FEATURES", "Observation", "OraclePredictor", "Triplet", "history_features", "mse",
    "observation_features", "predict", "LstmModel", "TrainConfig", "TrainResult",
    "TrainingDiverged", "gradient_check", "train",
]
