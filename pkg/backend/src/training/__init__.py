"""Schedule, optimizer, training log and the strategy training loop."""
from .schedule import lr_schedule
from .optimizer import sgd_step
from .train_log import StepRecord, TrainLog, ValidationRecord
from .trainer import compute_batch_loss, train

__all__ = [
    "lr_schedule",
    "sgd_step",
    "StepRecord",
    "TrainLog",
    "ValidationRecord",
    "compute_batch_loss",
    "train",
]
