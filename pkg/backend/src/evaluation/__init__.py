"""Prediction rules, per-class accuracy, AU-score matrices and comparison reports."""
from .predict import Predictions, SpacePrediction, predict
from .metrics import AccuracyReport, ClassAccuracy, accuracy_per_class, dataset_accuracy, space_accuracy, validation_metrics
from .au_scores import AUScoreMatrix, CoherenceResult, au_mean_score_matrix, coherence_score
from .report import ExperimentReport, RunMetrics, build_report, write_report

__all__ = [
    "Predictions",
    "SpacePrediction",
    "predict",
    "AccuracyReport",
    "ClassAccuracy",
    "accuracy_per_class",
    "dataset_accuracy",
    "space_accuracy",
    "validation_metrics",
    "AUScoreMatrix",
    "CoherenceResult",
    "au_mean_score_matrix",
    "coherence_score",
    "ExperimentReport",
    "RunMetrics",
    "build_report",
    "write_report",
]
