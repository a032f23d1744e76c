"""
Strategy comparison report.

report.csv   long format: run, task, class, metric, value
report.txt   one aligned table per task (runs as columns, percentages), the
             coherence table and an ASCII heatmap per AU-score matrix
matrix.csv   emotion x AU mean scores of the preferred run (sjmt when present),
             plus matrix_<run>.csv for every run that has a matrix

Class rows of categorical tasks show recall, so the "Mean <task>" row is the mean
of per-class recalls and the "All images" row is the overall accuracy (the
count-weighted mean of those recalls). Multilabel tasks show (TP + TN) / N per class.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..exceptions import ContractError
from ..schemas import GroupBy, Strategy
from .au_scores import AUScoreMatrix, CoherenceResult
from .metrics import AccuracyReport, ClassAccuracy

logger = logging.getLogger(__name__)

ALL_IMAGES = "All images"
HEATMAP_LEVELS = " .:-=+*#%@"
REPORT_COLUMNS = ["run", "task", "class", "metric", "value"]


@dataclass
class RunMetrics:
    """Everything evaluated for one trained run."""
    run: str
    strategy: Strategy
    accuracies: Dict[str, AccuracyReport]
    matrix: Optional[AUScoreMatrix] = None
    coherence: Optional[CoherenceResult] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "run": self.run,
            "strategy": Strategy(self.strategy).value,
            "tasks": {
                task: {
                    "categorical": report.categorical,
                    "overall_accuracy": report.overall_accuracy,
                    "classes": [
                        {"class_id": c.class_id, "class_name": c.class_name, "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn}
                        for c in report.classes
                    ],
                }
                for task, report in self.accuracies.items()
            },
        }
        if self.matrix is not None:
            data["matrix"] = {
                "emotions": self.matrix.emotions,
                "aus": self.matrix.aus,
                "scores": self.matrix.scores.tolist(),
                "counts": self.matrix.counts.tolist(),
                "group_by": GroupBy(self.matrix.group_by).value,
            }
        if self.coherence is not None:
            data["coherence"] = {
                "precision": self.coherence.precision,
                "k": self.coherence.k,
                "macro": self.coherence.macro,
                "excluded": self.coherence.excluded,
            }
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunMetrics":
        accuracies = {
            task: AccuracyReport(
                task=task,
                categorical=entry["categorical"],
                classes=[ClassAccuracy(**c) for c in entry["classes"]],
                overall_accuracy=entry["overall_accuracy"],
            )
            for task, entry in data["tasks"].items()
        }
        matrix = None
        if "matrix" in data:
            m = data["matrix"]
            matrix = AUScoreMatrix(
                emotions=m["emotions"],
                aus=m["aus"],
                scores=np.asarray(m["scores"], dtype=np.float64),
                counts=np.asarray(m["counts"], dtype=np.int64),
                group_by=GroupBy(m["group_by"]),
            )
        coherence = None
        if "coherence" in data:
            c = data["coherence"]
            coherence = CoherenceResult(precision=c["precision"], k=c["k"], macro=c["macro"], excluded=c["excluded"])
        return cls(run=data["run"], strategy=Strategy(data["strategy"]), accuracies=accuracies, matrix=matrix, coherence=coherence)


@dataclass
class ExperimentReport:
    runs: List[RunMetrics]
    long: pd.DataFrame
    tables: Dict[str, pd.DataFrame]
    coherence: Optional[pd.DataFrame] = None
    matrices: Dict[str, AUScoreMatrix] = field(default_factory=dict)

    @property
    def run_names(self) -> List[str]:
        return [run.run for run in self.runs]

    def preferred_matrix(self) -> Optional[AUScoreMatrix]:
        for run in self.runs:
            if run.strategy == Strategy.SJMT and run.matrix is not None:
                return run.matrix
        return next(iter(self.matrices.values()), None)


def mean_row_label(task: str) -> str:
    return f"Mean {task}"


def _class_value(report: AccuracyReport, c: ClassAccuracy) -> float:
    if report.categorical:
        return c.recall if c.recall is not None else float("nan")
    return c.accuracy


def _mean_value(report: AccuracyReport) -> float:
    if report.categorical:
        return report.mean_recall if report.mean_recall is not None else float("nan")
    return report.mean_class_accuracy


def _long_rows(run: RunMetrics) -> List[Dict[str, Any]]:
    rows = []

    def add(task, label, metric, value):
        rows.append({"run": run.run, "task": task, "class": label, "metric": metric, "value": float(value)})

    for task, report in run.accuracies.items():
        for c in report.classes:
            add(task, c.class_name, "accuracy", c.accuracy)
            if report.categorical and c.recall is not None:
                add(task, c.class_name, "recall", c.recall)
        if report.categorical and report.mean_recall is not None:
            add(task, mean_row_label(task), "mean_recall", report.mean_recall)
        add(task, mean_row_label(task), "mean_accuracy", report.mean_class_accuracy)
        add(task, ALL_IMAGES, "accuracy", report.overall_accuracy)
    if run.coherence is not None:
        for emotion, value in run.coherence.precision.items():
            add("coherence", emotion, "precision", value)
        add("coherence", "macro", "precision", run.coherence.macro)
    return rows


def _task_table(task: str, runs: Sequence[RunMetrics]) -> pd.DataFrame:
    labels: List[str] = []
    columns: Dict[str, Dict[str, float]] = {}
    for run in runs:
        report = run.accuracies.get(task)
        if report is None:
            continue
        column = {c.class_name: _class_value(report, c) for c in report.classes}
        for name in column:
            if name not in labels:
                labels.append(name)
        column[mean_row_label(task)] = _mean_value(report)
        column[ALL_IMAGES] = report.overall_accuracy
        columns[run.run] = column
    index = labels + [mean_row_label(task), ALL_IMAGES]
    return pd.DataFrame({run: [column.get(label, np.nan) for label in index] for run, column in columns.items()}, index=index)


def build_report(runs: Sequence[RunMetrics]) -> ExperimentReport:
    """
    Assembles comparison tables over one or more runs.

    Raises:
        ContractError: If no runs are given or two runs share a name.
    """
    if not runs:
        raise ContractError("a report needs at least one run")
    names = [run.run for run in runs]
    if len(set(names)) != len(names):
        raise ContractError(f"run names must be unique, got {names}")

    rows = [row for run in runs for row in _long_rows(run)]
    long = pd.DataFrame(rows, columns=REPORT_COLUMNS)

    tasks: List[str] = []
    for run in runs:
        for task in run.accuracies:
            if task not in tasks:
                tasks.append(task)
    tables = {task: _task_table(task, runs) for task in tasks}

    coherent = [run for run in runs if run.coherence is not None]
    coherence = None
    if coherent:
        emotions: List[str] = []
        for run in coherent:
            emotions.extend(e for e in run.coherence.precision if e not in emotions)
        coherence = pd.DataFrame(
            {run.run: [run.coherence.precision.get(e, np.nan) for e in emotions] + [run.coherence.macro] for run in coherent},
            index=emotions + ["macro"],
        )
    matrices = {run.run: run.matrix for run in runs if run.matrix is not None}
    return ExperimentReport(runs=list(runs), long=long, tables=tables, coherence=coherence, matrices=matrices)


def ascii_heatmap(matrix: AUScoreMatrix) -> str:
    """One character per cell, darker for higher mean score; row counts on the right."""
    width = max(len(e) for e in matrix.emotions)
    header = " " * (width + 1) + " ".join(f"{au:>4}" for au in matrix.aus)
    lines = [header]
    last = len(HEATMAP_LEVELS) - 1
    for emotion, scores, count in zip(matrix.emotions, matrix.scores, matrix.counts):
        if count == 0:
            cells = " ".join(f"{'':>4}" for _ in scores)
        else:
            cells = " ".join(f"{HEATMAP_LEVELS[min(last, int(s * len(HEATMAP_LEVELS)))] * 2:>4}" for s in scores)
        lines.append(f"{emotion:<{width}} {cells}  n={int(count)}")
    lines.append(f"scale: '{HEATMAP_LEVELS}' from 0 to 1")
    return "\n".join(lines)


def _percent(frame: pd.DataFrame) -> str:
    return (frame * 100.0).round(1).to_string(na_rep="-")


def render_text(report: ExperimentReport) -> str:
    parts = []
    for task, table in report.tables.items():
        parts.append(f"== {task} (%) ==\n{_percent(table)}")
    if report.coherence is not None:
        parts.append(f"== coherence: top-k AU precision (%) ==\n{_percent(report.coherence)}")
    for run, matrix in report.matrices.items():
        grouping = GroupBy(matrix.group_by).value
        parts.append(f"== mean AU scores, {run}, grouped by {grouping} emotion ==\n{ascii_heatmap(matrix)}")
    return "\n\n".join(parts) + "\n"


def write_report(report: ExperimentReport, directory: Path) -> Dict[str, Path]:
    """Writes report.csv, report.txt and the matrix CSVs. Returns the written paths by name."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}

    written["report.csv"] = directory / "report.csv"
    report.long.to_csv(written["report.csv"], index=False, lineterminator="\n")

    written["report.txt"] = directory / "report.txt"
    written["report.txt"].write_text(render_text(report))

    preferred = report.preferred_matrix()
    if preferred is not None:
        written["matrix.csv"] = directory / "matrix.csv"
        preferred.to_frame().to_csv(written["matrix.csv"], index=False, lineterminator="\n")
    for run, matrix in report.matrices.items():
        name = f"matrix_{run}.csv"
        written[name] = directory / name
        matrix.to_frame().to_csv(written[name], index=False, lineterminator="\n")

    logger.info(f"Wrote report for {len(report.runs)} run(s) to {directory}")
    return written
