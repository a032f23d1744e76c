import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Deque, Dict, List, Optional

import numpy as np
import pandas as pd

from ..exceptions import ContractError

logger = logging.getLogger(__name__)

SMOOTHING_WINDOW = 100


@dataclass(frozen=True)
class StepRecord:
    step: int
    dataset: str
    lr: float
    loss: float


@dataclass(frozen=True)
class ValidationRecord:
    step: int
    task: str
    metric: str
    value: float


@dataclass
class TrainLog:
    """Per-step training records plus validation metrics taken every eval interval."""
    steps: List[StepRecord] = field(default_factory=list)
    validation: List[ValidationRecord] = field(default_factory=list)
    _window: Deque[float] = field(default_factory=lambda: deque(maxlen=SMOOTHING_WINDOW), repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.steps)

    def append(self, step: int, dataset: str, lr: float, loss: float) -> None:
        if self.steps and step <= self.steps[-1].step:
            raise ContractError(f"train log steps must increase, got {step} after {self.steps[-1].step}")
        self.steps.append(StepRecord(step=step, dataset=dataset, lr=lr, loss=loss))
        self._window.append(loss)

    def add_validation(self, step: int, metrics: Dict[str, Dict[str, float]]) -> None:
        for task, values in metrics.items():
            for metric, value in values.items():
                self.validation.append(ValidationRecord(step=step, task=task, metric=metric, value=value))

    @property
    def smoothed_loss(self) -> float:
        """Mean loss over the last SMOOTHING_WINDOW steps."""
        return float(np.mean(self._window)) if self._window else float("nan")

    @property
    def datasets(self) -> List[str]:
        return [record.dataset for record in self.steps]

    def latest_validation(self) -> Dict[str, Dict[str, float]]:
        if not self.validation:
            return {}
        last = self.validation[-1].step
        latest: Dict[str, Dict[str, float]] = {}
        for record in self.validation:
            if record.step == last:
                latest.setdefault(record.task, {})[record.metric] = record.value
        return latest

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(record) for record in self.steps], columns=["step", "dataset", "lr", "loss"])

    def validation_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(record) for record in self.validation], columns=["step", "task", "metric", "value"])

    def save(self, path: Path, validation_path: Optional[Path] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        if validation_path is not None and self.validation:
            self.validation_frame().to_csv(validation_path, index=False, lineterminator="\n")
        return path
