"""
Dataset files.

A dataset is a JSON manifest (name, label space, feature dimension, samples path)
next to a CSV with one row per sample: sample_id, d feature columns, then one
0/1 column per class. Synthetic data also gets a ground-truth sidecar CSV:
sample_id, dataset, emotion, one 0/1 column per AU.
"""
import json
import logging
import re
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..exceptions import DatasetParseError, DatasetValidationError
from ..schemas import DatasetManifest
from .dataset import Dataset, GroundTruth
from .facs import au_name

logger = logging.getLogger(__name__)

SAMPLE_ID_COLUMN = "sample_id"


def feature_columns(dim: int) -> List[str]:
    return [f"f{i}" for i in range(dim)]


def _line_from_parser_error(message: str) -> Optional[int]:
    match = re.search(r"line (\d+)", message)
    return int(match.group(1)) if match else None


def save_dataset(dataset: Dataset, directory: Path) -> Path:
    """
    Writes `<name>.csv` and `<name>.json` into `directory`.

    Returns:
        Path of the manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{dataset.name}.csv"
    manifest_path = directory / f"{dataset.name}.json"

    frame = pd.DataFrame(dataset.features, columns=feature_columns(dataset.feature_dim))
    frame.insert(0, SAMPLE_ID_COLUMN, dataset.sample_ids)
    labels = pd.DataFrame(dataset.labels.astype(np.int64), columns=dataset.label_space.classes)
    frame = pd.concat([frame, labels], axis=1)
    frame.to_csv(csv_path, index=False, lineterminator="\n")

    manifest = DatasetManifest(
        name=dataset.name,
        label_space=dataset.label_space,
        feature_dim=dataset.feature_dim,
        samples_path=csv_path.name,
        num_samples=len(dataset),
    )
    manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n")
    logger.info(f"Saved dataset '{dataset.name}' ({len(dataset)} samples) to {manifest_path}")
    return manifest_path


def load_manifest(manifest_path: Path) -> DatasetManifest:
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"{manifest_path}: invalid JSON: {e.msg}", line=e.lineno) from e
    try:
        return DatasetManifest.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise DatasetParseError(f"{manifest_path}: {first['msg']}", field=field) from e


def _numeric_column(values: pd.Series, column: str, path: Path) -> np.ndarray:
    """Column of text cells as float64; the first unparsable or missing cell is reported with its file line."""
    try:
        numbers = values.to_numpy(dtype=object).astype(np.float64)
        if np.all(np.isfinite(numbers)):
            return numbers
    except (TypeError, ValueError):
        pass
    for row, cell in enumerate(values):
        try:
            number = float(cell)
        except (TypeError, ValueError):
            number = float("nan")
        if not np.isfinite(number):
            # Line 1 is the header
            raise DatasetParseError(f"{path}: not a finite number: {cell!r}", line=row + 2, field=column)
    raise DatasetParseError(f"{path}: unreadable numeric column", field=column)


def _read_raw(path: Path) -> pd.DataFrame:
    """Reads a CSV as text cells. Rows wider than the header raise ParserError naming the line."""
    return pd.read_csv(path, header=None, dtype=str, keep_default_na=False, na_values=[])


def load_dataset(manifest_path: Path) -> Dataset:
    """
    Loads a dataset from its manifest.

    Raises:
        DatasetParseError: Malformed manifest or CSV cell, with line/field location.
        DatasetValidationError: CSV layout disagrees with the manifest.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    csv_path = manifest_path.parent / manifest.samples_path
    space = manifest.label_space
    expected = [SAMPLE_ID_COLUMN] + feature_columns(manifest.feature_dim) + space.classes

    try:
        raw = _read_raw(csv_path)
    except pd.errors.ParserError as e:
        raise DatasetValidationError(
            f"{csv_path}: row width disagrees with the header at line {_line_from_parser_error(str(e))}; "
            f"manifest declares {manifest.feature_dim} features and {space.size} classes"
        ) from e
    except FileNotFoundError as e:
        raise DatasetValidationError(f"{manifest_path}: samples file {csv_path} not found") from e

    header = raw.iloc[0].tolist()
    if header != expected:
        raise DatasetValidationError(
            f"{csv_path}: header has {len(header)} columns, manifest '{manifest.name}' declares "
            f"{len(expected)} (sample_id + {manifest.feature_dim} features + {space.size} classes)"
        )
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = expected
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        line = int(np.flatnonzero(short)[0]) + 2
        raise DatasetValidationError(f"{csv_path}: line {line} has fewer columns than the header")

    n = len(frame)
    features = np.zeros((n, manifest.feature_dim))
    for j, column in enumerate(feature_columns(manifest.feature_dim)):
        features[:, j] = _numeric_column(frame[column], column, csv_path)
    labels = np.zeros((n, space.size))
    for j, column in enumerate(space.classes):
        labels[:, j] = _numeric_column(frame[column], column, csv_path)
    bad = np.argwhere(~np.isin(labels, (0.0, 1.0)))
    if len(bad):
        row, col = bad[0]
        raise DatasetParseError(f"{csv_path}: label must be 0 or 1", line=int(row) + 2, field=space.classes[col])

    if manifest.num_samples is not None and manifest.num_samples != n:
        raise DatasetValidationError(f"{csv_path}: {n} rows, manifest declares {manifest.num_samples}")

    return Dataset(
        name=manifest.name,
        label_space=space,
        features=features,
        labels=labels,
        sample_ids=frame[SAMPLE_ID_COLUMN].tolist(),
    )


def save_ground_truth(ground_truth: GroundTruth, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        SAMPLE_ID_COLUMN: ground_truth.sample_ids,
        "dataset": ground_truth.datasets,
        "emotion": ground_truth.emotions,
    })
    aus = pd.DataFrame(ground_truth.aus, columns=[au_name(au) for au in ground_truth.au_ids])
    pd.concat([frame, aus], axis=1).to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Saved ground truth for {len(ground_truth)} samples to {path}")
    return path


def load_ground_truth(path: Path) -> GroundTruth:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={SAMPLE_ID_COLUMN: str, "dataset": str, "emotion": str}, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise DatasetParseError(f"{path}: {e}", line=_line_from_parser_error(str(e))) from e
    au_columns = [c for c in frame.columns if c not in (SAMPLE_ID_COLUMN, "dataset", "emotion")]
    bad_columns = [c for c in au_columns if not re.fullmatch(r"AU\d+", c)]
    if bad_columns:
        raise DatasetValidationError(f"{path}: unexpected ground-truth columns {bad_columns}")
    aus = np.column_stack([_numeric_column(frame[c], c, path) for c in au_columns]).astype(np.int64)
    return GroundTruth(
        sample_ids=frame[SAMPLE_ID_COLUMN].tolist(),
        datasets=frame["dataset"].tolist(),
        emotions=frame["emotion"].tolist(),
        au_ids=[int(c[2:]) for c in au_columns],
        aus=aus,
    )


def save_all(datasets: Iterable[Dataset], directory: Path) -> List[Path]:
    return [save_dataset(dataset, directory) for dataset in datasets]
