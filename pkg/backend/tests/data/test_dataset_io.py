import json

import numpy as np
import pytest

from backend.src.data.dataset_io import (
    load_dataset,
    load_ground_truth,
    load_manifest,
    save_all,
    save_dataset,
    save_ground_truth,
)
from backend.src.exceptions import DatasetParseError, DatasetValidationError


def _rewrite_cell(csv_path, line_number: int, column: int, value: str) -> None:
    lines = csv_path.read_text().splitlines()
    cells = lines[line_number - 1].split(",")
    cells[column] = value
    lines[line_number - 1] = ",".join(cells)
    csv_path.write_text("\n".join(lines) + "\n")


def test_saved_dataset_loads_back_identically(small_datasets, tmp_path):
    emotion, au, _ = small_datasets
    manifests = save_all([emotion, au], tmp_path)
    assert [p.name for p in manifests] == ["emotion.json", "au.json"]
    assert load_dataset(manifests[0]).equals(emotion)
    assert load_dataset(manifests[1]).equals(au)
    header = (tmp_path / "au.csv").read_text().splitlines()[0]
    assert header.startswith("sample_id,f0,") and header.endswith(",AU25,AU26")


def test_label_columns_disagreeing_with_manifest(small_datasets, tmp_path):
    emotion, _, _ = small_datasets
    manifest_path = save_dataset(emotion, tmp_path)
    manifest = json.loads(manifest_path.read_text())
    manifest["label_space"]["classes"] = manifest["label_space"]["classes"][:-1]
    manifest_path.write_text(json.dumps(manifest))
    with pytest.raises(DatasetValidationError, match="header has 16 columns"):
        load_dataset(manifest_path)


def test_bad_feature_cell_reports_line_and_field(small_datasets, tmp_path):
    emotion, _, _ = small_datasets
    manifest_path = save_dataset(emotion, tmp_path)
    _rewrite_cell(tmp_path / "emotion.csv", line_number=4, column=2, value="abc")
    with pytest.raises(DatasetParseError) as excinfo:
        load_dataset(manifest_path)
    assert excinfo.value.line == 4
    assert excinfo.value.field == "f1"
    assert "(line 4, field 'f1')" in str(excinfo.value)


def test_label_outside_zero_one(small_datasets, tmp_path):
    _, au, _ = small_datasets
    manifest_path = save_dataset(au, tmp_path)
    _rewrite_cell(tmp_path / "au.csv", line_number=3, column=-1, value="2")
    with pytest.raises(DatasetParseError) as excinfo:
        load_dataset(manifest_path)
    assert excinfo.value.line == 3
    assert excinfo.value.field == "AU26"


def test_short_row_and_row_count(small_datasets, tmp_path):
    _, au, _ = small_datasets
    manifest_path = save_dataset(au, tmp_path)
    csv_path = tmp_path / "au.csv"
    original = csv_path.read_text()

    lines = original.splitlines()
    lines[5] = ",".join(lines[5].split(",")[:-2])
    csv_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetValidationError, match="line 6"):
        load_dataset(manifest_path)

    csv_path.write_text("\n".join(original.splitlines()[:-1]) + "\n")
    with pytest.raises(DatasetValidationError, match="manifest declares 120"):
        load_dataset(manifest_path)


def test_missing_samples_file(small_datasets, tmp_path):
    _, au, _ = small_datasets
    manifest_path = save_dataset(au, tmp_path)
    (tmp_path / "au.csv").unlink()
    with pytest.raises(DatasetValidationError, match="not found"):
        load_dataset(manifest_path)


def test_malformed_manifests(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "name": "au",\n  oops\n}')
    with pytest.raises(DatasetParseError) as excinfo:
        load_manifest(broken)
    assert excinfo.value.line == 3

    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text(json.dumps({"name": "au"}))
    with pytest.raises(DatasetParseError) as excinfo:
        load_manifest(incomplete)
    assert excinfo.value.field is not None


def test_ground_truth_sidecar(small_datasets, tmp_path):
    _, _, ground_truth = small_datasets
    path = save_ground_truth(ground_truth, tmp_path / "ground_truth.csv")
    loaded = load_ground_truth(path)
    assert loaded.equals(ground_truth)
    assert loaded.au_ids == [1, 2, 4, 5, 6, 9, 12, 17, 25, 26]
    assert np.array_equal(loaded.aus_for(["au-000003"]), ground_truth.aus_for(["au-000003"]))
    with pytest.raises(DatasetValidationError, match="no rows"):
        loaded.rows_for(["compound-000000"])
