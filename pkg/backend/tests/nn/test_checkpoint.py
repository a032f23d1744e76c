import json

import numpy as np
import pytest

from backend.src.exceptions import ArtifactMismatchError
from backend.src.nn.checkpoint import load_checkpoint, save_checkpoint
from backend.src.nn.layers import Mode
from backend.src.nn.network import UNION_HEAD, init_network
from backend.src.schemas import HeadStrategy, NetworkSpec, Strategy


@pytest.fixture
def normalized_net(emotion_space, au_space, rng):
    spec = NetworkSpec(
        input_dim=5, width=6, blocks=2, normalization=True,
        head_strategy=HeadStrategy.SHARED_SELECTIVE, label_spaces=[emotion_space, au_space], seed=21,
    )
    net = init_network(spec)
    # Perturb parameters and running statistics away from their initial values
    for _, tensor in net.parameters():
        tensor.data += rng.standard_normal(tensor.shape) / 3.0
    for _ in range(3):
        net.forward(rng.standard_normal((8, 5)), mode=Mode.TRAIN)
    return net


def test_round_trip_is_bit_exact(normalized_net, tmp_path, rng):
    path = save_checkpoint(normalized_net, tmp_path / "ckpt.json", strategy=Strategy.SJMT, train_seed=3, step=40)
    restored, document = load_checkpoint(path)

    assert document.strategy == Strategy.SJMT
    assert document.train_seed == 3
    assert document.step == 40
    for (name, original), (_, loaded) in zip(normalized_net.parameters(), restored.parameters()):
        assert np.array_equal(original.data, loaded.data), name
    for name, state in normalized_net.norm_states().items():
        assert np.array_equal(state.running_mean, restored.norm_states()[name].running_mean)
        assert np.array_equal(state.running_var, restored.norm_states()[name].running_var)

    x = rng.standard_normal((4, 5))
    assert np.array_equal(normalized_net.forward(x)[UNION_HEAD].data, restored.forward(x)[UNION_HEAD].data)


def test_resaving_differs_only_in_created_at(normalized_net, tmp_path):
    first = json.loads(save_checkpoint(normalized_net, tmp_path / "a.json", step=1).read_text())
    second = json.loads(save_checkpoint(normalized_net, tmp_path / "b.json", step=1).read_text())
    first.pop("created_at")
    second.pop("created_at")
    assert first == second


def test_expected_label_spaces_must_match(normalized_net, tmp_path, emotion_space, au_space):
    path = save_checkpoint(normalized_net, tmp_path / "ckpt.json")
    load_checkpoint(path, expected_spaces=[emotion_space, au_space])
    with pytest.raises(ArtifactMismatchError, match="label spaces"):
        load_checkpoint(path, expected_spaces=[au_space, emotion_space])


def test_format_version_mismatch(normalized_net, tmp_path, monkeypatch):
    path = save_checkpoint(normalized_net, tmp_path / "ckpt.json")
    monkeypatch.setattr("backend.src.config.CHECKPOINT_FORMAT_VERSION", 2)
    with pytest.raises(ArtifactMismatchError, match="format version"):
        load_checkpoint(path)


def test_missing_and_corrupt_files(tmp_path):
    with pytest.raises(ArtifactMismatchError, match="does not exist"):
        load_checkpoint(tmp_path / "absent.json")
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_text("{not json")
    with pytest.raises(ArtifactMismatchError):
        load_checkpoint(corrupt)


def test_misshapen_parameter_is_rejected(normalized_net, tmp_path):
    path = save_checkpoint(normalized_net, tmp_path / "ckpt.json")
    document = json.loads(path.read_text())
    document["parameters"]["input.W"]["shape"] = [5, 6]
    path.write_text(json.dumps(document))
    with pytest.raises(ArtifactMismatchError, match="input.W"):
        load_checkpoint(path)


def test_missing_parameter_is_rejected(normalized_net, tmp_path):
    path = save_checkpoint(normalized_net, tmp_path / "ckpt.json")
    document = json.loads(path.read_text())
    del document["parameters"]["block1.fc2.b"]
    path.write_text(json.dumps(document))
    with pytest.raises(ArtifactMismatchError, match="block1.fc2.b"):
        load_checkpoint(path)
