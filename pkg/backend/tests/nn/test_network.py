import numpy as np
import pytest

from backend.src.exceptions import ConfigError, ShapeError
from backend.src.nn.layers import Mode
from backend.src.nn.network import UNION_HEAD, Network, init_network, network_spec_for
from backend.src.schemas import HeadStrategy, LabelKind, LabelSpace, NetworkConfig, NetworkSpec, Strategy


def _spec(spaces, head_strategy, input_dim=6, width=8, blocks=2, seed=7, normalization=False):
    return NetworkSpec(
        input_dim=input_dim,
        width=width,
        blocks=blocks,
        normalization=normalization,
        head_strategy=head_strategy,
        label_spaces=spaces,
        seed=seed,
    )


def test_same_seed_gives_identical_parameters(emotion_space, au_space):
    spec = _spec([emotion_space, au_space], HeadStrategy.SHARED_SELECTIVE)
    first, second = init_network(spec), init_network(spec)
    for (name_a, a), (name_b, b) in zip(first.parameters(), second.parameters()):
        assert name_a == name_b
        assert np.array_equal(a.data, b.data)


def test_different_seeds_give_different_parameters(emotion_space):
    a = init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK, seed=1))
    b = init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK, seed=2))
    assert not np.array_equal(a.named_parameters()["input.W"].data, b.named_parameters()["input.W"].data)


def test_parameter_count_closed_form(emotion_space, au_space):
    net = init_network(_spec([emotion_space, au_space], HeadStrategy.SHARED_SELECTIVE, input_dim=32, width=64, blocks=3))
    union = emotion_space.size + au_space.size
    expected = 32 * 64 + 64 + 3 * 2 * (64 * 64 + 64) + (64 * union + union)
    assert net.parameter_count() == expected


def test_head_layouts(emotion_space, au_space):
    shared = init_network(_spec([emotion_space, au_space], HeadStrategy.SHARED_SELECTIVE))
    assert list(shared.heads) == [UNION_HEAD]
    assert shared.heads[UNION_HEAD].out_dim == 5

    multi = init_network(_spec([emotion_space, au_space], HeadStrategy.MULTI_HEAD))
    assert {name: head.out_dim for name, head in multi.heads.items()} == {"emotion": 3, "au": 2}

    single = init_network(_spec([au_space], HeadStrategy.SINGLE_TASK))
    assert {name: head.out_dim for name, head in single.heads.items()} == {"au": 2}


def test_parameter_names_follow_layout(emotion_space, au_space):
    net = init_network(_spec([emotion_space, au_space], HeadStrategy.MULTI_HEAD, blocks=1))
    assert [name for name, _ in net.parameters()] == [
        "input.W", "input.b",
        "block0.fc1.W", "block0.fc1.b", "block0.fc2.W", "block0.fc2.b",
        "head.emotion.W", "head.emotion.b", "head.au.W", "head.au.b",
    ]
    assert [name for name, _ in net.parameters(heads=["au"])][-2:] == ["head.au.W", "head.au.b"]


def test_zero_weights_give_head_bias(emotion_space, au_space, rng):
    net = init_network(_spec([emotion_space, au_space], HeadStrategy.SHARED_SELECTIVE))
    for name, tensor in net.parameters():
        if name.endswith(".W"):
            tensor.data[...] = 0.0
        else:
            tensor.data[...] = rng.standard_normal(tensor.shape)
    logits = net.forward(rng.standard_normal((4, 6)))[UNION_HEAD].data
    bias = net.named_parameters()["head.union.b"].data
    assert np.array_equal(logits, np.tile(bias, (4, 1)))


def test_rows_are_independent_of_the_batch(emotion_space, rng):
    net = init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK))
    batch = rng.standard_normal((8, 6))
    full = net.forward(batch)["emotion"].data
    alone = net.forward(batch[3:4])["emotion"].data
    assert np.allclose(alone[0], full[3], rtol=0.0, atol=1e-12)


def test_hand_computed_golden_logits():
    space = LabelSpace(name="au", classes=["AU6"], kind=LabelKind.MULTILABEL_BINARY)
    net = Network(_spec([space], HeadStrategy.SINGLE_TASK, input_dim=2, width=2, blocks=1))
    params = net.named_parameters()
    params["input.W"].data[...] = [[1.0, 0.0], [0.0, -1.0]]
    params["input.b"].data[...] = [0.0, 0.5]
    params["block0.fc1.W"].data[...] = [[1.0, 1.0], [0.0, 1.0]]
    params["block0.fc1.b"].data[...] = [0.0, -1.0]
    params["block0.fc2.W"].data[...] = [[0.5, 0.0], [1.0, 1.0]]
    params["block0.fc2.b"].data[...] = [0.1, 0.2]
    params["head.au.W"].data[...] = [[1.0, -1.0]]
    params["head.au.b"].data[...] = [0.25]

    logits = net.forward(np.array([[2.0, 3.0], [0.0, 0.0]]))["au"].data
    assert logits.shape == (2, 1)
    assert logits[0, 0] == pytest.approx(1.15, abs=1e-12)
    assert logits[1, 0] == pytest.approx(-0.6, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_initial_output_scale(emotion_space, au_space, seed):
    spec = NetworkSpec(
        input_dim=32, width=64, blocks=3,
        head_strategy=HeadStrategy.SHARED_SELECTIVE, label_spaces=[emotion_space, au_space], seed=seed,
    )
    x = np.random.default_rng(100 + seed).standard_normal((256, 32))
    logits = init_network(spec).forward(x)[UNION_HEAD].data
    assert np.all(np.isfinite(logits))
    ratio = logits.std() / x.std()
    assert 0.1 <= ratio <= 10.0


def test_forward_selected_heads_only(emotion_space, au_space, rng):
    net = init_network(_spec([emotion_space, au_space], HeadStrategy.MULTI_HEAD))
    outputs = net.forward(rng.standard_normal((2, 6)), heads=["au"])
    assert outputs.heads == ["au"]
    assert outputs.space_logits("au").shape == (2, 2)
    with pytest.raises(ConfigError):
        outputs.space_logits("emotion")
    with pytest.raises(ConfigError):
        net.forward(rng.standard_normal((2, 6)), heads=["compound"])


def test_space_logits_slice_the_union_head(emotion_space, au_space, rng):
    net = init_network(_spec([emotion_space, au_space], HeadStrategy.SHARED_SELECTIVE))
    outputs = net(rng.standard_normal((3, 6)))
    union = outputs[UNION_HEAD].data
    assert np.array_equal(outputs.space_logits("emotion"), union[:, :3])
    assert np.array_equal(outputs.space_logits("au"), union[:, 3:])


def test_wrong_input_width_is_a_shape_error(emotion_space):
    net = init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK))
    with pytest.raises(ShapeError):
        net.forward(np.ones((2, 5)))


def test_normalized_network_needs_two_rows_in_train_mode_only(emotion_space, rng):
    from backend.src.exceptions import BatchSizeError
    net = init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK, normalization=True))
    with pytest.raises(BatchSizeError):
        net.forward(rng.standard_normal((1, 6)), mode=Mode.TRAIN)
    assert net.forward(rng.standard_normal((1, 6)), mode=Mode.EVAL)["emotion"].shape == (1, 3)


def test_invalid_specs_are_config_errors(emotion_space):
    with pytest.raises(ConfigError):
        init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK, width=0))
    with pytest.raises(ConfigError):
        init_network(_spec([emotion_space], HeadStrategy.SINGLE_TASK, blocks=-1))


def test_network_spec_for_strategies(emotion_space, au_space):
    config = NetworkConfig(width=16, blocks=1)
    spec = network_spec_for(Strategy.SJMT, [emotion_space, au_space], 10, config, seed=4)
    assert spec.head_strategy == HeadStrategy.SHARED_SELECTIVE
    assert spec.seed == 4
    assert network_spec_for(Strategy.CLASSICAL_MT, [emotion_space, au_space], 10, config).head_strategy == HeadStrategy.MULTI_HEAD
    with pytest.raises(ConfigError):
        network_spec_for(Strategy.SINGLE_TASK, [emotion_space, au_space], 10, config)
    with pytest.raises(ConfigError):
        network_spec_for(Strategy.SJMT, [emotion_space], 10, config)
