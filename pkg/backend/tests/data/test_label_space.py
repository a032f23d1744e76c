import numpy as np
import pytest
from pydantic import ValidationError

from backend.src.data.label_space import LabelUnion
from backend.src.exceptions import ConfigError
from backend.src.schemas import LabelKind, LabelSpace


@pytest.fixture
def union(emotion_space, au_space) -> LabelUnion:
    return LabelUnion([emotion_space, au_space])


def test_indices_follow_registration_order(union):
    assert len(union) == 5
    assert union.indices("emotion").tolist() == [0, 1, 2]
    assert union.indices("au").tolist() == [3, 4]
    assert union.slice("au") == slice(3, 5)
    assert union.index_of("au", "AU12") == 4
    assert union.classes == ["emotion:Happy", "emotion:Sad", "emotion:Angry", "au:AU6", "au:AU12"]


def test_mask_and_embed(union):
    assert union.mask("emotion").tolist() == [True, True, True, False, False]
    embedded = union.embed("au", np.array([[1, 0], [1, 1]]))
    assert embedded.tolist() == [[0, 0, 0, 1, 0], [0, 0, 0, 1, 1]]


def test_spaces_may_share_class_names(emotion_space):
    other = LabelSpace(name="compound", classes=["Happy"], kind=LabelKind.CATEGORICAL_EXCLUSIVE)
    union = LabelUnion([emotion_space, other])
    assert union.index_of("compound", "Happy") == 3
    assert union.index_of("emotion", "Happy") == 0


def test_invalid_unions(emotion_space, union):
    with pytest.raises(ConfigError):
        LabelUnion([emotion_space, emotion_space])
    with pytest.raises(ConfigError):
        LabelUnion([])
    with pytest.raises(ConfigError):
        union.space("compound")
    with pytest.raises(ConfigError):
        union.index_of("emotion", "Fear")


def test_duplicate_class_names_rejected():
    with pytest.raises(ValidationError):
        LabelSpace(name="au", classes=["AU6", "AU6"], kind=LabelKind.MULTILABEL_BINARY)
