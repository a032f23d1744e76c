import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError
from ..schemas import LabelSpace

logger = logging.getLogger(__name__)


class LabelUnion:
    """
    Ordered concatenation of registered label spaces.

    Global indices follow registration order: the first space's classes come
    first, in their own order, then the second space's, and so on. Class names
    are qualified by their space ("emotion:Happy", "au:AU6") so that two spaces
    may reuse a name.
    """

    def __init__(self, spaces: Sequence[LabelSpace]):
        names = [space.name for space in spaces]
        if len(set(names)) != len(names):
            raise ConfigError(f"label space names must be unique, got {names}")
        if not spaces:
            raise ConfigError("a label union needs at least one label space")
        self.spaces: Tuple[LabelSpace, ...] = tuple(spaces)
        self._offsets: Dict[str, int] = {}
        offset = 0
        for space in self.spaces:
            self._offsets[space.name] = offset
            offset += space.size
        self.size = offset

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelUnion) and self.spaces == other.spaces

    def __repr__(self) -> str:
        return f"LabelUnion({', '.join(f'{s.name}[{s.size}]' for s in self.spaces)})"

    @property
    def space_names(self) -> List[str]:
        return [space.name for space in self.spaces]

    @property
    def classes(self) -> List[str]:
        return [f"{space.name}:{name}" for space in self.spaces for name in space.classes]

    def space(self, name: str) -> LabelSpace:
        for space in self.spaces:
            if space.name == name:
                return space
        raise ConfigError(f"label space '{name}' is not registered in {self!r}")

    def indices(self, space_name: str) -> np.ndarray:
        """Global indices of a space's classes, in the space's order."""
        space = self.space(space_name)
        start = self._offsets[space_name]
        return np.arange(start, start + space.size)

    def slice(self, space_name: str) -> slice:
        space = self.space(space_name)
        start = self._offsets[space_name]
        return slice(start, start + space.size)

    def index_of(self, space_name: str, class_name: str) -> int:
        space = self.space(space_name)
        if class_name not in space.classes:
            raise ConfigError(f"class '{class_name}' is not part of label space '{space_name}'")
        return self._offsets[space_name] + space.classes.index(class_name)

    def mask(self, space_name: str) -> np.ndarray:
        """Boolean vector over the union, True exactly on the space's classes."""
        mask = np.zeros(self.size, dtype=bool)
        mask[self.slice(space_name)] = True
        return mask

    def embed(self, space_name: str, labels: np.ndarray) -> np.ndarray:
        """Places [n x |space|] labels into zero-filled [n x |union|] rows."""
        labels = np.atleast_2d(labels)
        out = np.zeros((labels.shape[0], self.size), dtype=np.float64)
        out[:, self.slice(space_name)] = labels
        return out
