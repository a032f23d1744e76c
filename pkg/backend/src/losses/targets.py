from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..exceptions import ContractError


@dataclass(frozen=True)
class MaskedTarget:
    """
    A sample's binary targets over the label union plus the positions its dataset annotates.

    Attributes:
        targets: 0/1 vector over the label union. May be 1 only inside the mask.
        mask: Boolean vector over the label union; True exactly on the dataset's classes.
        dataset_id: Name of the dataset (label space) the sample came from.
    """
    targets: np.ndarray
    mask: np.ndarray
    dataset_id: str

    def __post_init__(self):
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=np.float64))
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskedTarget):
            return NotImplemented
        return (
            self.dataset_id == other.dataset_id
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.mask, other.mask)
        )

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def stack_targets(targets: Sequence[MaskedTarget], width: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stacks masked targets into [B x L] target and mask matrices, validating each one.

    Raises:
        ContractError: On a length mismatch, an empty mask, or a positive target outside the mask.
    """
    if not targets:
        raise ContractError("no targets given")
    y = np.empty((len(targets), width), dtype=np.float64)
    mask = np.empty((len(targets), width), dtype=bool)
    for row, target in enumerate(targets):
        if target.targets.shape != (width,) or target.mask.shape != (width,):
            raise ContractError(
                f"sample {row}: target/mask lengths {target.targets.shape}/{target.mask.shape} do not match logits width {width}"
            )
        if not target.mask.any():
            raise ContractError(f"sample {row} ({target.dataset_id}): empty mask, a sample with no supervised labels cannot enter the loss")
        if np.any((target.targets != 0.0) & ~target.mask):
            raise ContractError(f"sample {row} ({target.dataset_id}): positive target outside the dataset mask")
        y[row] = target.targets
        mask[row] = target.mask
    return y, mask
