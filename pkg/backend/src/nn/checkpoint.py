"""
JSON checkpoints.

Parameters are stored as shape + flat row-major values. Python's float repr is
the shortest string that parses back to the same double, so a save/load cycle is
bit-exact. `created_at` is the only field that differs between reruns.
"""
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from .. import config
from ..exceptions import ArtifactMismatchError
from ..schemas import CheckpointFile, LabelSpace, NormStateBlob, ParameterBlob, Strategy
from .network import Network

logger = logging.getLogger(__name__)


def checkpoint_document(
    net: Network,
    strategy: Optional[Strategy] = None,
    train_seed: Optional[int] = None,
    step: Optional[int] = None,
    created_at: Optional[str] = None,
) -> CheckpointFile:
    return CheckpointFile(
        format_version=config.CHECKPOINT_FORMAT_VERSION,
        strategy=strategy,
        network_spec=net.spec,
        parameters={
            name: ParameterBlob(shape=list(tensor.shape), values=tensor.values.tolist())
            for name, tensor in net.parameters()
        },
        norm_states={
            name: NormStateBlob(running_mean=state.running_mean.tolist(), running_var=state.running_var.tolist())
            for name, state in net.norm_states().items()
        },
        train_seed=train_seed,
        step=step,
        created_at=created_at or datetime.now(timezone.utc).isoformat(),
    )


def save_checkpoint(
    net: Network,
    path: Path,
    strategy: Optional[Strategy] = None,
    train_seed: Optional[int] = None,
    step: Optional[int] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = checkpoint_document(net, strategy=strategy, train_seed=train_seed, step=step)
    path.write_text(json.dumps(document.model_dump(mode="json"), indent=1) + "\n")
    logger.info(f"Saved checkpoint ({net.parameter_count()} parameters) to {path}")
    return path


def load_checkpoint(
    path: Path,
    expected_spaces: Optional[Sequence[LabelSpace]] = None,
) -> Tuple[Network, CheckpointFile]:
    """
    Restores a network from a checkpoint file.

    Args:
        path: Checkpoint path.
        expected_spaces: When given, the checkpoint's label spaces must equal these, in order.

    Raises:
        ArtifactMismatchError: Unreadable file, wrong format version, missing or misshapen
            parameters, or label spaces other than expected.
    """
    path = Path(path)
    try:
        document = CheckpointFile.model_validate(json.loads(path.read_text()))
    except FileNotFoundError as e:
        raise ArtifactMismatchError(f"checkpoint {path} does not exist") from e
    except (json.JSONDecodeError, ValidationError) as e:
        raise ArtifactMismatchError(f"checkpoint {path} is not a valid checkpoint file: {e}") from e

    if document.format_version != config.CHECKPOINT_FORMAT_VERSION:
        raise ArtifactMismatchError(
            f"checkpoint {path} has format version {document.format_version}, "
            f"this build reads version {config.CHECKPOINT_FORMAT_VERSION}"
        )
    if expected_spaces is not None and list(expected_spaces) != list(document.network_spec.label_spaces):
        found = [space.name for space in document.network_spec.label_spaces]
        wanted = [space.name for space in expected_spaces]
        raise ArtifactMismatchError(f"checkpoint {path} covers label spaces {found}, expected {wanted}")

    net = Network(document.network_spec)
    expected_names = [name for name, _ in net.parameters()]
    if sorted(expected_names) != sorted(document.parameters):
        missing = sorted(set(expected_names) - set(document.parameters))
        extra = sorted(set(document.parameters) - set(expected_names))
        raise ArtifactMismatchError(f"checkpoint {path} parameters do not match its spec (missing {missing}, unexpected {extra})")

    for name, tensor in net.parameters():
        blob = document.parameters[name]
        if tuple(blob.shape) != tensor.shape or len(blob.values) != tensor.size:
            raise ArtifactMismatchError(f"checkpoint {path}: parameter '{name}' has shape {blob.shape}, expected {list(tensor.shape)}")
        tensor.data[...] = np.asarray(blob.values, dtype=np.float64).reshape(tensor.shape)

    states = net.norm_states()
    if sorted(states) != sorted(document.norm_states):
        raise ArtifactMismatchError(f"checkpoint {path}: normalization states {sorted(document.norm_states)} do not match {sorted(states)}")
    for name, state in states.items():
        blob = document.norm_states[name]
        state.running_mean = np.asarray(blob.running_mean, dtype=np.float64)
        state.running_var = np.asarray(blob.running_var, dtype=np.float64)

    logger.info(f"Loaded checkpoint {path} ({document.network_spec.head_strategy.value}, step {document.step})")
    return net, document
