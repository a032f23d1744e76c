"""
Residual MLP with one of three head layouts.

    single_task       one head over one label space (named after the space)
    multi_head        one head per label space, sharing the trunk
    shared_selective  one head over the whole label union (named "union")

Every head emits raw logits; sigmoids and softmaxes belong to the losses and
to prediction.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autodiff.tensor import Tensor
from ..data.label_space import LabelUnion
from ..exceptions import ConfigError, ShapeError
from ..schemas import HeadStrategy, LabelSpace, NetworkConfig, NetworkSpec, Strategy
from .layers import Activation, DenseLayer, Mode, NormState, ResidualBlock

logger = logging.getLogger(__name__)

UNION_HEAD = "union"

HEAD_STRATEGY_FOR = {
    Strategy.SINGLE_TASK: HeadStrategy.SINGLE_TASK,
    Strategy.CLASSICAL_MT: HeadStrategy.MULTI_HEAD,
    Strategy.SJMT: HeadStrategy.SHARED_SELECTIVE,
}


@dataclass
class HeadOutputs:
    """Logits per evaluated head plus where each label space's columns live."""
    logits: Dict[str, Tensor]
    columns: Dict[str, Tuple[str, slice]]

    def __getitem__(self, head: str) -> Tensor:
        return self.logits[head]

    def __contains__(self, head: str) -> bool:
        return head in self.logits

    @property
    def heads(self) -> List[str]:
        return list(self.logits)

    def space_logits(self, space_name: str) -> np.ndarray:
        """[B x |space|] logits of one label space, whichever head carries it."""
        if space_name not in self.columns:
            raise ConfigError(f"no head of this network carries label space '{space_name}'")
        head, columns = self.columns[space_name]
        if head not in self.logits:
            raise ConfigError(f"head '{head}' was not evaluated in this forward pass")
        return self.logits[head].data[:, columns]


class Network:
    """
    Input projection, residual trunk and heads built from a NetworkSpec.

    Parameters are drawn from a generator seeded with spec.seed in a fixed order
    (input layer, blocks, heads), so equal specs give bit-identical networks.
    """

    def __init__(self, spec: NetworkSpec):
        if spec.input_dim <= 0 or spec.width <= 0:
            raise ConfigError(f"network widths must be positive, got input_dim={spec.input_dim}, width={spec.width}")
        if spec.blocks < 0:
            raise ConfigError(f"network.blocks must be >= 0, got {spec.blocks}")
        empty = [space.name for space in spec.label_spaces if space.size == 0]
        if empty:
            raise ConfigError(f"label spaces without classes give zero-width heads: {empty}")

        self.spec = spec
        self.union = LabelUnion(spec.label_spaces)
        rng = np.random.default_rng(spec.seed)

        self.input_layer = DenseLayer(spec.input_dim, spec.width, Activation.RELU, rng, weight_variance=2.0 / spec.input_dim)
        self.blocks = [ResidualBlock(spec.width, rng, normalization=spec.normalization) for _ in range(spec.blocks)]

        self.heads: Dict[str, DenseLayer] = {}
        self.columns: Dict[str, Tuple[str, slice]] = {}
        if spec.head_strategy == HeadStrategy.SHARED_SELECTIVE:
            self.heads[UNION_HEAD] = DenseLayer(spec.width, self.union.size, Activation.IDENTITY, rng)
            for space in spec.label_spaces:
                self.columns[space.name] = (UNION_HEAD, self.union.slice(space.name))
        else:
            for space in spec.label_spaces:
                self.heads[space.name] = DenseLayer(spec.width, space.size, Activation.IDENTITY, rng)
                self.columns[space.name] = (space.name, slice(0, space.size))

        logger.debug(f"Initialized {spec.head_strategy.value} network: {self.parameter_count()} parameters, seed={spec.seed}")

    @property
    def head_strategy(self) -> HeadStrategy:
        return self.spec.head_strategy

    @property
    def label_spaces(self) -> List[LabelSpace]:
        return list(self.spec.label_spaces)

    def head_for(self, space_name: str) -> str:
        if space_name not in self.columns:
            raise ConfigError(f"no head of this network carries label space '{space_name}'")
        return self.columns[space_name][0]

    def trunk(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        h = self.input_layer(x)
        for block in self.blocks:
            h = block(h, mode)
        return h

    def forward(
        self,
        batch: Union[Tensor, np.ndarray],
        mode: Mode = Mode.EVAL,
        heads: Optional[Sequence[str]] = None,
    ) -> HeadOutputs:
        """
        Raw logits for the requested heads (all heads by default).

        Raises:
            ShapeError: If the batch is not [B x input_dim].
        """
        x = batch if isinstance(batch, Tensor) else Tensor(batch)
        if x.data.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise ShapeError(
                f"network expects [B x {self.spec.input_dim}] input, got {x.shape}",
                shapes=(x.shape, (None, self.spec.input_dim)),
            )
        selected = list(self.heads) if heads is None else list(heads)
        unknown = [name for name in selected if name not in self.heads]
        if unknown:
            raise ConfigError(f"unknown heads {unknown}; this network has {list(self.heads)}")
        h = self.trunk(x, mode)
        return HeadOutputs(logits={name: self.heads[name](h) for name in selected}, columns=dict(self.columns))

    __call__ = forward

    def parameters(self, heads: Optional[Iterable[str]] = None) -> List[Tuple[str, Tensor]]:
        """Named trainable tensors in a fixed order: input layer, blocks, then the (selected) heads."""
        named = list(self.input_layer.parameters("input"))
        for i, block in enumerate(self.blocks):
            named.extend(block.parameters(f"block{i}"))
        selected = list(self.heads) if heads is None else list(heads)
        for name in selected:
            named.extend(self.heads[name].parameters(f"head.{name}"))
        return named

    def named_parameters(self) -> Dict[str, Tensor]:
        return dict(self.parameters())

    def parameter_count(self) -> int:
        return sum(tensor.size for _, tensor in self.parameters())

    def zero_grad(self) -> None:
        for _, tensor in self.parameters():
            tensor.zero_grad()

    def norm_states(self) -> Dict[str, NormState]:
        states: Dict[str, NormState] = {}
        for i, block in enumerate(self.blocks):
            states.update(block.norm_states(f"block{i}"))
        return states


def init_network(spec: NetworkSpec) -> Network:
    """
    Builds a freshly initialized network.

    Raises:
        ConfigError: On a zero-width layer or head.
    """
    return Network(spec)


def network_spec_for(
    strategy: Strategy,
    label_spaces: Sequence[LabelSpace],
    input_dim: int,
    config: NetworkConfig,
    seed: int = 0,
) -> NetworkSpec:
    """
    The NetworkSpec a training strategy needs over the given label spaces.

    Raises:
        ConfigError: If the number of label spaces does not suit the strategy.
    """
    strategy = Strategy(strategy)
    if strategy == Strategy.SINGLE_TASK and len(label_spaces) != 1:
        raise ConfigError(f"single_task trains on exactly one dataset, got {len(label_spaces)}")
    if strategy != Strategy.SINGLE_TASK and len(label_spaces) < 2:
        raise ConfigError(f"{strategy.value} trains on two or more datasets, got {len(label_spaces)}")
    return NetworkSpec(
        input_dim=input_dim,
        width=config.width,
        blocks=config.blocks,
        normalization=config.normalization,
        head_strategy=HEAD_STRATEGY_FOR[strategy],
        label_spaces=list(label_spaces),
        seed=config.seed if config.seed is not None else seed,
    )
