"""
The three training strategies under one loop.

    single_task   one dataset, one head: softmax cross-entropy for categorical
                  spaces, sigmoid cross-entropy for multilabel ones
    classical_mt  shared trunk, one head per dataset; batches alternate between
                  datasets and each batch trains the trunk plus its own head
    sjmt          one head over the label union; mixed batches trained with the
                  selective loss (or full BCE for the ablation)

Everything random comes from two generators spawned from config.seed: one for
the batch sampler, one for feature jitter.
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from ..autodiff.tensor import Tape
from ..data.dataset import Dataset
from ..data.sampler import Batch, BatchSampler
from ..evaluation.metrics import validation_metrics
from ..exceptions import ConfigError, DivergenceError, NumericalError
from ..losses import LossValue, binary_cross_entropy, full_bce, selective_bce, softmax_cross_entropy
from ..nn.checkpoint import save_checkpoint
from ..nn.layers import Mode
from ..nn.network import HEAD_STRATEGY_FOR, UNION_HEAD, Network, init_network
from ..schemas import NetworkSpec, SamplingMode, Strategy, TrainConfig
from .optimizer import sgd_step
from .schedule import lr_schedule
from .train_log import TrainLog

logger = logging.getLogger(__name__)

_SAMPLER_STREAM, _AUGMENTATION_STREAM = range(2)


def _check_inputs(strategy: Strategy, datasets: Sequence[Dataset], net_spec: NetworkSpec, config: TrainConfig) -> None:
    if config.seed is None:
        raise ConfigError("train.seed must be set explicitly")
    if net_spec.head_strategy != HEAD_STRATEGY_FOR[strategy]:
        raise ConfigError(
            f"strategy {strategy.value} needs {HEAD_STRATEGY_FOR[strategy].value} heads, "
            f"network spec has {net_spec.head_strategy.value}"
        )
    if strategy == Strategy.SINGLE_TASK and len(datasets) != 1:
        raise ConfigError(f"single_task trains on exactly one dataset, got {len(datasets)}")
    if strategy != Strategy.SINGLE_TASK and len(datasets) < 2:
        raise ConfigError(f"{strategy.value} trains on two or more datasets, got {len(datasets)}")
    dataset_spaces = [dataset.label_space for dataset in datasets]
    if dataset_spaces != list(net_spec.label_spaces):
        raise ConfigError(
            f"datasets {[d.name for d in datasets]} do not match the network's label spaces "
            f"{[s.name for s in net_spec.label_spaces]}"
        )
    for dataset in datasets:
        if dataset.feature_dim != net_spec.input_dim:
            raise ConfigError(f"dataset '{dataset.name}' has {dataset.feature_dim} features, network expects {net_spec.input_dim}")


def _head_loss(net: Network, space_name: str, logits, batch: Batch) -> LossValue:
    space = net.union.space(space_name)
    targets = batch.space_targets(net.union, space_name)
    if space.is_categorical:
        return softmax_cross_entropy(logits, targets)
    return binary_cross_entropy(logits, targets)


def compute_batch_loss(
    net: Network,
    batch: Batch,
    strategy: Strategy,
    config: TrainConfig,
    features: Optional[np.ndarray] = None,
    mode: Mode = Mode.TRAIN,
) -> LossValue:
    """
    Forward pass plus the strategy's loss for one batch.

    Args:
        features: Batch features after jitter; defaults to batch.features.
    """
    x = batch.features if features is None else features
    strategy = Strategy(strategy)
    if strategy == Strategy.SJMT:
        logits = net.forward(x, mode=mode)[UNION_HEAD]
        if config.full_bce:
            return full_bce(logits, batch.masked_targets)
        return selective_bce(logits, batch.masked_targets, normalizer=config.normalizer)

    if strategy == Strategy.SINGLE_TASK:
        space_name = net.label_spaces[0].name
    else:
        sources = set(batch.dataset_ids)
        if len(sources) != 1:
            raise ConfigError(f"classical_mt batches must come from one dataset, got {sorted(sources)}")
        space_name = batch.dataset_ids[0]
    head = net.head_for(space_name)
    logits = net.forward(x, mode=mode, heads=[head])[head]
    return _head_loss(net, space_name, logits, batch)


def train(
    strategy: Strategy,
    datasets: Sequence[Dataset],
    net_spec: NetworkSpec,
    config: TrainConfig,
    validation: Optional[Sequence[Dataset]] = None,
    checkpoint_dir: Optional[Path] = None,
) -> Tuple[Network, TrainLog]:
    """
    Trains a freshly initialized network.

    Args:
        strategy: single_task, classical_mt or sjmt.
        datasets: Training datasets, in the order of net_spec.label_spaces.
        net_spec: Network to build; its head strategy must suit `strategy`.
        config: Budget, schedule and loss options. config.seed must be set.
        validation: Held-out datasets evaluated every config.eval_every steps.
        checkpoint_dir: Where periodic checkpoints go when config.checkpoint_every > 0.

    Returns:
        The trained network and its log.

    Raises:
        ConfigError: Strategy, datasets and network spec disagree.
        DivergenceError: A loss or gradient became non-finite.
    """
    strategy = Strategy(strategy)
    _check_inputs(strategy, datasets, net_spec, config)
    net = init_network(net_spec)
    streams = [np.random.default_rng(child) for child in np.random.SeedSequence(config.seed).spawn(2)]
    sampling = SamplingMode.ALTERNATING if strategy == Strategy.CLASSICAL_MT else SamplingMode.MIXED
    sampler = BatchSampler(datasets, net.union, sampling, config.batch_size, streams[_SAMPLER_STREAM])
    jitter_rng = streams[_AUGMENTATION_STREAM]
    params = [tensor for _, tensor in net.parameters()]
    for name, tensor in net.parameters():
        tensor.name = name
    log = TrainLog()

    logger.info(
        f"Training {strategy.value} on {[d.name for d in datasets]}: {config.total_steps} steps, "
        f"batch {config.batch_size}, lr0 {config.lr0}, seed {config.seed}, {net.parameter_count()} parameters"
    )
    for step in range(config.total_steps):
        lr = lr_schedule(step, config)
        batch = sampler.sample_batch()
        features = batch.features
        if config.augmentation_sigma > 0.0:
            features = features + config.augmentation_sigma * jitter_rng.standard_normal(features.shape)

        try:
            with Tape() as tape:
                loss = compute_batch_loss(net, batch, strategy, config, features)
            value = loss.value
            if not np.isfinite(value):
                raise DivergenceError(f"Non-finite loss at step {step}", step=step)
            tape.backward(loss.tensor)
        except NumericalError as e:
            raise DivergenceError(f"Training diverged at step {step}: {e}", step=step) from e
        sgd_step(params, lr=lr, step=step)
        log.append(step, batch.source, lr, value)

        if (step + 1) % config.log_every == 0:
            logger.info(f"step {step + 1}/{config.total_steps} lr={lr:.6g} smoothed loss={log.smoothed_loss:.6f}")
        else:
            logger.debug(f"step {step} [{batch.source}] lr={lr:.6g} loss={value:.6f}")

        if validation and config.eval_every and (step + 1) % config.eval_every == 0:
            metrics = validation_metrics(net, validation)
            log.add_validation(step + 1, metrics)
            logger.info(f"step {step + 1} validation: {metrics}")
        if checkpoint_dir is not None and config.checkpoint_every and (step + 1) % config.checkpoint_every == 0:
            save_checkpoint(net, Path(checkpoint_dir) / f"checkpoint_step{step + 1:06d}.json",
                            strategy=strategy, train_seed=config.seed, step=step + 1)

    if not np.isfinite(log.smoothed_loss):
        raise DivergenceError(f"Smoothed training loss is not finite after {config.total_steps} steps", step=config.total_steps)
    logger.info(f"Finished {strategy.value}: smoothed loss {log.smoothed_loss:.6f}")
    return net, log

