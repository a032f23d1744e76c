import math

from ..exceptions import ContractError
from ..schemas import TrainConfig


def lr_schedule(step: int, config: TrainConfig) -> float:
    """Staircase exponential decay: lr0 * decay_factor ** floor(step / decay_every_steps)."""
    if step < 0:
        raise ContractError(f"step must be >= 0, got {step}")
    return config.lr0 * math.pow(config.decay_factor, step // config.decay_every_steps)
