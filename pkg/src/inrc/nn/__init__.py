from .adam import AdamState, adam_step, adam_update
from .config import ConfigError, ModelConfig
from .metagrad import meta_grad
from .mlp import (ContractError, DivergedError, backward, forward, forward_trace,
                  init_bounds, init_siren, loss_and_grad, mse, predict)
from .params import ParamSet

__all__ = [
    "AdamState", "ConfigError", "ContractError", "DivergedError", "ModelConfig", "ParamSet",
    "adam_step", "adam_update", "backward", "forward", "forward_trace", "init_bounds",
    "init_siren", "loss_and_grad", "meta_grad", "mse", "predict",
]
