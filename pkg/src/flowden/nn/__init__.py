from . import tensor as ops
from .checkpoint import load_checkpoint, save_checkpoint
from .optim import ParamStore, adam_step, ema_update
from .tensor import Tape, Tensor, backward, forward

__all__ = [
    "ops",
    "Tape",
    "Tensor",
    "forward",
    "backward",
    "ParamStore",
    "adam_step",
    "ema_update",
    "save_checkpoint",
    "load_checkpoint",
]
