from .adam import AdamState, adam_step
from .checkpoint import read_checkpoint, write_checkpoint
from .lstm import LstmLayerParams, lstm_backward, lstm_init, lstm_sequence_forward
from .mlp import (
    MlpParams,
    mlp_apply,
    mlp_backward,
    mlp_init,
    softmax,
    softmax_cross_entropy,
)

__all__ = [
    "AdamState",
    "adam_step",
    "read_checkpoint",
    "write_checkpoint",
    "LstmLayerParams",
    "lstm_backward",
    "lstm_init",
    "lstm_sequence_forward",
    "MlpParams",
    "mlp_apply",
    "mlp_backward",
    "mlp_init",
    "softmax",
    "softmax_cross_entropy",
]
