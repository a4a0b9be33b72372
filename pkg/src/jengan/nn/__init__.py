from . import functional
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .layers import Conv1d, ConvTranspose1d
from .optim import Adam
from .tensor import Parameter, Tensor

__all__ = [
    "Adam",
    "CheckpointFormatError",
    "Conv1d",
    "ConvTranspose1d",
    "Parameter",
    "Tensor",
    "functional",
    "load_checkpoint",
    "save_checkpoint",
]
