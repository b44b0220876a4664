from .tensor import Tape, Tensor, current_tape, make_node
from .ops import (
    Conv2d,
    Linear,
    abs_,
    add,
    as_tensor,
    cast,
    channel_attention,
    clamp,
    concat,
    conv2d,
    div,
    fully_connected,
    global_avg_pool,
    l2_normalize,
    matmul,
    max_pool2,
    mean,
    mul,
    narrow,
    neg,
    prelu,
    relu,
    reshape,
    sigmoid,
    softplus,
    sqrt,
    sub,
    sum_,
    upsample2,
)
from .losses import (
    BIN_CENTERS,
    BIN_COUNT,
    angular_error_degrees,
    angular_loss,
    hist_loss,
    l1_loss,
    soft_histogram,
    total_loss,
)
from .optim import ParamStore, adam_step
from .serialize import read_weight_file, write_weight_file

__all__ = [
    "Tape",
    "Tensor",
    "current_tape",
    "make_node",
    "Conv2d",
    "Linear",
    "abs_",
    "add",
    "as_tensor",
    "cast",
    "channel_attention",
    "clamp",
    "concat",
    "conv2d",
    "div",
    "fully_connected",
    "global_avg_pool",
    "l2_normalize",
    "matmul",
    "max_pool2",
    "mean",
    "mul",
    "narrow",
    "neg",
    "prelu",
    "relu",
    "reshape",
    "sigmoid",
    "softplus",
    "sqrt",
    "sub",
    "sum_",
    "upsample2",
    "BIN_CENTERS",
    "BIN_COUNT",
    "angular_error_degrees",
    "angular_loss",
    "hist_loss",
    "l1_loss",
    "soft_histogram",
    "total_loss",
    "ParamStore",
    "adam_step",
    "read_weight_file",
    "write_weight_file",
]
