from .errors import DiffcoreError, NonFiniteError, ShapeError, TapeError
from .tensor import GradientStore, Node, Tape, TapeStats, Tensor, backward, mark_step_boundary
from .ops import (
    PRIMITIVES,
    abs_,
    add,
    arccos,
    as_tensor,
    concat,
    conv2d,
    cross,
    defprimitive,
    div,
    dot,
    exp,
    expm_skew,
    identity,
    leaky_relu,
    log,
    matmul,
    matvec,
    maximum,
    mean,
    mul,
    norm,
    power,
    record,
    reshape,
    sigmoid,
    slice_,
    softplus,
    sqrt,
    stack,
    stop_gradient,
    sub,
    sum_,
    tanh,
    transpose,
)
