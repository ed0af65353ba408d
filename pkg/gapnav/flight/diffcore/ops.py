# PEP-8
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import NonFiniteError, ShapeError, TapeError
from .tensor import Tape, Tensor


ARCCOS_EPS = 1e-7
EXPM_SERIES_THRESHOLD = 1e-6

Vjp = Callable[..., np.ndarray]


@dataclass(frozen=True)
class Primitive:
    """Forward rule plus one vector-Jacobian product per input.

    A variadic primitive has a single vjp that receives the input position as
    the ``index`` keyword.
    """

    forward: Callable[..., np.ndarray]
    vjps: tuple[Vjp, ...]
    check: Callable[..., None] | None = None
    variadic: bool = False

    def gradient(self, index: int, grad, out, values, attrs) -> np.ndarray:
        if self.variadic:
            return self.vjps[0](grad, out, *values, index=index, **attrs)
        return self.vjps[index](grad, out, *values, **attrs)


PRIMITIVES: dict[str, Primitive] = {}


def defprimitive(
    name: str,
    forward: Callable[..., np.ndarray],
    *vjps: Vjp,
    check: Callable[..., None] | None = None,
    variadic: bool = False,
) -> None:
    if name in PRIMITIVES:
        raise ValueError(f"primitive {name!r} is already registered")
    PRIMITIVES[name] = Primitive(forward, vjps, check, variadic)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _common_tape(op: str, tensors: list[Tensor]) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif t.tape is not tape:
            raise TapeError(f"{op}: inputs are recorded on different tapes")
    return tape


def record(op: str, *inputs, **attrs) -> Tensor:
    """Evaluate primitive ``op`` and register it on the inputs' tape.

    With only constant inputs the result is a constant and nothing is recorded.
    """
    try:
        prim = PRIMITIVES[op]
    except KeyError:
        raise TapeError(f"unknown primitive {op!r}") from None

    tensors = [as_tensor(x) for x in inputs]
    tape = _common_tape(op, tensors)
    values = tuple(t.value for t in tensors)
    if prim.check is not None:
        prim.check(*values, **attrs)

    out = np.asarray(prim.forward(*values, **attrs), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(op)
    if tape is None:
        return Tensor(out, checked=True)

    needs = tuple(t.node is not None for t in tensors)

    def backward(grad: np.ndarray):
        return tuple(
            prim.gradient(i, grad, out, values, attrs) if need else None
            for i, need in enumerate(needs)
        )

    return tape.append(op, tensors, out, backward)


def stop_gradient(x) -> Tensor:
    x = as_tensor(x)
    return Tensor(x.value.copy(), checked=True)


# helpers


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcastable(op: str) -> Callable[..., None]:
    def check(a, b):
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(op, a.shape, b.shape) from None
    return check


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _expand_reduced(grad, shape, axis) -> np.ndarray:
    if axis is not None:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape).copy()


# elementwise arithmetic

defprimitive(
    "add",
    lambda a, b: a + b,
    lambda g, out, a, b: _unbroadcast(g, a.shape),
    lambda g, out, a, b: _unbroadcast(g, b.shape),
    check=_broadcastable("add"),
)
defprimitive(
    "sub",
    lambda a, b: a - b,
    lambda g, out, a, b: _unbroadcast(g, a.shape),
    lambda g, out, a, b: _unbroadcast(-g, b.shape),
    check=_broadcastable("sub"),
)
defprimitive(
    "mul",
    lambda a, b: a * b,
    lambda g, out, a, b: _unbroadcast(g * b, a.shape),
    lambda g, out, a, b: _unbroadcast(g * a, b.shape),
    check=_broadcastable("mul"),
)
defprimitive(
    "div",
    lambda a, b: a / b,
    lambda g, out, a, b: _unbroadcast(g / b, a.shape),
    lambda g, out, a, b: _unbroadcast(-g * a / (b * b), b.shape),
    check=_broadcastable("div"),
)


# linear algebra

def _check_matmul(a, b):
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)


def _matmul_grad_a(g, out, a, b):
    if a.ndim == 2 and b.ndim == 2:
        return g @ b.T
    if a.ndim == 2:
        return np.outer(g, b)
    if b.ndim == 2:
        return b @ g
    return g * b


def _matmul_grad_b(g, out, a, b):
    if a.ndim == 2:
        return a.T @ g
    if b.ndim == 2:
        return np.outer(a, g)
    return g * a


def _check_matvec(a, b):
    if a.ndim != 2 or b.ndim != 1 or a.shape[1] != b.shape[0]:
        raise ShapeError("matvec", a.shape, b.shape)


def _check_transpose(a):
    if a.ndim != 2:
        raise ShapeError("transpose", a.shape)


def _check_reshape(a, shape):
    if int(np.prod(shape)) != a.size:
        raise ShapeError("reshape", a.shape, tuple(shape))


def _check_cross(a, b):
    if a.shape != (3,) or b.shape != (3,):
        raise ShapeError("cross", a.shape, b.shape)


defprimitive("matmul", lambda a, b: a @ b, _matmul_grad_a, _matmul_grad_b, check=_check_matmul)
defprimitive("matvec", lambda a, b: a @ b, _matmul_grad_a, _matmul_grad_b, check=_check_matvec)
defprimitive("transpose", lambda a: a.T.copy(), lambda g, out, a: g.T, check=_check_transpose)
defprimitive(
    "reshape",
    lambda a, shape: a.reshape(shape),
    lambda g, out, a, shape: g.reshape(a.shape),
    check=_check_reshape,
)
defprimitive(
    "cross",
    lambda a, b: np.cross(a, b),
    lambda g, out, a, b: np.cross(b, g),
    lambda g, out, a, b: np.cross(g, a),
    check=_check_cross,
)


# structure

def _check_concat(*values, axis):
    first = values[0]
    for v in values[1:]:
        if v.ndim != first.ndim or not -first.ndim <= axis < first.ndim:
            raise ShapeError("concat", *(x.shape for x in values))
        others = [n for i, n in enumerate(v.shape) if i != axis % v.ndim]
        expect = [n for i, n in enumerate(first.shape) if i != axis % first.ndim]
        if others != expect:
            raise ShapeError("concat", *(x.shape for x in values))


def _concat_grad(g, out, *values, index, axis):
    start = int(np.sum([v.shape[axis] for v in values[:index]], dtype=int))
    stop = start + values[index].shape[axis]
    return np.take(g, np.arange(start, stop), axis=axis)


def _check_stack(*values, axis):
    if any(v.shape != values[0].shape for v in values):
        raise ShapeError("stack", *(x.shape for x in values))


def _check_slice(a, index):
    try:
        a[index]
    except IndexError:
        raise ShapeError("slice", a.shape) from None


def _slice_grad(g, out, a, index):
    grad = np.zeros_like(a)
    np.add.at(grad, index, g)
    return grad


defprimitive(
    "concat",
    lambda *values, axis: np.concatenate(values, axis=axis),
    _concat_grad,
    check=_check_concat,
    variadic=True,
)
defprimitive(
    "stack",
    lambda *values, axis: np.stack(values, axis=axis),
    lambda g, out, *values, index, axis: np.take(g, index, axis=axis),
    check=_check_stack,
    variadic=True,
)
defprimitive("slice", lambda a, index: np.array(a[index]), _slice_grad, check=_check_slice)
defprimitive(
    "sum",
    lambda a, axis: np.sum(a, axis=axis),
    lambda g, out, a, axis: _expand_reduced(g, a.shape, axis),
)
defprimitive(
    "mean",
    lambda a, axis: np.mean(a, axis=axis),
    lambda g, out, a, axis: _expand_reduced(g, a.shape, axis) * (out.size / a.size),
)
defprimitive("identity", lambda a: a.copy(), lambda g, out, a: g)


# nonlinearities

def _norm_grad(g, out, a):
    if out == 0.0:
        return np.zeros_like(a)
    return g * a / out


def _arccos_grad(g, out, a):
    c = np.clip(a, -1.0 + ARCCOS_EPS, 1.0 - ARCCOS_EPS)
    return -g / np.sqrt(1.0 - c * c)


defprimitive(
    "power",
    lambda a, exponent: np.power(a, exponent),
    lambda g, out, a, exponent: g * exponent * np.power(a, exponent - 1),
)
defprimitive("sqrt", np.sqrt, lambda g, out, a: g * 0.5 / out)
defprimitive("exp", np.exp, lambda g, out, a: g * out)
defprimitive("log", np.log, lambda g, out, a: g / a)
defprimitive("tanh", np.tanh, lambda g, out, a: g * (1.0 - out * out))
defprimitive("sigmoid", expit, lambda g, out, a: g * out * (1.0 - out))
defprimitive("softplus", lambda a: np.logaddexp(0.0, a), lambda g, out, a: g * expit(a))
defprimitive(
    "leaky_relu",
    lambda a, slope: np.where(a > 0, a, slope * a),
    lambda g, out, a, slope: g * np.where(a > 0, 1.0, slope),
)
defprimitive(
    "maximum",
    lambda a, floor: np.maximum(a, floor),
    lambda g, out, a, floor: g * (a > floor),
)
defprimitive("abs", np.abs, lambda g, out, a: g * np.sign(a))
defprimitive("norm", lambda a: np.sqrt(np.sum(a * a)), _norm_grad)
defprimitive("arccos", lambda a: np.arccos(np.clip(a, -1.0, 1.0)), _arccos_grad)


# rotation exponential

def _check_expm(w):
    if w.shape != (3,):
        raise ShapeError("expm_skew", w.shape)


def _expm_forward(w):
    theta = np.sqrt(np.sum(w * w))
    k = _skew(w)
    if theta < EXPM_SERIES_THRESHOLD:
        return np.eye(3) + k + 0.5 * (k @ k)
    return (
        np.eye(3)
        + (np.sin(theta) / theta) * k
        + ((1.0 - np.cos(theta)) / (theta * theta)) * (k @ k)
    )


def _expm_grad(g, out, w):
    theta_sq = np.sum(w * w)
    k = _skew(w)
    grad = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        if np.sqrt(theta_sq) < EXPM_SERIES_THRESHOLD:
            ei = _skew(e)
            d_r = ei + 0.5 * (ei @ k + k @ ei)
        else:
            d_r = (w[i] * k + _skew(np.cross(w, (np.eye(3) - out) @ e))) / theta_sq @ out
        grad[i] = np.sum(g * d_r)
    return grad


defprimitive("expm_skew", _expm_forward, _expm_grad, check=_check_expm)


# convolution

def _im2col(x, k, stride, padding):
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    channels, rows, cols = windows.shape[:3]
    return windows.transpose(1, 2, 0, 3, 4).reshape(rows * cols, channels * k * k), rows, cols


def _check_conv(x, w, b, stride, padding):
    if x.ndim != 3 or w.ndim != 4 or b.shape != (w.shape[0],):
        raise ShapeError("conv2d", x.shape, w.shape, b.shape)
    if w.shape[1] != x.shape[0] or w.shape[2] != w.shape[3]:
        raise ShapeError("conv2d", x.shape, w.shape, b.shape)
    k = w.shape[2]
    if min(x.shape[1], x.shape[2]) + 2 * padding < k or stride < 1:
        raise ShapeError("conv2d", x.shape, w.shape, b.shape)


def _conv_forward(x, w, b, stride, padding):
    cols, rows, width = _im2col(x, w.shape[2], stride, padding)
    out = w.reshape(w.shape[0], -1) @ cols.T
    return out.reshape(w.shape[0], rows, width) + b[:, None, None]


def _conv_grad_x(g, out, x, w, b, stride, padding):
    k = w.shape[2]
    n_out, rows, width = g.shape
    dcols = (g.reshape(n_out, -1).T @ w.reshape(n_out, -1)).reshape(rows, width, x.shape[0], k, k)
    padded = np.zeros((x.shape[0], x.shape[1] + 2 * padding, x.shape[2] + 2 * padding))
    for i in range(k):
        for j in range(k):
            padded[:, i:i + stride * rows:stride, j:j + stride * width:stride] += (
                dcols[:, :, :, i, j].transpose(2, 0, 1)
            )
    if padding:
        return padded[:, padding:-padding, padding:-padding]
    return padded


def _conv_grad_w(g, out, x, w, b, stride, padding):
    cols, _, _ = _im2col(x, w.shape[2], stride, padding)
    return (g.reshape(w.shape[0], -1) @ cols).reshape(w.shape)


defprimitive(
    "conv2d",
    _conv_forward,
    _conv_grad_x,
    _conv_grad_w,
    lambda g, out, x, w, b, stride, padding: g.reshape(w.shape[0], -1).sum(axis=1),
    check=_check_conv,
)


# public wrappers

def add(a, b) -> Tensor:
    return record("add", a, b)


def sub(a, b) -> Tensor:
    return record("sub", a, b)


def mul(a, b) -> Tensor:
    return record("mul", a, b)


def div(a, b) -> Tensor:
    return record("div", a, b)


def matmul(a, b) -> Tensor:
    return record("matmul", a, b)


def matvec(a, b) -> Tensor:
    return record("matvec", a, b)


def transpose(a) -> Tensor:
    return record("transpose", a)


def reshape(a, shape) -> Tensor:
    return record("reshape", a, shape=tuple(shape))


def concat(tensors, axis: int = 0) -> Tensor:
    return record("concat", *tensors, axis=axis)


def stack(tensors, axis: int = 0) -> Tensor:
    return record("stack", *tensors, axis=axis)


def slice_(a, index) -> Tensor:
    return record("slice", a, index=index)


def sum_(a, axis: int | None = None) -> Tensor:
    return record("sum", a, axis=axis)


def mean(a, axis: int | None = None) -> Tensor:
    return record("mean", a, axis=axis)


def power(a, exponent: float) -> Tensor:
    return record("power", a, exponent=float(exponent))


def sqrt(a) -> Tensor:
    return record("sqrt", a)


def exp(a) -> Tensor:
    return record("exp", a)


def log(a) -> Tensor:
    return record("log", a)


def tanh(a) -> Tensor:
    return record("tanh", a)


def sigmoid(a) -> Tensor:
    return record("sigmoid", a)


def softplus(a) -> Tensor:
    return record("softplus", a)


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    return record("leaky_relu", a, slope=slope)


def maximum(a, floor: float) -> Tensor:
    return record("maximum", a, floor=float(floor))


def abs_(a) -> Tensor:
    return record("abs", a)


def norm(a) -> Tensor:
    return record("norm", a)


def arccos(a) -> Tensor:
    return record("arccos", a)


def cross(a, b) -> Tensor:
    return record("cross", a, b)


def identity(a) -> Tensor:
    return record("identity", a)


def expm_skew(w) -> Tensor:
    """Rotation matrix exp([w]x) for a 3-vector ``w``."""
    return record("expm_skew", w)


def conv2d(x, w, b, stride: int = 1, padding: int = 0) -> Tensor:
    return record("conv2d", x, w, b, stride=stride, padding=padding)


def dot(a, b) -> Tensor:
    return record("matmul", a, b)
