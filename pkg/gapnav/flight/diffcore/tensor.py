# PEP-8
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError, ShapeError, TapeError


Backward = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass(frozen=True)
class Node:
    op: str
    inputs: tuple[int | None, ...]
    backward: Backward | None
    shape: tuple[int, ...]


class Tensor:
    """A float64 array, optionally recorded on a tape.

    A tensor without a node is a constant: gradients never reach it.
    """

    __slots__ = ("value", "node", "tape")
    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(
        self,
        value,
        node: int | None = None,
        tape: Tape | None = None,
        *,
        checked: bool = False,
    ) -> None:
        arr = np.array(value, dtype=np.float64)
        if not checked:
            if any(n <= 0 for n in arr.shape):
                raise ShapeError("tensor", arr.shape)
            if not np.all(np.isfinite(arr)):
                raise NonFiniteError("tensor creation")
        self.value = arr
        self.node = node
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def is_constant(self) -> bool:
        return self.node is None

    @property
    def T(self) -> Tensor:
        return ops.transpose(self)

    def item(self) -> float:
        if self.value.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        kind = "const" if self.is_constant else f"node={self.node}"
        return f"Tensor({self.value!r}, {kind})"

    def __len__(self) -> int:
        return self.value.shape[0]

    def __add__(self, other) -> Tensor:
        return ops.add(self, other)

    def __radd__(self, other) -> Tensor:
        return ops.add(other, self)

    def __sub__(self, other) -> Tensor:
        return ops.sub(self, other)

    def __rsub__(self, other) -> Tensor:
        return ops.sub(other, self)

    def __mul__(self, other) -> Tensor:
        return ops.mul(self, other)

    def __rmul__(self, other) -> Tensor:
        return ops.mul(other, self)

    def __truediv__(self, other) -> Tensor:
        return ops.div(self, other)

    def __rtruediv__(self, other) -> Tensor:
        return ops.div(other, self)

    def __neg__(self) -> Tensor:
        return ops.mul(self, -1.0)

    def __pow__(self, exponent: float) -> Tensor:
        return ops.power(self, exponent)

    def __matmul__(self, other) -> Tensor:
        return ops.matmul(self, other)

    def __rmatmul__(self, other) -> Tensor:
        return ops.matmul(other, self)

    def __getitem__(self, index) -> Tensor:
        return ops.slice_(self, index)


class Tape:
    """Append-only record of primitive ops for one rollout."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.decay_marks: dict[int, float] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, value) -> Tensor:
        arr = Tensor(value).value
        self.nodes.append(Node("leaf", (), None, arr.shape))
        return Tensor(arr, len(self.nodes) - 1, self, checked=True)

    def append(
        self,
        op: str,
        inputs: Sequence[Tensor],
        value: np.ndarray,
        backward: Backward,
    ) -> Tensor:
        ids = tuple(t.node for t in inputs)
        for i in ids:
            if i is not None and i >= len(self.nodes):
                raise TapeError(f"{op}: input node {i} is not on this tape")
        self.nodes.append(Node(op, ids, backward, value.shape))
        return Tensor(value, len(self.nodes) - 1, self, checked=True)


class GradientStore:
    """Accumulated gradients keyed by node id; constants have no entry."""

    def __init__(self, grads: dict[int, np.ndarray]) -> None:
        self._grads = grads

    def __contains__(self, key: Tensor | int) -> bool:
        return self._key(key) in self._grads

    def __getitem__(self, key: Tensor | int) -> np.ndarray:
        return self._grads[self._key(key)]

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._grads))

    def __len__(self) -> int:
        return len(self._grads)

    def grad(self, tensor: Tensor) -> np.ndarray:
        """Gradient w.r.t. ``tensor``; zeros when no path reaches it."""
        if tensor.node is not None and tensor.node in self._grads:
            return self._grads[tensor.node]
        return np.zeros_like(tensor.value)

    @staticmethod
    def _key(key: Tensor | int) -> int | None:
        return key.node if isinstance(key, Tensor) else key


def mark_step_boundary(
    tape: Tape,
    nodes: Iterable[Tensor | int],
    alpha: float,
    dt: float,
) -> None:
    if alpha < 0:
        raise ValueError(f"decay alpha must be >= 0, got {alpha}")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")

    factor = math.exp(-alpha * dt)
    for item in nodes:
        node = item.node if isinstance(item, Tensor) else item
        if node is None:
            continue
        if not 0 <= node < len(tape.nodes):
            raise TapeError(f"node {node} is not on this tape")
        if node in tape.decay_marks:
            raise TapeError(f"node {node} is already marked as a step boundary")
        tape.decay_marks[node] = factor


def backward(tape: Tape, loss: Tensor) -> GradientStore:
    if loss.value.size != 1:
        raise TapeError(f"loss must be a scalar, got shape {loss.shape}")
    if loss.node is None or loss.tape is not tape:
        raise TapeError("loss is not recorded on this tape")

    grads: dict[int, np.ndarray] = {loss.node: np.ones_like(loss.value)}
    for index in range(loss.node, -1, -1):
        grad = grads.get(index)
        if grad is None:
            continue
        node = tape.nodes[index]
        if node.backward is None:
            continue

        factor = tape.decay_marks.get(index)
        upstream = grad * factor if factor is not None else grad
        for input_id, input_grad in zip(node.inputs, node.backward(upstream)):
            if input_id is None or input_grad is None:
                continue
            acc = grads.get(input_id)
            grads[input_id] = input_grad if acc is None else acc + input_grad

    return GradientStore(grads)


@dataclass
class TapeStats:
    nodes: int = 0
    marks: int = 0
    op_counts: dict[str, int] = field(default_factory=dict)

    @classmethod
    def of(cls, tape: Tape) -> TapeStats:
        counts: dict[str, int] = {}
        for node in tape.nodes:
            counts[node.op] = counts.get(node.op, 0) + 1
        return cls(nodes=len(tape.nodes), marks=len(tape.decay_marks), op_counts=counts)


from . import ops  # noqa: E402
