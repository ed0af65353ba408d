# PEP-8
from __future__ import annotations

import hashlib
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

from flight.diffcore import (
    NonFiniteError,
    ShapeError,
    Tape,
    Tensor,
    concat,
    conv2d,
    leaky_relu,
    matmul,
    matvec,
    reshape,
    sigmoid,
    tanh,
    transpose,
)
from flight.sim.dynamics import ControlCommand, DynamicsParams, QuadState, command_from_raw

from .errors import PolicyError


POLICY_PREFIXES = ("conv", "visual", "state", "gru", "head")
AUX_PREFIXES = ("crossing", "traversability")

_OPEN_UNIT = (np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


def probability(logits):
    """Sigmoid kept strictly inside (0, 1) for any finite logit."""
    p = np.clip(expit(np.asarray(logits, dtype=np.float64)), *_OPEN_UNIT)
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class PolicyArch:
    input_height: int = 12
    input_width: int = 16
    channels: tuple[int, ...] = (32, 64, 128)
    kernels: tuple[int, ...] = (2, 3, 3)
    strides: tuple[int, ...] = (2, 1, 1)
    embed: int = 192
    state_dim: int = 9
    output_dim: int = 4
    aux_hidden: int = 1024
    slope: float = 0.01

    def __post_init__(self):
        if not len(self.channels) == len(self.kernels) == len(self.strides):
            raise ValueError("channels, kernels and strides must have equal length")
        if min(self.channels + self.kernels + self.strides) <= 0:
            raise ValueError("conv sizes must be positive")
        if self.output_dim != 4 or self.state_dim != 9:
            raise ValueError("the head emits 4 commands from a 9-D state")
        for c, h, w in self.conv_shapes():
            if h <= 0 or w <= 0:
                raise ValueError(f"conv stack collapses a {self.input_height}x{self.input_width} input")

    def padding(self, layer: int) -> int:
        return (self.kernels[layer] - 1) // 2 if self.strides[layer] == 1 else 0

    def conv_shapes(self) -> list[tuple[int, int, int]]:
        shapes = []
        h, w = self.input_height, self.input_width
        for i, (c, k, s) in enumerate(zip(self.channels, self.kernels, self.strides)):
            p = self.padding(i)
            h = (h + 2 * p - k) // s + 1
            w = (w + 2 * p - k) // s + 1
            shapes.append((c, h, w))
        return shapes

    @property
    def flat_dim(self) -> int:
        c, h, w = self.conv_shapes()[-1]
        return c * h * w

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        in_channels = 1
        for i, (c, k) in enumerate(zip(self.channels, self.kernels), 1):
            shapes[f"conv{i}.weight"] = (c, in_channels, k, k)
            shapes[f"conv{i}.bias"] = (c,)
            in_channels = c
        e = self.embed
        shapes["visual.weight"] = (e, self.flat_dim)
        shapes["visual.bias"] = (e,)
        shapes["state.weight"] = (e, self.state_dim)
        shapes["state.bias"] = (e,)
        shapes["gru.w_ih"] = (3 * e, e)
        shapes["gru.w_hh"] = (3 * e, e)
        shapes["gru.b_ih"] = (3 * e,)
        shapes["gru.b_hh"] = (3 * e,)
        shapes["head.weight"] = (self.output_dim, e)
        shapes["head.bias"] = (self.output_dim,)
        for head in AUX_PREFIXES:
            shapes[f"{head}.hidden.weight"] = (self.aux_hidden, e)
            shapes[f"{head}.hidden.bias"] = (self.aux_hidden,)
            shapes[f"{head}.out.weight"] = (1, self.aux_hidden)
            shapes[f"{head}.out.bias"] = (1,)
        return shapes

    def as_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> PolicyArch:
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def _matches(name: str, prefixes: Iterable[str] | None) -> bool:
    return prefixes is None or any(name.startswith(p) for p in prefixes)


class PolicyParams:
    """Named float64 parameter arrays for one architecture."""

    def __init__(self, arch: PolicyArch, arrays: dict[str, np.ndarray]) -> None:
        shapes = arch.param_shapes()
        missing = set(shapes) - set(arrays)
        unknown = set(arrays) - set(shapes)
        if missing or unknown:
            raise PolicyError(f"parameter names do not match architecture "
                              f"(missing {sorted(missing)}, unknown {sorted(unknown)})")
        self.arch = arch
        self.arrays: dict[str, np.ndarray] = {}
        for name, shape in shapes.items():
            array = np.array(arrays[name], dtype=np.float64)
            if array.shape != shape:
                raise PolicyError(f"{name} has shape {array.shape}, expected {shape}", name)
            if not np.all(np.isfinite(array)):
                raise PolicyError(f"{name} holds non-finite values", name)
            self.arrays[name] = array

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def __len__(self) -> int:
        return len(self.arrays)

    @classmethod
    def zeros(cls, arch: PolicyArch) -> PolicyParams:
        return cls(arch, {k: np.zeros(s) for k, s in arch.param_shapes().items()})

    @classmethod
    def init(cls, arch: PolicyArch, seed) -> PolicyParams:
        """Uniform fan-in init for linear and conv layers, orthogonal recurrent blocks."""
        rng = np.random.default_rng(seed)
        arrays = {}
        shapes = arch.param_shapes()
        for name, shape in shapes.items():
            if name == "gru.w_hh":
                arrays[name] = np.vstack([_orthogonal(rng, arch.embed) for _ in range(3)])
                continue
            if name.startswith("gru."):
                weight_shape = shapes["gru.w_ih"]
            elif name.endswith(".bias"):
                weight_shape = shapes[name.removesuffix(".bias") + ".weight"]
            else:
                weight_shape = shape
            fan_in = int(np.prod(weight_shape[1:]))
            bound = 1.0 / np.sqrt(fan_in)
            arrays[name] = rng.uniform(-bound, bound, size=shape)
        return cls(arch, arrays)

    def names(self, prefixes: Iterable[str] | None = None) -> list[str]:
        return [n for n in self.arrays if _matches(n, prefixes)]

    def digest(self, prefixes: Iterable[str] | None = POLICY_PREFIXES) -> str:
        """SHA-256 over names, shapes and raw bytes of the selected tensors."""
        sha = hashlib.sha256()
        for name in sorted(self.names(prefixes)):
            array = self.arrays[name]
            sha.update(name.encode("utf-8"))
            sha.update(repr(array.shape).encode("ascii"))
            sha.update(np.ascontiguousarray(array, dtype="<f8").tobytes())
        return sha.hexdigest()

    def copy(self) -> PolicyParams:
        return PolicyParams(self.arch, {k: v.copy() for k, v in self.arrays.items()})

    def replaced(self, updates: dict[str, np.ndarray]) -> PolicyParams:
        return PolicyParams(self.arch, {**self.arrays, **updates})


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class HiddenState:
    h: Tensor

    @classmethod
    def zeros(cls, size: int) -> HiddenState:
        return cls(Tensor(np.zeros(size)))


def reset_hidden(arch: PolicyArch | None = None) -> HiddenState:
    return HiddenState.zeros((arch or PolicyArch()).embed)


@dataclass(frozen=True)
class ObservationState:
    v_body: Tensor
    r_col2: Tensor
    v_target: Tensor

    @classmethod
    def from_state(cls, state: QuadState, v_target) -> ObservationState:
        rotation = state.rotation
        obs = cls(
            v_body=matvec(transpose(rotation), state.velocity),
            r_col2=rotation[:, 1],
            v_target=v_target if isinstance(v_target, Tensor) else Tensor(v_target),
        )
        obs.validate()
        return obs

    def validate(self) -> None:
        length = float(np.linalg.norm(self.r_col2.value))
        if abs(length - 1.0) > 1e-6:
            raise PolicyError(f"rotation column has norm {length:.9f}", "state")

    def vector(self) -> Tensor:
        return concat([self.v_body, self.r_col2, self.v_target])


class Policy:
    """Parameters bound to a tape.

    Only names selected by ``trainable`` become tape leaves; the rest are
    constants, so they receive no gradient.
    """

    def __init__(
        self,
        params: PolicyParams,
        tape: Tape | None = None,
        trainable: Iterable[str] | None = POLICY_PREFIXES,
    ) -> None:
        self.params = params
        self.arch = params.arch
        self.tape = tape
        self.weights: dict[str, Tensor] = {}
        for name, array in params.arrays.items():
            if tape is not None and trainable is not None and _matches(name, trainable):
                self.weights[name] = tape.leaf(array)
            else:
                self.weights[name] = Tensor(array, checked=True)

    @classmethod
    def bind(cls, params: PolicyParams, tape: Tape | None = None, trainable=POLICY_PREFIXES) -> Policy:
        return cls(params, tape, trainable)

    def leaves(self) -> dict[str, Tensor]:
        return {k: t for k, t in self.weights.items() if not t.is_constant}

    @contextmanager
    def _layer(self, name: str):
        try:
            yield
        except NonFiniteError as e:
            raise PolicyError(f"non-finite activation in layer {name}", name) from e

    def _linear(self, prefix: str, x: Tensor) -> Tensor:
        return matvec(self.weights[f"{prefix}.weight"], x) + self.weights[f"{prefix}.bias"]

    def reset_hidden(self) -> HiddenState:
        return HiddenState.zeros(self.arch.embed)

    def act(self, depth: Tensor, obs: ObservationState, hidden: HiddenState) -> tuple[Tensor, HiddenState]:
        """Raw 4-D head output and the next hidden state."""
        arch = self.arch
        expected = (1, arch.input_height, arch.input_width)
        if depth.shape != expected:
            raise ShapeError("policy depth input", depth.shape, expected)
        if hidden.h.shape != (arch.embed,):
            raise ShapeError("policy hidden state", hidden.h.shape, (arch.embed,))

        x = depth
        for i, stride in enumerate(arch.strides):
            name = f"conv{i + 1}"
            with self._layer(name):
                x = conv2d(
                    x, self.weights[f"{name}.weight"], self.weights[f"{name}.bias"],
                    stride=stride, padding=arch.padding(i),
                )
                x = leaky_relu(x, arch.slope)

        with self._layer("visual"):
            visual = self._linear("visual", reshape(x, (arch.flat_dim,)))
        with self._layer("state"):
            fused = visual + self._linear("state", obs.vector())
        with self._layer("gru"):
            h = self._gru(fused, hidden.h)
        with self._layer("head"):
            raw = self._linear("head", h)
        return raw, HiddenState(h)

    def forward(
        self,
        depth: Tensor,
        obs: ObservationState,
        hidden: HiddenState,
        dynamics: DynamicsParams,
    ) -> tuple[ControlCommand, HiddenState]:
        raw, hidden = self.act(depth, obs, hidden)
        return command_from_raw(raw, dynamics), hidden

    __call__ = forward

    def _gru(self, x: Tensor, h: Tensor) -> Tensor:
        e = self.arch.embed
        w = self.weights
        gi = matvec(w["gru.w_ih"], x) + w["gru.b_ih"]
        gh = matvec(w["gru.w_hh"], h) + w["gru.b_hh"]
        r = sigmoid(gi[0:e] + gh[0:e])
        z = sigmoid(gi[e:2 * e] + gh[e:2 * e])
        n = tanh(gi[2 * e:] + r * gh[2 * e:])
        return (1.0 - z) * n + z * h

    def _aux_logit(self, head: str, hidden: HiddenState) -> Tensor:
        with self._layer(head):
            x = leaky_relu(self._linear(f"{head}.hidden", hidden.h), self.arch.slope)
            return self._linear(f"{head}.out", x)[0]

    def aux_logits(self, head: str, hidden: Tensor) -> Tensor:
        """Logits of one auxiliary head for a (N, embed) stack of hidden states."""
        w = self.weights
        with self._layer(head):
            x = matmul(hidden, transpose(w[f"{head}.hidden.weight"])) + w[f"{head}.hidden.bias"]
            x = leaky_relu(x, self.arch.slope)
            z = matmul(x, transpose(w[f"{head}.out.weight"])) + w[f"{head}.out.bias"]
            return reshape(z, (hidden.shape[0],))

    def crossing_logit(self, hidden: HiddenState) -> Tensor:
        return self._aux_logit("crossing", hidden)

    def traversability_logit(self, hidden: HiddenState) -> Tensor:
        return self._aux_logit("traversability", hidden)

    def predict_crossing(self, hidden: HiddenState) -> float:
        return probability(self.crossing_logit(hidden).value)

    def predict_traversability(self, hidden: HiddenState) -> float:
        return probability(self.traversability_logit(hidden).value)


def predict_crossing(params: PolicyParams, hidden: HiddenState) -> float:
    return Policy(params).predict_crossing(hidden)


def predict_traversability(params: PolicyParams, hidden: HiddenState) -> float:
    return Policy(params).predict_traversability(hidden)

