# PEP-8
from __future__ import annotations

from typing import Protocol

import numpy as np

from flight.diffcore import Tensor
from flight.policy import HiddenState, ObservationState, Policy, PolicyParams
from flight.sim import ControlCommand, DynamicsParams


class Controller(Protocol):
    def reset(self) -> None: ...

    def reset_hidden(self) -> None: ...

    def act(self, depth: Tensor, obs: ObservationState, dynamics: DynamicsParams) -> ControlCommand: ...

    def crossing_probability(self) -> float | None: ...

    def traversability(self) -> float | None: ...


class PolicyController:
    """Closed-loop policy without a tape; keeps its recurrent state between calls."""

    def __init__(self, params: PolicyParams) -> None:
        self.policy = Policy(params)
        self.hidden: HiddenState = self.policy.reset_hidden()

    def reset(self) -> None:
        self.hidden = self.policy.reset_hidden()

    def reset_hidden(self) -> None:
        self.hidden = self.policy.reset_hidden()

    def act(self, depth: Tensor, obs: ObservationState, dynamics: DynamicsParams) -> ControlCommand:
        cmd, self.hidden = self.policy.forward(depth, obs, self.hidden, dynamics)
        return cmd

    def crossing_probability(self) -> float | None:
        return self.policy.predict_crossing(self.hidden)

    def traversability(self) -> float | None:
        return self.policy.predict_traversability(self.hidden)


class HoverController:
    """Zero rates at hover thrust; never reaches a gap."""

    def reset(self) -> None:
        pass

    def reset_hidden(self) -> None:
        pass

    def act(self, depth: Tensor, obs: ObservationState, dynamics: DynamicsParams) -> ControlCommand:
        return ControlCommand.from_arrays(np.zeros(3), dynamics.hover_thrust)

    def crossing_probability(self) -> float | None:
        return None

    def traversability(self) -> float | None:
        return None
