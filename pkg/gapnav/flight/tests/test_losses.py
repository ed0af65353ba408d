# PEP-8
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from flight.diffcore import Tape, Tensor, backward
from flight.sim import GapPose, gap_relative, rot_x
from flight.training.errors import LossError
from flight.training.losses import (
    LossWeights,
    StepTerms,
    action_loss,
    alignment_loss,
    gate_weight,
    jerk_loss,
    position_loss,
    rotation_loss,
    smoothness_losses,
    total_loss,
    velocity_loss,
)


AT_ORIGIN = GapPose(np.zeros(3), np.eye(3))


def rel_at(position, pose=AT_ORIGIN):
    return gap_relative(Tensor(position), pose)


@pytest.mark.parametrize("distance,expected", [(0.0, 1.0), (0.25, 0.75), (-0.5, 0.5), (1.0, 0.0), (2.0, 0.0)])
def test_gate_is_symmetric_triangle(distance, expected):
    assert gate_weight(rel_at([-distance, 0.0, 0.0])).item() == pytest.approx(expected)


def test_position_loss_vanishes_outside_the_gate():
    assert position_loss(rel_at([-2.0, 0.3, -0.4])).item() == 0.0


def test_position_loss_in_the_plane():
    assert position_loss(rel_at([0.0, 0.3, -0.4])).item() == pytest.approx(0.5)


@pytest.mark.parametrize("degrees,expected", [(0.0, 0.0), (30.0, 0.5), (90.0, 1.0)])
def test_rotation_loss_is_sine_of_the_error(degrees, expected):
    rotation = Tensor(rot_x(math.radians(degrees)))
    loss = rotation_loss(rotation, np.eye(3), rel_at(np.zeros(3)))
    assert loss.item() == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_rotation_loss_ignores_a_shared_world_rotation(seed):
    rng = np.random.default_rng(seed)
    rotation, gap_rotation, shared = Rotation.random(3, rng).as_matrix()
    rel = rel_at([-0.4, 0.1, 0.0])
    loss = rotation_loss(Tensor(rotation), gap_rotation, rel).item()
    moved = rotation_loss(Tensor(shared @ rotation), shared @ gap_rotation, rel).item()
    assert loss > 0.0
    assert moved == pytest.approx(loss, abs=1e-12)


def test_velocity_loss_before_and_after_the_plane():
    v_ref = np.array([1.0, 0.0, 0.0])
    velocity = Tensor([3.0, 0.0, 0.0])
    assert velocity_loss(velocity, v_ref, rel_at([-1.0, 0.0, 0.0])).item() == pytest.approx(2.0)
    assert velocity_loss(velocity, v_ref, rel_at([1.0, 0.0, 0.0])).item() == 0.0


@pytest.mark.parametrize("gap,expected", [
    ([2.0, 0.0, 0.0], 0.0),
    ([0.0, 2.0, 0.0], math.pi / 2),
    ([1.0, 1.0, 0.0], math.pi / 4),
])
def test_alignment_loss_is_the_bearing_angle(gap, expected):
    pose = GapPose(np.asarray(gap), np.eye(3))
    position = Tensor(np.zeros(3))
    loss = alignment_loss(position, pose.position, Tensor(np.eye(3)), rel_at([-1.0, 0.0, 0.0]))
    assert loss.item() == pytest.approx(expected, abs=1e-7)


def test_alignment_loss_at_the_gap_center_is_zero():
    position = Tensor(np.zeros(3))
    assert alignment_loss(position, np.zeros(3), Tensor(np.eye(3)), rel_at(np.zeros(3))).item() == 0.0


def test_zero_commands_cost_nothing():
    commands = [Tensor(np.zeros(4)) for _ in range(5)]
    l_a, l_j = smoothness_losses(commands, 0.1)
    assert (l_a.item(), l_j.item()) == (0.0, 0.0)


def test_constant_commands_have_no_jerk():
    u = Tensor([0.5, -0.5, 0.0, 1.0])
    l_a, l_j = smoothness_losses([u, u, u], 0.1)
    assert l_a.item() == pytest.approx(1.5)
    assert l_j.item() == 0.0


def test_single_step_change():
    commands = [Tensor(np.zeros(4)), Tensor([1.0, 0.0, 0.0, 0.0])]
    assert action_loss(commands).item() == pytest.approx(0.5)
    assert jerk_loss(commands, 0.1).item() == pytest.approx(100.0)


def test_jerk_needs_two_commands():
    with pytest.raises(LossError):
        jerk_loss([Tensor(np.zeros(4))], 0.1)
    with pytest.raises(LossError):
        action_loss([])


def test_total_loss_weights_and_averages():
    zero = Tensor(0.0)
    steps = [
        StepTerms(Tensor(0.4), zero, zero, zero),
        StepTerms(Tensor(0.6), zero, zero, zero),
    ]
    breakdown = total_loss(steps, LossWeights())
    assert breakdown.L_p.item() == pytest.approx(0.5)
    assert breakdown.total.item() == pytest.approx(5.0)
    assert set(breakdown.values()) == {"L_p", "L_r", "L_v", "L_f", "L_a", "L_j", "total"}


def test_total_loss_includes_smoothness():
    zero = Tensor(0.0)
    breakdown = total_loss([StepTerms(zero, zero, zero, zero)], LossWeights(), Tensor(2.0), Tensor(100.0))
    assert breakdown.total.item() == pytest.approx(0.01 * 2.0 + 1e-4 * 100.0)


def test_negative_weights_are_rejected():
    with pytest.raises(ValueError):
        LossWeights(lambda_p=-1.0)


@pytest.mark.parametrize("use_stop_gradient,expected", [(True, 0.0), (False, 0.5)])
def test_gate_gradient(use_stop_gradient, expected):
    tape = Tape()
    position = tape.leaf([-0.5, 0.3, -0.4])
    loss = position_loss(gap_relative(position, AT_ORIGIN), use_stop_gradient)
    assert loss.item() == pytest.approx(0.25)
    assert backward(tape, loss)[position][0] == pytest.approx(expected)
