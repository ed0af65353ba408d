# PEP-8
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from flight.diffcore import NonFiniteError, Tensor, sum_
from flight.sim import (
    ControlCommand,
    DynamicsParams,
    GapPose,
    InvalidStateError,
    QuadState,
    command_from_raw,
    exp_so3,
    gap_relative,
    randomize_params,
    stabilize,
    step,
)
from flight.sim.geometry import orthonormality_drift

from .helpers import assert_gradients


def quaternion_replay(params, initial, commands):
    """Same first-order filters and point-mass kinematics, attitude kept as a unit quaternion."""
    a_w, a_c = params.alpha_omega, params.alpha_thrust
    dt = params.dt
    p = initial.position.value.copy()
    v = initial.velocity.value.copy()
    q = Rotation.from_matrix(initial.rotation.value)
    omega = initial.omega.value.copy()
    thrust = float(initial.thrust.value)
    trace = []
    for omega_c, thrust_c in commands:
        omega = a_w * omega + (1.0 - a_w) * omega_c
        thrust = a_c * thrust + (1.0 - a_c) * thrust_c
        z_body = q.apply([0.0, 0.0, 1.0])
        acc = z_body * thrust / params.mass - np.array([0.0, 0.0, params.gravity]) - params.drag * v
        q = q * Rotation.from_rotvec(omega * dt)
        p = p + v * dt + 0.5 * acc * dt * dt
        v = v + acc * dt
        trace.append((p.copy(), q.as_matrix()))
    return trace


def random_commands(seed, n, params):
    rng = np.random.default_rng(seed)
    return [
        (rng.uniform(-2.0, 2.0, size=3), params.hover_thrust * rng.uniform(0.9, 1.1))
        for _ in range(n)
    ]


def test_hover_is_an_equilibrium():
    params = DynamicsParams()
    state = QuadState.hover(params, [0.0, 0.0, 1.5])
    nxt = step(state, ControlCommand.from_arrays(np.zeros(3), params.hover_thrust), params)
    np.testing.assert_allclose(nxt.acceleration.value, 0.0, atol=1e-12)
    np.testing.assert_allclose(nxt.position.value, [0.0, 0.0, 1.5], atol=1e-15)
    np.testing.assert_array_equal(nxt.rotation.value, np.eye(3))


def test_instant_rate_response_turns_a_quarter():
    params = DynamicsParams(tau_omega=1e-9, dt=0.05)
    state = QuadState.hover(params, np.zeros(3))
    rate = np.array([0.0, 0.0, math.pi / (2 * params.dt)])
    nxt = step(state, ControlCommand.from_arrays(rate, params.hover_thrust), params)
    expected = Rotation.from_quat([0.0, 0.0, math.sin(math.pi / 4), math.cos(math.pi / 4)]).as_matrix()
    np.testing.assert_allclose(nxt.rotation.value, expected, atol=1e-9)


@pytest.mark.parametrize("params", [DynamicsParams(), DynamicsParams(tau_omega=0.2, tau_thrust=0.3, dt=0.01)])
def test_held_command_is_a_filter_fixed_point(params):
    state = QuadState.hover(params, [0.0, 0.0, 50.0])
    omega_c = np.array([0.5, -0.3, 0.2])
    thrust_c = 1.2 * params.hover_thrust
    cmd = ControlCommand.from_arrays(omega_c, thrust_c)
    for _ in range(math.ceil(12 * max(params.tau_omega, params.tau_thrust) / params.dt)):
        state = step(state, cmd, params)
    np.testing.assert_allclose(state.omega.value, omega_c, rtol=0, atol=1e-4)
    assert float(state.thrust.value) == pytest.approx(thrust_c, abs=1e-4)


def test_zero_thrust_is_free_fall():
    params = DynamicsParams(drag=1e-12)
    state = QuadState.from_arrays([0.0, 0.0, 100.0], thrust=0.0)
    cmd = ControlCommand.from_arrays(np.zeros(3), 0.0)
    for k in range(1, 31):
        state = step(state, cmd, params)
        t = k * params.dt
        assert state.velocity.value[2] == pytest.approx(-params.gravity * t, abs=1e-9)
        assert state.position.value[2] == pytest.approx(100.0 - 0.5 * params.gravity * t * t, abs=1e-9)
    np.testing.assert_allclose(state.velocity.value[:2], 0.0, atol=1e-15)
    np.testing.assert_array_equal(state.rotation.value, np.eye(3))


def test_step_gradients_with_respect_to_the_command():
    params = DynamicsParams()
    start = QuadState.from_arrays(
        [0.2, -0.1, 1.5],
        rotation=Rotation.from_euler("xyz", [0.2, -0.3, 0.4]).as_matrix(),
        velocity=[1.0, 0.4, -0.2],
        omega=[0.3, -0.2, 0.1],
        thrust=params.hover_thrust,
    )
    rng = np.random.default_rng(3)
    weights = [Tensor(rng.normal(size=shape)) for shape in [(3,), (3, 3), (3,), (3,), (3,)]]

    def two_steps(omega_c, thrust_c):
        cmd = ControlCommand(omega_c, thrust_c)
        state = step(step(start, cmd, params), cmd, params)
        total = state.thrust * 0.3
        for part, w in zip([state.position, state.rotation, state.velocity, state.acceleration, state.omega], weights):
            total = total + sum_(part * w)
        return total

    assert_gradients(two_steps, [1.0, -0.5, 0.8], params.hover_thrust * 1.1)


def test_exp_so3_maps_x_to_y():
    r = exp_so3([0.0, 0.0, math.pi / 2]).value
    np.testing.assert_allclose(r[:, 0], [0.0, 1.0, 0.0], atol=1e-15)


def test_trajectory_matches_quaternion_integrator():
    params = DynamicsParams(dt=0.01)
    state = QuadState.hover(params, [0.0, 0.0, 1.5])
    commands = random_commands(5, 1000, params)
    oracle = quaternion_replay(params, state, commands)
    for k, (omega_c, thrust_c) in enumerate(commands):
        state = step(state, ControlCommand.from_arrays(omega_c, thrust_c), params)
        p, r = oracle[k]
        np.testing.assert_allclose(state.position.value, p, rtol=0, atol=1e-6)
        np.testing.assert_allclose(state.rotation.value, r, rtol=0, atol=1e-7)


@pytest.mark.slow
def test_rotation_stays_orthonormal():
    params = DynamicsParams(dt=0.01)
    state = QuadState.hover(params, [0.0, 0.0, 1.5])
    rng = np.random.default_rng(9)
    for k in range(10000):
        cmd = ControlCommand.from_arrays(rng.uniform(-6.0, 6.0, size=3), params.hover_thrust)
        state = stabilize(step(state, cmd, params), k + 1)
    assert orthonormality_drift(state.rotation.value) < 1e-6
    assert np.linalg.det(state.rotation.value) == pytest.approx(1.0, abs=1e-6)


def test_stabilize_snaps_drifted_rotation():
    params = DynamicsParams()
    drifted = np.eye(3) + 1e-6 * np.random.default_rng(1).normal(size=(3, 3))
    state = QuadState.from_arrays([0.0, 0.0, 1.0], rotation=drifted, thrust=params.hover_thrust)
    fixed = stabilize(state, 1)
    assert orthonormality_drift(fixed.rotation.value) < 1e-12


def test_invalid_states_are_rejected():
    with pytest.raises(InvalidStateError) as info:
        QuadState.from_arrays(np.zeros(3), rotation=np.diag([1.0, 1.0, -1.0]))
    assert info.value.field == "rotation"
    with pytest.raises(NonFiniteError):
        QuadState.from_arrays([np.nan, 0.0, 0.0])


def test_step_rejects_reflections():
    params = DynamicsParams()
    state = QuadState.hover(params, np.zeros(3))
    flipped = QuadState(state.position, Tensor(np.diag([1.0, 1.0, -1.0])), state.velocity,
                        state.acceleration, state.omega, state.thrust)
    with pytest.raises(InvalidStateError):
        step(flipped, ControlCommand.from_arrays(np.zeros(3), 1.0), params)


def test_degenerate_randomization_returns_base():
    base = DynamicsParams()
    assert randomize_params(base, 4, scale_range=(1.0, 1.0)) == base


def test_randomization_is_seeded():
    base = DynamicsParams()
    assert randomize_params(base, [1, 2]) == randomize_params(base, [1, 2])
    assert randomize_params(base, [1, 2]) != randomize_params(base, [1, 3])


def test_randomization_stays_in_range():
    base = DynamicsParams()
    perturbed = randomize_params(base, 8, scale_range=(0.9, 1.1))
    for name in ("tau_omega", "tau_thrust", "drag"):
        ratio = getattr(perturbed, name) / getattr(base, name)
        assert 0.9 <= ratio <= 1.1


def test_randomization_covers_the_range_evenly():
    base = DynamicsParams()
    draws = [randomize_params(base, seed) for seed in range(10_000)]
    for name in ("tau_omega", "tau_thrust", "drag"):
        ratios = np.array([getattr(p, name) for p in draws]) / getattr(base, name)
        assert ratios.min() >= 0.9 and ratios.max() <= 1.1
        assert ratios.min() < 0.905 and ratios.max() > 1.095
        assert ratios.mean() == pytest.approx(1.0, abs=0.01)
    assert {p.mass for p in draws} == {base.mass}


def test_gap_relative_at_center():
    rel = gap_relative(Tensor(np.zeros(3)), GapPose(np.zeros(3), np.eye(3)))
    assert float(rel.distance.value) == 0.0
    np.testing.assert_array_equal(rel.projected.value, [0.0, 0.0])


def test_gap_relative_before_plane():
    rel = gap_relative(Tensor([-2.0, 0.3, -0.1]), GapPose(np.zeros(3), np.eye(3)))
    assert float(rel.distance.value) == pytest.approx(2.0)
    np.testing.assert_allclose(rel.projected.value, [0.3, -0.1])
    assert rel.before_plane == 1.0


def test_crossing_flag_latches():
    pose = GapPose(np.zeros(3), np.eye(3))
    after = gap_relative(Tensor([0.5, 0.0, 0.0]), pose)
    assert after.before_plane == 0.0
    back = gap_relative(Tensor([-0.5, 0.0, 0.0]), pose).latched(after.before_plane)
    assert back.before_plane == 0.0


def test_zero_raw_output_maps_to_half_thrust():
    params = DynamicsParams()
    cmd = command_from_raw(Tensor(np.zeros(4)), params)
    np.testing.assert_array_equal(cmd.omega_c.value, np.zeros(3))
    assert float(cmd.thrust_c.value) == pytest.approx(params.thrust_max / 2)


def test_commands_stay_within_limits():
    params = DynamicsParams()
    raw = Tensor(np.random.default_rng(0).normal(scale=50.0, size=4))
    assert command_from_raw(raw, params).within(params)


def test_filter_time_constant_check(captured):
    assert not DynamicsParams().check()
    assert "not below the filter time constants" in captured.text
    assert DynamicsParams(dt=0.01).check()


def test_non_positive_parameters_are_rejected():
    with pytest.raises(ValueError):
        DynamicsParams(mass=0.0)
