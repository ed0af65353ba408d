# PEP-8
import math

import numpy as np
import pytest

from flight.config import with_overrides
from flight.harness.bench import bench_render
from flight.harness.controllers import HoverController
from flight.harness.errors import DegenerateDatasetError, ReportIntegrityError
from flight.harness.evaluation import (
    eval_multi_gap,
    eval_single_gap,
    eval_target_noise,
    eval_traversability,
    fly_course,
    timeout_steps,
    trajectory_score,
)
from flight.harness.gradcheck import MICRO_ARCH, gradient_check
from flight.harness.metrics import crossing_errors, precision_recall, tilt_bucket
from flight.harness.reports import load_report, read_summary, write_report
from flight.harness.settings import ResetMode
from flight.policy import POLICY_PREFIXES, Policy, PolicyArch, PolicyParams
from flight.sim import GapConfig, GapCourse, GapPose, generate_course, generate_gap, rot_x


class AlwaysCrossing(HoverController):
    """Hovers, but its crossing classifier always fires."""

    def __init__(self) -> None:
        self.resets = 0

    def reset_hidden(self) -> None:
        self.resets += 1

    def crossing_probability(self) -> float | None:
        return 0.9


def brute_force_ap(labels, scores):
    labels, scores = np.asarray(labels, float), np.asarray(scores, float)
    recalls, precisions = [0.0], []
    for threshold in sorted(set(scores), reverse=True):
        chosen = scores >= threshold
        tp = float(np.sum(labels[chosen]))
        precisions.append(tp / chosen.sum())
        recalls.append(tp / labels.sum())
    precisions.insert(0, precisions[0])
    return sum(
        (recalls[i + 1] - recalls[i]) * (precisions[i + 1] + precisions[i]) / 2.0
        for i in range(len(recalls) - 1)
    )


def test_perfect_ranking_has_unit_precision():
    curve = precision_recall([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert curve.average_precision == pytest.approx(1.0)
    np.testing.assert_allclose(curve.recall, [0.5, 1.0, 1.0, 1.0])


def test_constant_scores_give_the_prevalence():
    curve = precision_recall([1, 0, 0, 1, 0], [0.5] * 5)
    assert len(curve.thresholds) == 1
    assert curve.average_precision == pytest.approx(0.4)


@pytest.mark.parametrize("seed", range(4))
def test_average_precision_matches_a_direct_sweep(seed):
    rng = np.random.default_rng(seed)
    labels = rng.random(40) < 0.3
    labels[:2] = [True, False]
    scores = np.round(rng.random(40), 1)
    curve = precision_recall(labels, scores)
    assert curve.average_precision == pytest.approx(brute_force_ap(labels, scores), abs=1e-12)


def test_single_class_is_degenerate():
    with pytest.raises(DegenerateDatasetError):
        precision_recall([1, 1, 1], [0.2, 0.4, 0.6])
    with pytest.raises(ValueError):
        precision_recall([1, 0], [0.5])


def test_centered_aligned_crossing_has_no_error():
    pose = GapPose(np.array([3.0, 0.0, 1.5]), np.eye(3))
    errors = crossing_errors(pose, [2.9, 0.0, 1.5], np.eye(3), [3.1, 0.0, 1.5], np.eye(3))
    assert errors.position_error == pytest.approx(0.0, abs=1e-12)
    assert errors.attitude_error_deg == pytest.approx(0.0, abs=1e-9)
    assert errors.fraction == pytest.approx(0.5)


def test_crossing_errors_interpolate_between_steps():
    pose = GapPose(np.zeros(3), np.eye(3))
    errors = crossing_errors(
        pose,
        [-0.1, 0.1, 0.0], np.eye(3),
        [0.3, 0.3, 0.0], rot_x(math.radians(20.0)),
    )
    assert errors.fraction == pytest.approx(0.25)
    assert errors.position_error == pytest.approx(0.15)
    assert errors.attitude_error_deg == pytest.approx(5.0)


@pytest.mark.parametrize("tilt,bucket", [(0.0, "0-30"), (-29.9, "0-30"), (45.0, "30-60"), (-75.0, "60-80"), (80.0, "60-80")])
def test_tilt_buckets(tilt, bucket):
    assert tilt_bucket(tilt) == bucket


def test_timeout_is_three_nominal_flight_times():
    config = GapConfig(distance_range=(3.0, 3.0), lateral_range=(0.0, 0.0), height_range=(1.5, 1.5))
    course = GapCourse((generate_gap(0, config),))
    assert timeout_steps(course, [0.0, 0.0, 1.5], speed=3.0, dt=0.125) == 24


def test_hovering_never_succeeds(micro_run):
    report = eval_single_gap(HoverController, micro_run, seed=1, trials=3)
    assert report.success_rate == 0.0
    assert [t.outcome for t in report.trials] == ["timeout"] * 3
    assert all(not g.crossed for t in report.trials for g in t.gaps)
    report.audit()


def test_classifier_reset_fires_once_per_gap(micro_run):
    course = generate_course([1, 3, 0, 0], 2, micro_run.gap, (1.0, 1.5))
    controller = AlwaysCrossing()
    flight = fly_course(controller, course, micro_run, 3.0, ResetMode.CLASSIFIER, max_steps=6)
    assert controller.resets == 2
    assert [g.reset_step for g in flight.gaps] == [0, 1]
    assert flight.outcome == "timeout"
    assert flight.steps == 6


def test_single_gap_course_matches_single_gap_eval(micro_run, tmp_path):
    params = PolicyParams.init(micro_run.policy, 0)
    single = eval_single_gap(params, micro_run, seed=2, trials=2, tilt_range=(-30.0, 30.0))
    multi = eval_multi_gap(params, micro_run, seed=2, n_gaps=1, reset_mode=ResetMode.NONE,
                           trials=2, tilt_range=(-30.0, 30.0))
    a, _ = write_report(single, tmp_path / "single", "eval")
    b, _ = write_report(multi, tmp_path / "multi", "eval")
    assert a.read_text(encoding="utf-8") == b.read_text(encoding="utf-8")


def test_evaluation_is_seeded(micro_run, tmp_path):
    params = PolicyParams.init(micro_run.policy, 0)
    a, _ = write_report(eval_single_gap(params, micro_run, seed=4, trials=2), tmp_path / "a", "eval")
    b, _ = write_report(eval_single_gap(params, micro_run, seed=4, trials=2), tmp_path / "b", "eval")
    assert a.read_text(encoding="utf-8") == b.read_text(encoding="utf-8")


def test_report_round_trip_and_tamper_detection(micro_run, tmp_path):
    report = eval_multi_gap(HoverController, micro_run, seed=5, n_gaps=2, trials=2)
    csv_path, summary_path = write_report(report, tmp_path, "multi")
    assert csv_path.name == "multi_trials.csv"
    assert read_summary(summary_path)["kind"] == "multi-gap"

    loaded = load_report(csv_path, summary_path)
    assert loaded.success_rate == report.success_rate
    assert len(loaded.trials) == 2
    assert len(loaded.trials[0].gaps) == 2

    text = summary_path.read_text(encoding="utf-8")
    summary_path.write_text(text.replace("\nsuccess_rate=0.0\n", "\nsuccess_rate=0.5\n"), encoding="utf-8")
    with pytest.raises(ReportIntegrityError) as info:
        load_report(csv_path, summary_path)
    assert info.value.key == "success_rate"


def test_summary_version_is_checked(tmp_path):
    path = tmp_path / "x_summary.txt"
    path.write_text("version=99\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_summary(path)


def test_zero_noise_matches_single_gap(micro_run, tmp_path):
    params = PolicyParams.init(micro_run.policy, 0)
    sweep = eval_target_noise(params, micro_run, seed=6, levels=[0.0, 0.5], trials=2)
    single = eval_single_gap(params, micro_run, seed=6, trials=2)
    a, _ = write_report(sweep.reports[0.0], tmp_path / "sweep", "eval")
    b, _ = write_report(single, tmp_path / "single", "eval")
    assert a.read_text(encoding="utf-8") == b.read_text(encoding="utf-8")
    assert [r["noise"] for r in sweep.rows()] == [0.0, 0.5]
    assert len(sweep.paths[0.5]) == 2
    assert all(len(path) >= 2 for path in sweep.paths[0.5])


def test_negative_noise_is_rejected(micro_run):
    with pytest.raises(ValueError):
        eval_target_noise(HoverController, micro_run, seed=0, levels=[-1.0], trials=1)


def test_traversability_scores_every_trajectory(micro_run):
    run = with_overrides(micro_run, {"aux.horizon": 60})
    params = PolicyParams.init(run.policy, 0)
    try:
        result = eval_traversability(params, run, seed=0, n_trajectories=6)
    except DegenerateDatasetError:
        pytest.skip("all sampled trajectories share one label")
    assert len(result.scores) == len(result.labels) == 6
    assert np.all((result.scores > 0) & (result.scores < 1))
    assert 0.0 <= result.curve.average_precision <= 1.0


@pytest.mark.parametrize("bias", [60.0, -60.0])
def test_saturated_traversability_score_stays_open(bias):
    arch = PolicyArch(input_height=4, input_width=4, channels=(2, 2, 2), embed=4, aux_hidden=3)
    params = PolicyParams.zeros(arch)
    params = params.replaced({"traversability.out.bias": np.full_like(params["traversability.out.bias"], bias)})
    hidden = np.zeros((5, arch.embed))
    pre_crossing = np.array([True, True, True, False, False])
    score = trajectory_score(Policy(params), hidden, pre_crossing)
    assert 0.0 < score < 1.0
    assert trajectory_score(Policy(params), hidden, np.zeros(5, dtype=bool)) == pytest.approx(score, rel=1e-12)


def test_gradients_match_finite_differences():
    result = gradient_check(seed=0, steps=3)
    assert result.passed, f"{result.worst}: {result.max_rel_error:.3e}"
    assert result.checked > 0


# About 6 s per seed; the full sweep takes a little over two minutes.
@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_five_step_rollout_gradients_match_finite_differences(seed):
    result = gradient_check(seed=seed, steps=5)
    assert result.passed, f"seed {seed}, {result.worst}: {result.max_rel_error:.3e}"
    assert set(result.errors) == set(PolicyParams.init(MICRO_ARCH, 0).names(POLICY_PREFIXES))


def test_culled_and_bruteforce_renderers_agree(micro_run):
    result = bench_render(micro_run, seed=0, frames=4)
    assert result.mismatches == 0
    assert result.as_dict()["frames"] == 4
