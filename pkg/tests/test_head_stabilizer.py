import math

import numpy as np
import pandas as pd
import pytest

from src.config import load_config
from src.head_stabilizer import (
    TRACE_COLUMNS,
    ExperimentRunner,
    HeadStabilizationPipeline,
    MetricsReport,
    ModeMetrics,
    OperatorReference,
    SignalMetrics,
    SimTrace,
    compare,
    run_experiment,
    run_sweep,
)
from src.utils.contact_detector import AccelSample, ContactDecision, ContactStatus
from src.utils.force_estimator import TorqueReading
from src.utils.leg_model import joint_state_from_leg_length
from src.utils.plant_sim import SensorReadings, drop_state

from tests.conftest import SHORT_OVERRIDES

G = 9.81


def standing_readings(geom, head_zdd=G, wheel_az=0.0):
    q = joint_state_from_leg_length(geom, 0.2)
    lever = geom.link_length_L * math.sin(q.q1 + q.q2)
    return SensorReadings(
        accel=AccelSample(head_zdd=head_zdd, wheel_az=wheel_az, gravity_g=G),
        q=q,
        torque=TorqueReading(0.0, lever * 4.0 * G),
        L_est=0.2,
        dL_est=0.0,
    )


# Data models

def test_operator_reference():
    ref = OperatorReference(0.2, step=0.02, step_time=0.5)
    assert ref(0.0) == (0.2, 0.0, 0.0)
    assert ref(0.5) == (pytest.approx(0.22), 0.0, 0.0)
    assert OperatorReference(0.2)(100.0) == (0.2, 0.0, 0.0)


def test_sim_trace_frame_and_validation():
    trace = SimTrace(dt=0.001)
    for k in range(3):
        trace.append(
            t=k * 0.001, z_head=0.25, vz_head=0.0, Fz_est=0.0, Fz_true=40.0,
            L_d=0.2, L_d_prime=0.2, L_est=0.2, tau_knee=3.8, contact=1,
        )
    frame = trace.to_frame()
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame["contact"].dtype.kind == "i"
    assert len(trace) == 3
    trace.validate()
    assert len(trace.window(0.001)) == 2

    trace.columns["z_head"][1] = math.nan
    with pytest.raises(ValueError):
        trace.validate()


def test_signal_metrics_validation():
    with pytest.raises(ValueError):
        SignalMetrics(mae=0.2, rmse=0.1, p2p=0.3)
    with pytest.raises(ValueError):
        SignalMetrics(mae=0.1, rmse=0.2, p2p=-0.3)


def test_report_rows_layout():
    metrics = ModeMetrics(
        reference_height=0.25,
        position=SignalMetrics(mae=0.0103, rmse=0.012, p2p=0.05),
        velocity=SignalMetrics(mae=0.02, rmse=0.03, p2p=0.2),
    )
    better = ModeMetrics(
        reference_height=0.25,
        position=SignalMetrics(mae=0.0032, rmse=0.004, p2p=0.02),
        velocity=SignalMetrics(mae=0.01, rmse=0.015, p2p=0.1),
    )
    report = compare("exp1", 0, 0.5, metrics, better)
    rows = report.rows()
    assert [(r["signal"], r["metric"]) for r in rows] == [
        ("position", "MAE"), ("position", "RMSE"), ("position", "P2P"),
        ("velocity", "MAE"), ("velocity", "RMSE"), ("velocity", "P2P"),
    ]
    assert rows[0]["improvement"] == pytest.approx(68.9, abs=0.05)
    assert rows[0]["unit"] == "m" and rows[3]["unit"] == "m/s"


def test_compare_skips_zero_baseline():
    still = ModeMetrics(
        reference_height=0.25,
        position=SignalMetrics(mae=0.0, rmse=0.0, p2p=0.0),
        velocity=SignalMetrics(mae=0.0, rmse=0.0, p2p=0.0),
    )
    report = compare("flat", 0, 0.5, still, still)
    assert set(report.improvement_pct) == {
        f"{s}.{m}" for s in ("position", "velocity") for m in ("mae", "rmse", "p2p")
    }
    assert all(v is None for v in report.improvement_pct.values())


# Pipeline

def test_pipeline_rejects_unknown_mode():
    with pytest.raises(ValueError):
        HeadStabilizationPipeline(load_config(), "adaptive")


def test_proposed_pipeline_shapes_reference(geom):
    config = load_config(overrides=["estimator.gravity_compensation=true"])
    pipeline = HeadStabilizationPipeline(config, "proposed")
    out = pipeline.control(standing_readings(geom), 0.2)
    assert out.decision.status is ContactStatus.ON_GROUND
    assert out.F_z == pytest.approx(4.0 * G)
    # upward load shortens the reference
    assert out.L_d_prime < 0.2


def test_baseline_pipeline_keeps_reference(geom):
    config = load_config(overrides=["estimator.gravity_compensation=true"])
    pipeline = HeadStabilizationPipeline(config, "baseline")
    out = pipeline.control(standing_readings(geom), 0.2)
    # the estimate is still logged
    assert out.F_z == pytest.approx(4.0 * G)
    assert out.L_d_prime == 0.2


def test_pipeline_bypasses_when_off_ground(geom):
    config = load_config(overrides=["estimator.gravity_compensation=true"])
    pipeline = HeadStabilizationPipeline(config, "proposed")
    for _ in range(5):
        pipeline.control(standing_readings(geom), 0.2)
    assert pipeline.admittance.correction < 0.0

    airborne = standing_readings(geom, head_zdd=G + 5.0, wheel_az=25.0)
    outputs = [pipeline.control(airborne, 0.2) for _ in range(config.contact.debounce_ticks)]
    last = outputs[-1]
    assert last.decision.status is ContactStatus.OFF_GROUND
    assert last.F_z == 0.0
    assert last.L_d_prime == 0.2
    assert pipeline.admittance.correction == 0.0


def test_pipeline_holds_correction_without_estimate(geom):
    config = load_config(overrides=["estimator.gravity_compensation=true"])
    pipeline = HeadStabilizationPipeline(config, "proposed")
    for _ in range(5):
        pipeline.control(standing_readings(geom), 0.2)

    # head pushed up while the wheel stays put: on the ground, no estimate
    lifted = standing_readings(geom, head_zdd=G + 5.0, wheel_az=0.0)
    outputs = [pipeline.control(lifted, 0.2) for _ in range(config.contact.debounce_ticks)]
    assert outputs[-1].decision == ContactDecision(ContactStatus.ON_GROUND, False)
    held = pipeline.admittance.correction
    assert held < 0.0

    for _ in range(10):
        out = pipeline.control(lifted, 0.2)
        assert out.F_z == 0.0
        assert out.L_d_prime == pytest.approx(0.2 + held)
    assert pipeline.admittance.correction == held


# Closed loop

def test_flat_ground_equilibrium(flat_profile):
    runner = ExperimentRunner(load_config())
    for mode in ("baseline", "proposed"):
        trace = runner.simulate(mode, flat_profile, 10.0)
        z = trace.column("z_head")
        assert np.max(np.abs(z - z[0])) < 1e-4
        assert np.all(trace.column("contact") == 1)


def test_leg_length_step_settles(flat_profile):
    runner = ExperimentRunner(load_config())
    step_time = 0.1
    trace = runner.simulate("baseline", flat_profile, 1.5, reference=OperatorReference(0.2, step=0.02, step_time=step_time))
    t = trace.column("t")
    L = trace.column("L_est")
    settled = L[t >= step_time + 1.0]
    assert np.max(np.abs(settled - 0.22)) < 0.02 * 0.02
    # the step actually moved the leg
    assert np.max(L) > 0.22


def test_quasi_static_force_estimate(flat_profile):
    config = load_config(overrides=["estimator.gravity_compensation=true"])
    trace = ExperimentRunner(config).simulate("baseline", flat_profile, 1.0)
    estimate, truth = trace.column("Fz_est"), trace.column("Fz_true")
    np.testing.assert_allclose(estimate, truth, rtol=0.05)


def test_contact_loss_is_detected():
    config = load_config()
    runner = ExperimentRunner(config)
    profile = config.terrain_profile("flat")
    state = drop_state(runner.plant, runner.geom, profile, 0.2, clearance=0.01)
    trace = runner.simulate("proposed", profile, 0.3, state=state)
    contact = trace.column("contact")
    assert trace.column("Fz_true")[0] == 0.0
    assert 0 in contact[:6]


@pytest.mark.parametrize("scenario", ["exp1", "exp2", "exp3"])
def test_scenarios_run_without_faults(short_config, scenario):
    result = run_experiment(short_config, scenario)
    report = result.report
    assert report.scenario == scenario
    assert report.baseline is not None and report.proposed is not None
    assert report.baseline.position.mae > 0.0
    assert set(result.traces) == {"baseline", "proposed"}
    for trace in result.traces.values():
        trace.validate()
        assert np.all(trace.column("Fz_true") >= 0.0)


def test_flat_scenario_modes_agree(short_config):
    report = run_experiment(short_config, "flat").report
    assert report.baseline.position.mae < 1e-6
    assert report.proposed.position.mae < 1e-6


def test_single_mode_run(short_config):
    result = run_experiment(short_config, "exp1", modes=("baseline",))
    assert result.report.proposed is None
    assert result.report.improvement_pct == {}


def test_halving_step_size_converges():
    coarse = load_config(overrides=SHORT_OVERRIDES)
    fine = load_config(overrides=SHORT_OVERRIDES + ["plant.dt=0.0005"])
    profile = coarse.terrain_profile("exp1")
    duration = 2.0
    z_coarse = ExperimentRunner(coarse).simulate("baseline", profile, duration, x0=-0.2).column("z_head")
    z_fine = ExperimentRunner(fine).simulate("baseline", profile, duration, x0=-0.2).column("z_head")
    assert np.max(np.abs(z_fine[::2] - z_coarse)) < 1e-3


def test_identical_seeds_give_identical_outputs(tmp_path):
    overrides = SHORT_OVERRIDES + ["plant.imu_noise_std=0.05", "plant.encoder_noise_std=1e-4", "plant.torque_noise_std=0.01"]
    config = load_config(overrides=overrides, seed=3)
    run_experiment(config, "exp2", output_dir=tmp_path / "a")
    run_experiment(config, "exp2", output_dir=tmp_path / "b")
    for name in ("trace_baseline.csv", "trace_proposed.csv", "plot_proposed.csv",
                 "report.json", "report.txt", "config.yaml"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_saved_outputs(tmp_path, short_config):
    result = run_experiment(short_config, "exp3", output_dir=tmp_path)
    for name in ("trace_baseline.csv", "trace_proposed.csv", "plot_baseline.csv", "plot_proposed.csv",
                 "report.json", "report.txt", "config.yaml"):
        assert (tmp_path / name).exists()
    assert len(pd.read_csv(tmp_path / "trace_proposed.csv")) == len(result.traces["proposed"])
    assert load_config(tmp_path / "config.yaml") == short_config
    assert isinstance(MetricsReport.model_validate_json((tmp_path / "report.json").read_text()), MetricsReport)


def test_sweep(short_config_file):
    frame = run_sweep("admittance.K", ["1500", "2500"], scenario="exp1", config_path=str(short_config_file))
    assert list(frame["value"]) == ["1500", "2500"]
    assert "position.mae.improvement" in frame.columns
    assert frame["position.mae.baseline"].iloc[0] == pytest.approx(frame["position.mae.baseline"].iloc[1])


# Full courses with default tuning

@pytest.fixture(scope="module")
def default_reports():
    config = load_config()
    return {scenario: run_experiment(config, scenario).report for scenario in ("exp1", "exp2", "exp3")}


def test_slope_course_improves_every_metric(default_reports):
    improvements = default_reports["exp1"].improvement_pct
    assert improvements["position.mae"] >= 30.0
    assert len(improvements) == 6
    assert all(value is not None and value > 0.0 for value in improvements.values())


def test_rugged_course_reduces_peak_to_peak(default_reports):
    improvements = default_reports["exp2"].improvement_pct
    assert improvements["position.p2p"] >= 20.0
    assert improvements["position.mae"] > 0.0
    assert improvements["position.rmse"] > 0.0


def test_sinusoid_course_reduces_error(default_reports):
    improvements = default_reports["exp3"].improvement_pct
    assert improvements["position.mae"] >= 20.0
    assert improvements["velocity.rmse"] > 0.0


def test_flat_ground_agreement_with_gravity_compensation():
    # the compensated estimate carries the head weight, so it needs a spring-like tuning
    overrides = [
        "estimator.gravity_compensation=true",
        "admittance.K=2000",
        "admittance.B=120",
        "admittance.M=2",
        "admittance.k_ad=1",
        "experiment.transient_s=1.0",
    ]
    result = run_experiment(load_config(overrides=overrides), "flat")
    report = result.report
    assert report.proposed.position.mae < 5e-4
    assert report.proposed.position.p2p < 1e-3
    assert report.proposed.velocity.mae < 5e-3
    for trace in result.traces.values():
        assert np.all(trace.column("contact") == 1)
