"""
Wheeled Biped Head Stabilizer

Closed-loop head-height stabilization for a wheeled bipedal robot in the
sagittal plane: ground contact detection and proprioceptive force
estimation feed an admittance filter that reshapes the leg-length
reference of a PD + feedforward height controller. The experiment runner
drives the plant over the benchmark terrains and compares the baseline
(height controller only) with the proposed pipeline.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from src.config import MODES, OUTPUT_DIR, SimulationConfig, load_config, save_config
from src.utils.admittance import AdmittanceFilter
from src.utils.contact_detector import ContactDecision, ContactStatus, GateAction, gate
from src.utils.force_estimator import ForceEstimator
from src.utils.height_controller import HeightCommand, track
from src.utils.metrics import METRIC_NAMES, MetricsError, evaluate, improvement
from src.utils.plant_sim import (
    SensorReadings,
    SimState,
    SimulationFault,
    TerrainProfile,
    initial_state,
    sensors,
    step_plant,
)
from src.utils.reporting import generate_summary_report, write_plot_data, write_trace_csv

logger = logging.getLogger("head_stabilizer")

TRACE_COLUMNS = ["t", "z_head", "vz_head", "Fz_est", "Fz_true", "L_d", "L_d_prime", "L_est", "tau_knee", "contact"]


# Data Models
@dataclass(frozen=True)
class OperatorReference:
    """Operator leg-length command L_d(t) with its rate and acceleration."""
    length: float
    step: float = 0.0
    step_time: float = math.inf

    def __call__(self, t: float) -> Tuple[float, float, float]:
        value = self.length + (self.step if t >= self.step_time else 0.0)
        return value, 0.0, 0.0


@dataclass
class SimTrace:
    """Per-tick record of plant truth and controller internals."""
    dt: float
    columns: Dict[str, List[float]] = field(default_factory=lambda: {name: [] for name in TRACE_COLUMNS})

    def __len__(self) -> int:
        return len(self.columns["t"])

    def append(self, **values) -> None:
        for name in TRACE_COLUMNS:
            self.columns[name].append(values[name])

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.columns, columns=TRACE_COLUMNS)
        frame["contact"] = frame["contact"].astype(int)
        return frame

    def window(self, start: float) -> "SimTrace":
        """Trace restricted to t >= start."""
        t = self.column("t")
        first = int(np.searchsorted(t, start - 0.5 * self.dt))
        clipped = SimTrace(dt=self.dt)
        clipped.columns = {name: values[first:] for name, values in self.columns.items()}
        return clipped

    def validate(self) -> None:
        """Check the uniform time base and the absence of NaNs."""
        t = self.column("t")
        if len(t) > 1 and not np.allclose(np.diff(t), self.dt, rtol=0, atol=1e-9):
            raise ValueError("Trace time base is not uniform")
        for name in TRACE_COLUMNS:
            if np.isnan(self.column(name)).any():
                raise ValueError(f"Trace column '{name}' contains NaN")


class SignalMetrics(BaseModel):
    mae: float
    rmse: float
    p2p: float = Field(ge=0)

    @model_validator(mode="after")
    def check_rmse_bounds_mae(self):
        if self.rmse < self.mae - 1e-12 * max(1.0, self.mae):
            raise ValueError(f"rmse ({self.rmse}) below mae ({self.mae})")
        return self


class ModeMetrics(BaseModel):
    reference_height: float
    position: SignalMetrics
    velocity: SignalMetrics


class MetricsReport(BaseModel):
    """Stabilization metrics of one scenario, laid out like the result tables."""
    scenario: str
    seed: int
    transient_s: float
    baseline: Optional[ModeMetrics] = None
    proposed: Optional[ModeMetrics] = None
    improvement_pct: Dict[str, Optional[float]] = Field(default_factory=dict)

    @field_validator("scenario")
    def validate_scenario(cls, v):
        if not v:
            raise ValueError("scenario must not be empty")
        return v

    def rows(self) -> List[Dict[str, object]]:
        """One row per (signal, metric): metric, unit, baseline, proposed, improvement."""
        rows = []
        for signal, unit in (("position", "m"), ("velocity", "m/s")):
            for name in METRIC_NAMES:
                key = f"{signal}.{name}"
                rows.append({
                    "signal": signal,
                    "metric": name.upper(),
                    "unit": unit,
                    "baseline": getattr(getattr(self.baseline, signal), name) if self.baseline else None,
                    "proposed": getattr(getattr(self.proposed, signal), name) if self.proposed else None,
                    "improvement": self.improvement_pct.get(key),
                })
        return rows


@dataclass(frozen=True)
class ControlOutput:
    tau_knee: float
    F_z: float
    L_d_prime: float
    decision: ContactDecision


class HeadStabilizationPipeline:
    """
    Per-tick controller: contact detection, force estimation, admittance
    shaping (proposed mode only) and height tracking.
    """

    def __init__(self, config: SimulationConfig, mode: str = "proposed"):
        if mode not in MODES:
            raise ValueError(f"Unknown mode '{mode}', expected one of {MODES}")
        self.mode = mode
        self.geom = config.geometry()
        self.gains = config.height_gains()
        self.detector = config.contact_detector()
        self.estimator = ForceEstimator(self.geom, config.estimator_params(), config.estimator.hold_ticks)
        self.admittance = AdmittanceFilter(config.admittance_params())

    def control(self, readings: SensorReadings, L_d: float, dL_d: float = 0.0, ddL_d: float = 0.0) -> ControlOutput:
        decision = self.detector.update(readings.accel)

        F_z = 0.0
        if gate(decision) is GateAction.RUN_ESTIMATOR:
            F_z = self.estimator.update(readings.q, readings.torque, readings.accel.head_zdd)

        L_d_prime = L_d
        if decision.status is ContactStatus.OFF_GROUND:
            self.admittance.reset()
        elif self.mode == "proposed":
            if decision.estimate_force:
                L_d_prime = self.admittance.step(F_z, L_d)
            else:
                # on the ground without an estimate: hold the correction
                L_d_prime = self.admittance.hold(L_d)
            dL_d += self.admittance.correction_rate

        cmd = HeightCommand(L_d=L_d_prime, L_est=readings.L_est, dL_d=dL_d, ddL_d=ddL_d, dL_est=readings.dL_est)
        tau = track(self.gains, cmd, self.geom, readings.q)
        return ControlOutput(tau_knee=tau, F_z=F_z, L_d_prime=L_d_prime, decision=decision)


@dataclass
class ExperimentResult:
    scenario: str
    traces: Dict[str, SimTrace]
    report: MetricsReport


class ExperimentRunner:
    """Runs plant + controller over the benchmark terrains."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.geom = config.geometry()
        self.plant = config.plant_params()
        self.control_every = max(1, int(round(config.admittance.T / self.plant.dt)))

    def simulate(
        self,
        mode: str,
        profile: TerrainProfile,
        duration: float,
        x0: float = 0.0,
        reference: Optional[Callable[[float], Tuple[float, float, float]]] = None,
        state: Optional[SimState] = None,
    ) -> SimTrace:
        """
        Run one closed-loop simulation and record its trace.

        Raises:
            SimulationFault: propagated from the plant with the offending tick
        """
        exp = self.config.experiment
        reference = reference or OperatorReference(exp.leg_length_d)
        pipeline = HeadStabilizationPipeline(self.config, mode)
        rng = np.random.default_rng(exp.seed)
        if state is None:
            state = initial_state(self.plant, self.geom, profile, reference(0.0)[0], x0)

        trace = SimTrace(dt=self.plant.dt)
        n_ticks = int(round(duration / self.plant.dt))
        output: Optional[ControlOutput] = None
        L_d = reference(state.t)[0]

        for k in range(n_ticks):
            readings = sensors(state, self.plant, self.geom, rng)
            if k % self.control_every == 0:
                L_d, dL_d, ddL_d = reference(state.t)
                output = pipeline.control(readings, L_d, dL_d, ddL_d)

            trace.append(
                t=state.t,
                z_head=state.z_head,
                vz_head=state.vz_head,
                Fz_est=output.F_z,
                Fz_true=state.F_normal_true,
                L_d=L_d,
                L_d_prime=output.L_d_prime,
                L_est=readings.L_est,
                tau_knee=output.tau_knee,
                contact=1 if output.decision.status is ContactStatus.ON_GROUND else 0,
            )
            try:
                state = step_plant(state, self.plant, self.geom, output.tau_knee, profile)
            except SimulationFault as e:
                logger.error(f"{mode} run on {profile.kind.value} aborted: {e.reason} (tick {e.tick})")
                raise

        return trace

    def calibrate(self, mode: str) -> float:
        """Steady-state head height on flat ground, used as the error reference."""
        exp = self.config.experiment
        trace = self.simulate(mode, self.config.terrain_profile("flat"), exp.calibration_s)
        settled = trace.window(exp.calibration_s - exp.reference_window_s)
        reference = float(np.mean(settled.column("z_head")))
        logger.info(f"Calibrated {mode} reference head height: {reference:.6f} m")
        return reference

    def run(self, scenario: str, modes: Sequence[str] = MODES) -> ExperimentResult:
        exp = self.config.experiment
        profile = self.config.terrain_profile(scenario)
        distance = exp.lead_in_m + profile.course_length + exp.lead_out_m
        duration = max(distance / self.plant.forward_speed, exp.transient_s + self.plant.dt)

        traces: Dict[str, SimTrace] = {}
        metrics: Dict[str, ModeMetrics] = {}
        for mode in modes:
            reference = self.calibrate(mode)
            logger.info(f"Running {scenario} ({profile.kind.value}) in {mode} mode for {duration:.2f} s")
            trace = self.simulate(mode, profile, duration, x0=-exp.lead_in_m)
            trace.validate()
            traces[mode] = trace
            metrics[mode] = self.evaluate(trace, reference)

        report = compare(scenario, exp.seed, exp.transient_s, metrics.get("baseline"), metrics.get("proposed"))
        return ExperimentResult(scenario=scenario, traces=traces, report=report)

    def evaluate(self, trace: SimTrace, reference: float) -> ModeMetrics:
        window = trace.window(self.config.experiment.transient_s)
        return ModeMetrics(
            reference_height=reference,
            position=SignalMetrics(**evaluate(window.column("z_head"), reference)),
            velocity=SignalMetrics(**evaluate(window.column("vz_head"), 0.0)),
        )

    def save_results(self, result: ExperimentResult, output_dir: Path = OUTPUT_DIR) -> Dict[str, Path]:
        """Save traces, plot data, the report and the resolved config."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        paths: Dict[str, Path] = {}
        for mode, trace in result.traces.items():
            frame = trace.to_frame()
            paths[f"trace_{mode}"] = write_trace_csv(frame, output_dir / f"trace_{mode}.csv")
            paths[f"plot_{mode}"] = write_plot_data(frame, output_dir / f"plot_{mode}.csv", self.config.experiment.plot_every)
        paths.update(generate_summary_report(result.report, output_dir))
        paths["config"] = save_config(self.config, output_dir / "config.yaml")
        logger.info(f"Results saved to {output_dir}")
        return paths


def compare(
    scenario: str,
    seed: int,
    transient_s: float,
    baseline: Optional[ModeMetrics],
    proposed: Optional[ModeMetrics],
) -> MetricsReport:
    """Assemble the report and the per-metric improvements."""
    improvements: Dict[str, Optional[float]] = {}
    if baseline and proposed:
        for signal in ("position", "velocity"):
            for name in METRIC_NAMES:
                key = f"{signal}.{name}"
                try:
                    improvements[key] = improvement(
                        getattr(getattr(baseline, signal), name),
                        getattr(getattr(proposed, signal), name),
                    )
                except MetricsError as e:
                    logger.warning(f"Improvement of {key} not computed: {e}")
                    improvements[key] = None
    return MetricsReport(
        scenario=scenario,
        seed=seed,
        transient_s=transient_s,
        baseline=baseline,
        proposed=proposed,
        improvement_pct=improvements,
    )


def run_experiment(
    config: SimulationConfig,
    scenario: str,
    modes: Sequence[str] = MODES,
    output_dir: Optional[Path] = None,
) -> ExperimentResult:
    """Run baseline and/or proposed on one scenario; write outputs if output_dir is given."""
    runner = ExperimentRunner(config)
    result = runner.run(scenario, modes)
    if output_dir is not None:
        runner.save_results(result, output_dir)
    return result


def _sweep_job(task: Tuple[Optional[str], Tuple[str, ...], Optional[int], str, str, str]) -> Dict[str, object]:
    config_path, base_overrides, seed, param, value, scenario = task
    config = load_config(config_path, overrides=[*base_overrides, f"{param}={value}"], seed=seed)
    report = run_experiment(config, scenario).report
    row: Dict[str, object] = {"param": param, "value": value}
    for entry in report.rows():
        key = f"{entry['signal']}.{entry['metric'].lower()}"
        row[f"{key}.baseline"] = entry["baseline"]
        row[f"{key}.proposed"] = entry["proposed"]
        row[f"{key}.improvement"] = entry["improvement"]
    return row


def run_sweep(
    param: str,
    values: Sequence[str],
    scenario: str = "exp1",
    config_path: Optional[str] = None,
    jobs: int = 1,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
) -> pd.DataFrame:
    """
    Parameter study: one baseline/proposed comparison per value.

    Jobs are independent; with jobs > 1 they run in a process pool.
    """
    tasks = [(config_path, tuple(overrides), seed, param, value, scenario) for value in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, tasks))
    else:
        rows = [_sweep_job(task) for task in tasks]
    return pd.DataFrame(rows)
