# config.py
"""Configuration for the Wheeled Biped Head Stabilizer."""

import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from ruamel.yaml import YAML

from src.utils.admittance import AdmittanceParams
from src.utils.contact_detector import ContactDetector, parse_table_overrides
from src.utils.force_estimator import EstimatorParams
from src.utils.height_controller import HeightGains
from src.utils.leg_model import LegGeometry
from src.utils.plant_sim import PlantParams, TerrainKind, TerrainProfile

# Load dot_env
load_dotenv()

# Paths
BASE_DIR = Path(__file__).parent.resolve()
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = Path(os.getenv("HEADSTAB_OUTPUT_DIR", DATA_DIR / "runs"))
LOG_DIR = Path(os.getenv("HEADSTAB_LOG_DIR", BASE_DIR / "logs"))

# Leg geometry
LEG_CONFIG = {
    "L": 0.14,                      # Link length in m (both links)
}

# Ground contact detection
CONTACT_CONFIG = {
    "eps_zdd": 3.0,                 # Dead-band around g for the head IMU, m/s^2
    "eps_az": 20.0,                 # Dead-band around 0 for the wheel acceleration, m/s^2
    "debounce_ticks": 3,            # Consecutive identical classifications before switching
    "table": {},                    # Overrides of the contact table, e.g. {"+,0": {"status": "off_ground", "estimate": False}}
}

# Contact force estimation
ESTIMATOR_CONFIG = {
    "k1": 0.0,                      # Wheel torque projection onto the hip
    "k2": 1.0,                      # Wheel torque projection onto the knee (motor reaction on the shank)
    "gravity_compensation": False,  # False: F_z = f_z - m*zdd (literal), True: F_z = f_z - m*(zdd - g)
    "singularity_floor": 0.05,      # Minimum |sin q2| for a valid estimate
    "head_mass": 4.0,               # Head mass used for acceleration compensation, kg
    "hold_ticks": 50,               # Ticks to hold the last valid F_z on singular postures
}

# Admittance filter
ADMITTANCE_CONFIG = {
    "K": 4.0,                       # Stiffness, N/m (B/K = 10 s leak back to L_d)
    "B": 40.0,                      # Damping, N·s/m
    "M": 0.4,                       # Inertia, kg
    "k_ad": -1.0,                   # Compensation coefficient, negative: shorten under upward load
    "T": 1e-3,                      # Sampling period, s
    "L_min": None,                  # Lower clamp of L'_d, m (None: 0.1 * 2L)
    "L_max": None,                  # Upper clamp of L'_d, m (None: 0.98 * 2L)
}

# Height controller
HEIGHT_CONFIG = {
    "kp": 400.0,                    # Proportional gain
    "kd": 40.0,                     # Derivative gain
    "tau_max": 30.0,                # Knee torque saturation, N·m
    "m_H": 4.0,                     # Head mass for gravity feedforward, kg
}

# Plant
PLANT_CONFIG = {
    "head_mass": 4.0,               # Sprung point mass, kg
    "wheel_mass": 0.15,             # Unsprung wheel mass, kg
    "wheel_radius": 0.05,           # m
    "forward_speed": 0.5,           # Traversal speed, m/s
    "gravity_g": 9.81,              # m/s^2, shared by detector, estimator and controller
    "dt": 1e-3,                     # Integration step, s
    "ground_stiffness": 5e4,        # Penalty contact stiffness, N/m
    "ground_damping": 500.0,        # Penalty contact damping, N·s/m
    "leg_stiffness": 0.0,           # Passive leg spring, N/m (0 = pure actuator leg)
    "leg_damping": 0.0,             # Passive leg damper, N·s/m
    "leg_rest_length": 0.2,         # Passive spring rest length, m
    "imu_noise_std": 0.0,           # IMU noise, m/s^2
    "encoder_noise_std": 0.0,       # Encoder noise, rad
    "torque_noise_std": 0.0,        # Actuator torque noise, N·m
}

# Terrain generators
TERRAIN_CONFIG = {
    "slope_deg": 10.0,              # Grade of both slopes, degrees
    "slope_len_m": 0.35,            # Horizontal run of each slope, m
    "flat_len_m": 1.0,              # Plateau between the slopes, m
    "bump_amplitude_m": 0.02,       # Total amplitude of the rugged field, m
    "bump_wavelength_min_m": 0.1,   # Shortest bump wavelength, m
    "bump_wavelength_max_m": 0.4,   # Longest bump wavelength, m
    "bump_count": 8,                # Number of superposed sinusoids
    "rugged_len_m": 3.0,            # Length of the rugged section, m
    "sine_amplitude_m": 0.03,       # Undulation amplitude, m
    "sine_wavelength_m": 1.0,       # Undulation wavelength, m
    "sine_periods": 3,              # Number of undulations
}

# Experiment protocol
EXPERIMENT_CONFIG = {
    "leg_length_d": 0.2,            # Constant operator leg length, m
    "lead_in_m": 0.5,               # Flat ground before the terrain features, m
    "lead_out_m": 0.5,              # Flat ground after the terrain features, m
    "transient_s": 0.5,             # Start of each run excluded from metrics, s
    "calibration_s": 3.0,           # Flat-ground calibration run length, s
    "reference_window_s": 0.5,      # Final window averaged for the reference height, s
    "plot_every": 10,               # Row stride of the plot-data CSV
    "seed": 0,                      # Seed for terrain and sensor noise
}

SCENARIO_TERRAIN = {
    "exp1": TerrainKind.SINGLE_SLOPE,
    "exp2": TerrainKind.HIGH_FREQ_RUGGED,
    "exp3": TerrainKind.SINUSOID,
    "flat": TerrainKind.FLAT,
}

MODES = ("baseline", "proposed")


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration."""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LegSection(_Section):
    L: float = Field(LEG_CONFIG["L"], gt=0)


class ContactTableEntry(_Section):
    status: str = Field(pattern="^(on_ground|off_ground)$")
    estimate: bool


class ContactSection(_Section):
    eps_zdd: float = Field(CONTACT_CONFIG["eps_zdd"], gt=0)
    eps_az: float = Field(CONTACT_CONFIG["eps_az"], gt=0)
    debounce_ticks: int = Field(CONTACT_CONFIG["debounce_ticks"], ge=1)
    table: Dict[str, ContactTableEntry] = Field(default_factory=dict)


class EstimatorSection(_Section):
    k1: float = ESTIMATOR_CONFIG["k1"]
    k2: float = ESTIMATOR_CONFIG["k2"]
    gravity_compensation: bool = ESTIMATOR_CONFIG["gravity_compensation"]
    singularity_floor: float = Field(ESTIMATOR_CONFIG["singularity_floor"], gt=0, lt=1)
    head_mass: float = Field(ESTIMATOR_CONFIG["head_mass"], gt=0)
    hold_ticks: int = Field(ESTIMATOR_CONFIG["hold_ticks"], ge=0)


class AdmittanceSection(_Section):
    K: float = Field(ADMITTANCE_CONFIG["K"], gt=0)
    B: float = Field(ADMITTANCE_CONFIG["B"], ge=0)
    M: float = Field(ADMITTANCE_CONFIG["M"], ge=0)
    k_ad: float = ADMITTANCE_CONFIG["k_ad"]
    T: float = Field(ADMITTANCE_CONFIG["T"], gt=0)
    L_min: Optional[float] = Field(ADMITTANCE_CONFIG["L_min"], gt=0)
    L_max: Optional[float] = Field(ADMITTANCE_CONFIG["L_max"], gt=0)


class HeightSection(_Section):
    kp: float = Field(HEIGHT_CONFIG["kp"], gt=0)
    kd: float = Field(HEIGHT_CONFIG["kd"], ge=0)
    tau_max: float = Field(HEIGHT_CONFIG["tau_max"], gt=0)
    m_H: float = Field(HEIGHT_CONFIG["m_H"], gt=0)


class PlantSection(_Section):
    head_mass: float = Field(PLANT_CONFIG["head_mass"], gt=0)
    wheel_mass: float = Field(PLANT_CONFIG["wheel_mass"], gt=0)
    wheel_radius: float = Field(PLANT_CONFIG["wheel_radius"], gt=0)
    forward_speed: float = Field(PLANT_CONFIG["forward_speed"], gt=0)
    gravity_g: float = Field(PLANT_CONFIG["gravity_g"], gt=0)
    dt: float = Field(PLANT_CONFIG["dt"], gt=0)
    ground_stiffness: float = Field(PLANT_CONFIG["ground_stiffness"], gt=0)
    ground_damping: float = Field(PLANT_CONFIG["ground_damping"], ge=0)
    leg_stiffness: float = Field(PLANT_CONFIG["leg_stiffness"], ge=0)
    leg_damping: float = Field(PLANT_CONFIG["leg_damping"], ge=0)
    leg_rest_length: float = Field(PLANT_CONFIG["leg_rest_length"], gt=0)
    imu_noise_std: float = Field(PLANT_CONFIG["imu_noise_std"], ge=0)
    encoder_noise_std: float = Field(PLANT_CONFIG["encoder_noise_std"], ge=0)
    torque_noise_std: float = Field(PLANT_CONFIG["torque_noise_std"], ge=0)


class TerrainSection(_Section):
    slope_deg: float = Field(TERRAIN_CONFIG["slope_deg"], gt=-90, lt=90)
    slope_len_m: float = Field(TERRAIN_CONFIG["slope_len_m"], ge=0)
    flat_len_m: float = Field(TERRAIN_CONFIG["flat_len_m"], ge=0)
    bump_amplitude_m: float = Field(TERRAIN_CONFIG["bump_amplitude_m"], ge=0)
    bump_wavelength_min_m: float = Field(TERRAIN_CONFIG["bump_wavelength_min_m"], gt=0)
    bump_wavelength_max_m: float = Field(TERRAIN_CONFIG["bump_wavelength_max_m"], gt=0)
    bump_count: int = Field(TERRAIN_CONFIG["bump_count"], ge=1)
    rugged_len_m: float = Field(TERRAIN_CONFIG["rugged_len_m"], ge=0)
    sine_amplitude_m: float = Field(TERRAIN_CONFIG["sine_amplitude_m"], ge=0)
    sine_wavelength_m: float = Field(TERRAIN_CONFIG["sine_wavelength_m"], gt=0)
    sine_periods: int = Field(TERRAIN_CONFIG["sine_periods"], ge=0)


class ExperimentSection(_Section):
    leg_length_d: float = Field(EXPERIMENT_CONFIG["leg_length_d"], gt=0)
    lead_in_m: float = Field(EXPERIMENT_CONFIG["lead_in_m"], ge=0)
    lead_out_m: float = Field(EXPERIMENT_CONFIG["lead_out_m"], ge=0)
    transient_s: float = Field(EXPERIMENT_CONFIG["transient_s"], ge=0)
    calibration_s: float = Field(EXPERIMENT_CONFIG["calibration_s"], gt=0)
    reference_window_s: float = Field(EXPERIMENT_CONFIG["reference_window_s"], gt=0)
    plot_every: int = Field(EXPERIMENT_CONFIG["plot_every"], ge=1)
    seed: int = Field(EXPERIMENT_CONFIG["seed"], ge=0)


class SimulationConfig(_Section):
    """Complete, validated configuration of one experiment."""
    leg: LegSection = Field(default_factory=LegSection)
    contact: ContactSection = Field(default_factory=ContactSection)
    estimator: EstimatorSection = Field(default_factory=EstimatorSection)
    admittance: AdmittanceSection = Field(default_factory=AdmittanceSection)
    height: HeightSection = Field(default_factory=HeightSection)
    plant: PlantSection = Field(default_factory=PlantSection)
    terrain: TerrainSection = Field(default_factory=TerrainSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)

    @model_validator(mode="after")
    def check_consistency(self):
        if self.plant.dt > self.admittance.T:
            raise ValueError(f"plant.dt ({self.plant.dt}) must not exceed admittance.T ({self.admittance.T})")
        L_min, L_max = self.leg_bounds
        if not L_min < L_max <= 2.0 * self.leg.L:
            raise ValueError(f"Leg bounds [{L_min}, {L_max}] invalid for link length {self.leg.L}")
        if not L_min <= self.experiment.leg_length_d <= L_max:
            raise ValueError(f"experiment.leg_length_d outside [{L_min}, {L_max}]")
        if self.terrain.bump_wavelength_min_m > self.terrain.bump_wavelength_max_m:
            raise ValueError("terrain.bump_wavelength_min_m exceeds bump_wavelength_max_m")
        return self

    @property
    def leg_bounds(self):
        reach = 2.0 * self.leg.L
        L_min = self.admittance.L_min if self.admittance.L_min is not None else 0.1 * reach
        L_max = self.admittance.L_max if self.admittance.L_max is not None else 0.98 * reach
        return L_min, L_max

    def geometry(self) -> LegGeometry:
        return LegGeometry(link_length_L=self.leg.L)

    def contact_detector(self) -> ContactDetector:
        table = parse_table_overrides({k: v.model_dump() for k, v in self.contact.table.items()})
        return ContactDetector(
            eps_zdd=self.contact.eps_zdd,
            eps_az=self.contact.eps_az,
            debounce_ticks=self.contact.debounce_ticks,
            table=table,
        )

    def estimator_params(self) -> EstimatorParams:
        return EstimatorParams(
            k1=self.estimator.k1,
            k2=self.estimator.k2,
            head_mass_m=self.estimator.head_mass,
            gravity_g=self.plant.gravity_g,
            gravity_compensation=self.estimator.gravity_compensation,
            singularity_floor=self.estimator.singularity_floor,
        )

    def admittance_params(self) -> AdmittanceParams:
        L_min, L_max = self.leg_bounds
        return AdmittanceParams(
            K=self.admittance.K,
            B=self.admittance.B,
            M=self.admittance.M,
            k_ad=self.admittance.k_ad,
            T=self.admittance.T,
            L_min=L_min,
            L_max=L_max,
        )

    def height_gains(self) -> HeightGains:
        return HeightGains(
            k_p=self.height.kp,
            k_d=self.height.kd,
            head_mass_mH=self.height.m_H,
            gravity_g=self.plant.gravity_g,
            tau_max=self.height.tau_max,
        )

    def plant_params(self) -> PlantParams:
        L_min, L_max = self.leg_bounds
        return PlantParams(L_min=L_min, L_max=L_max, **self.plant.model_dump())

    def terrain_profile(self, scenario: str) -> TerrainProfile:
        if scenario not in SCENARIO_TERRAIN:
            raise ConfigError(f"Unknown scenario '{scenario}', expected one of {sorted(SCENARIO_TERRAIN)}")
        return TerrainProfile(
            kind=SCENARIO_TERRAIN[scenario],
            seed=self.experiment.seed,
            **self.terrain.model_dump(),
        )


def _yaml() -> YAML:
    yaml = YAML(typ="safe")
    yaml.default_flow_style = False
    return yaml


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"Cannot set '{key}': '{part}' is not a section")
    node[parts[-1]] = value


def parse_override(text: str) -> tuple:
    """Split 'section.key=value' into the key and a YAML-typed value."""
    if "=" not in text:
        raise ConfigError(f"Override '{text}' must look like section.key=value")
    key, raw = text.split("=", 1)
    value = _yaml().load(raw) if raw.strip() else None
    return key.strip(), value


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Iterable[str]] = None,
    seed: Optional[int] = None,
) -> SimulationConfig:
    """
    Load and validate a configuration.

    Args:
        path: Optional YAML file; missing sections and keys use the defaults
        overrides: Optional 'section.key=value' strings applied after the file
        seed: Optional seed replacing experiment.seed

    Returns:
        SimulationConfig: validated configuration

    Raises:
        ConfigError: if the file cannot be read or fails validation
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = _yaml().load(f) or {}
        except Exception as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must be a mapping of sections")

    for text in overrides or []:
        key, value = parse_override(text)
        _set_dotted(data, key, value)
    if seed is not None:
        _set_dotted(data, "experiment.seed", seed)

    try:
        return SimulationConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def save_config(config: SimulationConfig, path: Union[str, Path]) -> Path:
    """Write the resolved configuration next to the run outputs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        _yaml().dump(config.model_dump(mode="json"), f)
    return path
