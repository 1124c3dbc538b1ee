"""
Sagittal-plane plant and terrain generators for the Wheeled Biped Head Stabilizer.

The plant is a point-mass head on a massless two-link leg above a wheel.
The wheel rolls forward at a fixed speed; its vertical motion is resolved
against the terrain with a unilateral penalty (spring-damper) contact.
Pitch is constrained: the head stays straight above the wheel, and the
leg keeps the symmetric posture q1 = -q2/2.

Integration is semi-implicit Euler at a fixed step. Ground damping is
treated implicitly so the stiff contact stays stable with a light wheel.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.utils.contact_detector import AccelSample
from src.utils.force_estimator import TorqueReading
from src.utils.leg_model import (
    JointState,
    LegGeometry,
    joint_state_from_leg_length,
    leg_length,
    leg_length_rate,
    wheel_acceleration,
)

# Configure logger
logger = logging.getLogger("plant_sim")


class SimulationFault(RuntimeError):
    """Raised when the plant leaves its valid operating range."""

    def __init__(self, tick: int, reason: str):
        super().__init__(f"Simulation fault at tick {tick}: {reason}")
        self.tick = tick
        self.reason = reason


# ---------------------------------------------------------------------------
# Terrain
# ---------------------------------------------------------------------------

class TerrainKind(str, Enum):
    SINGLE_SLOPE = "single_slope"
    HIGH_FREQ_RUGGED = "high_freq_rugged"
    SINUSOID = "sinusoid"
    FLAT = "flat"


@dataclass(frozen=True)
class TerrainProfile:
    """
    Parametric terrain height h(x). Features start at x = 0; the ground is
    flat at height 0 before that.
    """
    kind: TerrainKind = TerrainKind.FLAT
    # single slope
    slope_deg: float = 10.0
    slope_len_m: float = 0.35       # horizontal run of each slope, about 6 cm of rise at 10 deg
    flat_len_m: float = 1.0
    # rugged
    bump_amplitude_m: float = 0.02
    bump_wavelength_min_m: float = 0.1
    bump_wavelength_max_m: float = 0.4
    bump_count: int = 8
    rugged_len_m: float = 3.0
    seed: int = 0
    # sinusoid
    sine_amplitude_m: float = 0.03
    sine_wavelength_m: float = 1.0
    sine_periods: int = 3
    # derived bump field
    bump_wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)
    bump_amplitudes: np.ndarray = field(init=False, repr=False, compare=False)
    bump_phases: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", TerrainKind(self.kind))
        if self.bump_count < 1:
            raise ValueError("bump_count must be at least 1")
        if not 0 < self.bump_wavelength_min_m <= self.bump_wavelength_max_m:
            raise ValueError("Bump wavelengths must satisfy 0 < min <= max")

        rng = np.random.default_rng(self.seed)
        wavelengths = rng.uniform(self.bump_wavelength_min_m, self.bump_wavelength_max_m, self.bump_count)
        weights = rng.uniform(0.5, 1.0, self.bump_count)
        phases = rng.uniform(0.0, 2.0 * math.pi, self.bump_count)
        object.__setattr__(self, "bump_wavenumbers", 2.0 * math.pi / wavelengths)
        object.__setattr__(self, "bump_amplitudes", self.bump_amplitude_m * weights / weights.sum())
        object.__setattr__(self, "bump_phases", phases)

    @property
    def course_length(self) -> float:
        """Horizontal extent of the terrain features (m)."""
        if self.kind is TerrainKind.SINGLE_SLOPE:
            return 2.0 * self.slope_len_m + self.flat_len_m
        if self.kind is TerrainKind.HIGH_FREQ_RUGGED:
            return self.rugged_len_m
        if self.kind is TerrainKind.SINUSOID:
            return self.sine_periods * self.sine_wavelength_m
        return 0.0


def _bump_field(profile: TerrainProfile, x: float) -> Tuple[float, float]:
    arg = profile.bump_wavenumbers * x + profile.bump_phases
    h = float(np.sum(profile.bump_amplitudes * (np.sin(arg) - np.sin(profile.bump_phases))))
    dh = float(np.sum(profile.bump_amplitudes * profile.bump_wavenumbers * np.cos(arg)))
    return h, dh


def terrain_height_and_slope(profile: TerrainProfile, x: float) -> Tuple[float, float]:
    """Terrain height h(x) (m) and its derivative dh/dx."""
    if x < 0.0 or profile.kind is TerrainKind.FLAT:
        return 0.0, 0.0

    if profile.kind is TerrainKind.SINGLE_SLOPE:
        grade = math.tan(math.radians(profile.slope_deg))
        s, f = profile.slope_len_m, profile.flat_len_m
        rise = s * grade
        if x <= s:
            return x * grade, grade
        if x <= s + f:
            return rise, 0.0
        if x <= 2.0 * s + f:
            return rise - (x - s - f) * grade, -grade
        return 0.0, 0.0

    if profile.kind is TerrainKind.SINUSOID:
        if x > profile.course_length:
            return 0.0, 0.0
        k = 2.0 * math.pi / profile.sine_wavelength_m
        return profile.sine_amplitude_m * math.sin(k * x), profile.sine_amplitude_m * k * math.cos(k * x)

    # high-frequency rugged: hold the end height after the course
    if x > profile.rugged_len_m:
        return _bump_field(profile, profile.rugged_len_m)[0], 0.0
    return _bump_field(profile, x)


def terrain_height(profile: TerrainProfile, x: float) -> float:
    return terrain_height_and_slope(profile, x)[0]


# ---------------------------------------------------------------------------
# Plant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantParams:
    head_mass: float = 4.0              # kg, sprung point mass at the hip
    wheel_mass: float = 0.15            # kg, unsprung
    wheel_radius: float = 0.05          # m
    forward_speed: float = 0.5          # m/s
    gravity_g: float = 9.81             # m/s^2
    dt: float = 1e-3                    # s
    ground_stiffness: float = 5e4       # N/m
    ground_damping: float = 500.0       # N·s/m
    leg_stiffness: float = 0.0          # N/m, passive spring between head and wheel
    leg_damping: float = 0.0            # N·s/m
    leg_rest_length: float = 0.2        # m
    L_min: float = 0.028                # m
    L_max: float = 0.2744               # m
    imu_noise_std: float = 0.0          # m/s^2
    encoder_noise_std: float = 0.0      # rad
    torque_noise_std: float = 0.0       # N·m


@dataclass(frozen=True)
class SimState:
    t: float
    tick: int
    x_wheel: float
    z_wheel: float
    vz_wheel: float
    z_head: float
    vz_head: float
    az_head: float
    az_wheel: float
    q: JointState
    in_contact: bool
    F_normal_true: float
    tau_knee: float = 0.0       # torque applied over the last step
    tau_wheel: float = 0.0

    @property
    def leg_length(self) -> float:
        return self.z_head - self.z_wheel


@dataclass(frozen=True)
class SensorReadings:
    accel: AccelSample
    q: JointState
    torque: TorqueReading
    L_est: float
    dL_est: float


def _knee_lever(geom: LegGeometry, q: JointState) -> float:
    return geom.link_length_L * math.sin(q.q1 + q.q2)


def _passive_leg_force(params: PlantParams, length: float, rate: float) -> float:
    return params.leg_stiffness * (params.leg_rest_length - length) - params.leg_damping * rate


def initial_state(
    params: PlantParams,
    geom: LegGeometry,
    profile: TerrainProfile,
    leg_len: float,
    x0: float = 0.0,
) -> SimState:
    """Static equilibrium standing at x0 with the given leg length."""
    total_weight = (params.head_mass + params.wheel_mass) * params.gravity_g
    penetration = total_weight / params.ground_stiffness
    z_wheel = terrain_height(profile, x0) + params.wheel_radius - penetration
    q = joint_state_from_leg_length(geom, leg_len)
    support = params.head_mass * params.gravity_g - _passive_leg_force(params, leg_len, 0.0)
    return SimState(
        t=0.0, tick=0, x_wheel=x0,
        z_wheel=z_wheel, vz_wheel=0.0,
        z_head=z_wheel + leg_len, vz_head=0.0,
        az_head=0.0, az_wheel=0.0,
        q=q, in_contact=True, F_normal_true=total_weight,
        tau_knee=_knee_lever(geom, q) * support,
    )


def drop_state(
    params: PlantParams,
    geom: LegGeometry,
    profile: TerrainProfile,
    leg_len: float,
    clearance: float,
    x0: float = 0.0,
) -> SimState:
    """Robot held at rest with the wheel `clearance` meters above the ground."""
    z_wheel = terrain_height(profile, x0) + params.wheel_radius + clearance
    q = joint_state_from_leg_length(geom, leg_len)
    return SimState(
        t=0.0, tick=0, x_wheel=x0,
        z_wheel=z_wheel, vz_wheel=0.0,
        z_head=z_wheel + leg_len, vz_head=0.0,
        az_head=0.0, az_wheel=0.0,
        q=q, in_contact=False, F_normal_true=0.0,
        tau_knee=_knee_lever(geom, q) * params.head_mass * params.gravity_g,
    )


def step_plant(
    state: SimState,
    params: PlantParams,
    geom: LegGeometry,
    tau_knee: float,
    profile: TerrainProfile,
) -> SimState:
    """
    Advance the plant by one fixed step under the given knee torque.

    Raises:
        SimulationFault: on non-finite torque or state, or when the leg
        length leaves [L_min, L_max]
    """
    tick = state.tick + 1
    if not math.isfinite(tau_knee):
        raise SimulationFault(tick, f"non-finite knee torque {tau_knee}")

    dt = params.dt
    g = params.gravity_g

    # leg force at the current posture, pushing head up and wheel down
    lever = _knee_lever(geom, state.q)
    rate = state.vz_head - state.vz_wheel
    f_leg = tau_knee / lever + _passive_leg_force(params, state.leg_length, rate)

    a_head = f_leg / params.head_mass - g
    vz_head = state.vz_head + dt * a_head
    z_head = state.z_head + dt * vz_head

    h, dh = terrain_height_and_slope(profile, state.x_wheel)
    penetration = h + params.wheel_radius - state.z_wheel
    ground_rate = dh * params.forward_speed
    other = -f_leg - params.wheel_mass * g
    vz_free = state.vz_wheel + dt * other / params.wheel_mass

    normal = 0.0
    vz_wheel = vz_free
    if penetration > 0.0:
        c, m = params.ground_damping, params.wheel_mass
        vz_wheel = (state.vz_wheel + dt / m * (other + params.ground_stiffness * penetration + c * ground_rate)) / (1.0 + dt * c / m)
        normal = params.ground_stiffness * penetration + c * (ground_rate - vz_wheel)
        if normal < 0.0:
            normal = 0.0
            vz_wheel = vz_free
    z_wheel = state.z_wheel + dt * vz_wheel
    a_wheel = (vz_wheel - state.vz_wheel) / dt

    x_wheel = state.x_wheel + params.forward_speed * dt
    length = z_head - z_wheel
    if not all(math.isfinite(v) for v in (z_head, vz_head, z_wheel, vz_wheel)):
        raise SimulationFault(tick, "non-finite plant state")
    if not params.L_min <= length <= params.L_max:
        raise SimulationFault(tick, f"leg length {length:.4f} m outside [{params.L_min}, {params.L_max}]")

    q = joint_state_from_leg_length(geom, length, vz_head - vz_wheel, a_head - a_wheel)
    in_contact = terrain_height(profile, x_wheel) + params.wheel_radius - z_wheel >= 0.0

    # wheel torque holding constant speed on the local grade
    grade = math.atan(dh)
    tau_wheel = (params.head_mass + params.wheel_mass) * g * math.sin(grade) * params.wheel_radius

    return SimState(
        t=tick * dt, tick=tick, x_wheel=x_wheel,
        z_wheel=z_wheel, vz_wheel=vz_wheel,
        z_head=z_head, vz_head=vz_head,
        az_head=a_head, az_wheel=a_wheel,
        q=q, in_contact=in_contact, F_normal_true=normal,
        tau_knee=tau_knee, tau_wheel=tau_wheel,
    )


def sensors(
    state: SimState,
    params: PlantParams,
    geom: LegGeometry,
    rng: Optional[np.random.Generator] = None,
) -> SensorReadings:
    """
    Produce the proprioceptive readings of one tick.

    The IMU reports specific force: the head's kinematic acceleration plus
    g, so a robot standing still reads g. The kinematic acceleration is the
    finite difference of the head velocity over the last step. Encoder
    noise is added to the joint angles only.
    """
    def noise(std: float) -> float:
        if std <= 0.0 or rng is None:
            return 0.0
        return float(rng.normal(0.0, std))

    head_zdd = specific_force(state.az_head, params.gravity_g) + noise(params.imu_noise_std)

    q = state.q
    if params.encoder_noise_std > 0.0:
        q = replace(q, q1=q.q1 + noise(params.encoder_noise_std), q2=q.q2 + noise(params.encoder_noise_std))

    _, wheel_az = wheel_acceleration(geom, q)
    torque = TorqueReading(
        tau_hip=0.0,
        tau_knee=state.tau_knee + noise(params.torque_noise_std),
        tau_wheel=state.tau_wheel,
    )
    return SensorReadings(
        accel=AccelSample(head_zdd=head_zdd, wheel_az=wheel_az, gravity_g=params.gravity_g),
        q=q,
        torque=torque,
        L_est=leg_length(geom, q),
        dL_est=leg_length_rate(geom, q),
    )


def specific_force(kinematic_zdd: float, gravity_g: float) -> float:
    """IMU convention: vertical specific force = kinematic acceleration + g."""
    return kinematic_zdd + gravity_g


def mechanical_energy(state: SimState, params: PlantParams, profile: TerrainProfile) -> float:
    """Vertical kinetic plus gravitational and elastic energy (J), forward motion excluded."""
    g = params.gravity_g
    energy = 0.5 * params.head_mass * state.vz_head ** 2 + 0.5 * params.wheel_mass * state.vz_wheel ** 2
    energy += params.head_mass * g * state.z_head + params.wheel_mass * g * state.z_wheel
    energy += 0.5 * params.leg_stiffness * (params.leg_rest_length - state.leg_length) ** 2
    penetration = terrain_height(profile, state.x_wheel) + params.wheel_radius - state.z_wheel
    if penetration > 0.0:
        energy += 0.5 * params.ground_stiffness * penetration ** 2
    return energy
