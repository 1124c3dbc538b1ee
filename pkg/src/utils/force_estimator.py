"""
Proprioceptive contact force estimation for the Wheeled Biped Head Stabilizer.

The estimator applies the virtual-work relation F = (J^T)^-1 tau to the
hip and knee torques (with the wheel motor torque projected onto the
joints), then removes the inertial load of the head measured by the IMU.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.utils.leg_model import JointState, LegGeometry, jacobian

# Configure logger
logger = logging.getLogger("force_estimator")


class EstimationError(ValueError):
    """Raised when the estimator receives non-finite inputs."""


@dataclass(frozen=True)
class TorqueReading:
    """Joint torques in N·m."""
    tau_hip: float
    tau_knee: float
    tau_wheel: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.tau_hip, self.tau_knee, self.tau_wheel)):
            raise EstimationError("TorqueReading values must be finite")


@dataclass(frozen=True)
class EstimatorParams:
    k1: float = 0.0
    k2: float = 1.0          # wheel motor reaction carried by the knee
    head_mass_m: float = 4.0
    gravity_g: float = 9.81
    gravity_compensation: bool = False
    singularity_floor: float = 0.05


@dataclass(frozen=True)
class ForceEstimate:
    f_xz: np.ndarray = field(repr=False)
    F_z: float
    valid: bool


def effective_joint_torque(reading: TorqueReading, params: EstimatorParams) -> np.ndarray:
    """Hip and knee torques with the wheel torque projected onto the joints."""
    return np.array([
        reading.tau_hip + params.k1 * reading.tau_wheel,
        reading.tau_knee + params.k2 * reading.tau_wheel,
    ])


def contact_force(
    geom: LegGeometry,
    q: JointState,
    reading: TorqueReading,
    head_zdd: float,
    params: EstimatorParams,
) -> ForceEstimate:
    """
    Estimate the vertical contact force from joint torques.

    Args:
        geom: Leg geometry
        q: Current joint state
        reading: Torque reading of the leg
        head_zdd: Head vertical acceleration as reported by the IMU (m/s^2)
        params: Estimator parameters

    Returns:
        ForceEstimate: operational-space force and compensated F_z. When
        |sin q2| is below the singularity floor the estimate is invalid
        and carries NaN values.

    Raises:
        EstimationError: if head_zdd is not finite
    """
    if not math.isfinite(head_zdd):
        raise EstimationError("head_zdd must be finite")

    if abs(math.sin(q.q2)) < params.singularity_floor:
        return ForceEstimate(f_xz=np.full(2, np.nan), F_z=math.nan, valid=False)

    tau = effective_joint_torque(reading, params)
    f_xz = np.linalg.solve(jacobian(geom, q).T, tau)

    # the literal formula subtracts the raw IMU reading
    head_acc = head_zdd - params.gravity_g if params.gravity_compensation else head_zdd
    F_z = float(f_xz[1]) - params.head_mass_m * head_acc
    return ForceEstimate(f_xz=f_xz, F_z=F_z, valid=True)


class ForceEstimator:
    """
    Estimator with a last-valid-value cache for singular postures.

    An invalid estimate repeats the last valid F_z for up to hold_ticks
    consecutive ticks; after that F_z falls back to zero.
    """

    def __init__(self, geom: LegGeometry, params: EstimatorParams, hold_ticks: int = 50):
        self.geom = geom
        self.params = params
        self.hold_ticks = hold_ticks
        self.last_valid: Optional[float] = None
        self.invalid_ticks = 0

    def update(self, q: JointState, reading: TorqueReading, head_zdd: float) -> float:
        estimate = contact_force(self.geom, q, reading, head_zdd, self.params)
        if estimate.valid:
            self.last_valid = estimate.F_z
            self.invalid_ticks = 0
            return estimate.F_z

        self.invalid_ticks += 1
        if self.last_valid is not None and self.invalid_ticks <= self.hold_ticks:
            logger.debug(f"Singular leg posture, holding F_z = {self.last_valid:.3f} N")
            return self.last_valid
        if self.invalid_ticks == self.hold_ticks + 1:
            logger.warning(f"No valid force estimate for {self.invalid_ticks} ticks, using F_z = 0")
        return 0.0
