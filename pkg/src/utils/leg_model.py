"""
Planar leg kinematics for the Wheeled Biped Head Stabilizer.

This module models one leg as a 2-DoF serial chain with two links of
equal length L. The hip joint sits at the origin of the base frame {O},
the knee joint at the end of the first link and the wheel center at the
end of the second link. Angles are measured counter-clockwise: q1 from
the negative z-axis to the first link, q2 from the first link to the
second one.

All functions are pure and operate on small immutable value types.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

# Configure logger
logger = logging.getLogger("leg_model")


class KinematicsError(ValueError):
    """Raised when a leg configuration has no valid kinematic answer."""


@dataclass(frozen=True)
class LegGeometry:
    """Link geometry shared by both links of the leg."""
    link_length_L: float = 0.14

    def __post_init__(self):
        if not (math.isfinite(self.link_length_L) and self.link_length_L > 0):
            raise KinematicsError(f"link_length_L must be positive, got {self.link_length_L}")

    @property
    def max_reach(self) -> float:
        return 2.0 * self.link_length_L


@dataclass(frozen=True)
class JointState:
    """Joint angles (rad), rates (rad/s) and accelerations (rad/s^2) of one leg."""
    q1: float
    q2: float
    dq1: float = 0.0
    dq2: float = 0.0
    ddq1: float = 0.0
    ddq2: float = 0.0

    def __post_init__(self):
        for name in ("q1", "q2", "dq1", "dq2", "ddq1", "ddq2"):
            if not math.isfinite(getattr(self, name)):
                raise KinematicsError(f"JointState.{name} is not finite")

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.dq1, self.dq2])

    @property
    def accelerations(self) -> np.ndarray:
        return np.array([self.ddq1, self.ddq2])


@dataclass(frozen=True)
class WheelCenterState:
    """Wheel center position (m) and acceleration (m/s^2) in the base frame {O}."""
    x: float
    z: float
    a_x: float = 0.0
    a_z: float = 0.0


def forward_kinematics(geom: LegGeometry, q: JointState) -> WheelCenterState:
    """
    Compute the wheel center position in the base frame.

    Args:
        geom: Leg geometry
        q: Joint state (only the angles are used)

    Returns:
        WheelCenterState: position of the wheel center, accelerations left at zero
    """
    L = geom.link_length_L
    q12 = q.q1 + q.q2
    x = L * math.sin(q.q1) + L * math.sin(q12)
    z = -L * math.cos(q.q1) - L * math.cos(q12)
    return WheelCenterState(x=x, z=z)


def jacobian(geom: LegGeometry, q: JointState) -> np.ndarray:
    """
    Geometric Jacobian mapping joint rates to wheel center velocity.

    The determinant equals L^2 sin(q2); a straight leg (q2 = 0) is singular.
    Callers that need to invert the matrix test the determinant themselves.
    """
    L = geom.link_length_L
    q12 = q.q1 + q.q2
    c1, s1 = math.cos(q.q1), math.sin(q.q1)
    c12, s12 = math.cos(q12), math.sin(q12)
    return np.array([
        [L * (c1 + c12), L * c12],
        [L * (s1 + s12), L * s12],
    ])


def jacobian_dot(geom: LegGeometry, q: JointState) -> np.ndarray:
    """Time derivative of the Jacobian along the current joint rates."""
    L = geom.link_length_L
    q12 = q.q1 + q.q2
    w1 = q.dq1
    w12 = q.dq1 + q.dq2
    c1, s1 = math.cos(q.q1), math.sin(q.q1)
    c12, s12 = math.cos(q12), math.sin(q12)
    return np.array([
        [-L * (s1 * w1 + s12 * w12), -L * s12 * w12],
        [L * (c1 * w1 + c12 * w12), L * c12 * w12],
    ])


def wheel_acceleration(geom: LegGeometry, q: JointState) -> Tuple[float, float]:
    """
    Map joint rates and accelerations to the wheel center acceleration.

    Returns:
        Tuple[float, float]: (a_x, a_z) in the base frame {O}
    """
    a = jacobian_dot(geom, q) @ q.rates + jacobian(geom, q) @ q.accelerations
    return float(a[0]), float(a[1])


def leg_length(geom: LegGeometry, q: JointState) -> float:
    """
    Distance from the hip to the wheel center.

    Uses the closed form 2L cos(q2/2), which is independent of q1.

    Raises:
        KinematicsError: if |q2| >= pi (folded leg)
    """
    if abs(q.q2) >= math.pi:
        raise KinematicsError(f"Leg is folded: |q2| = {abs(q.q2):.4f} >= pi")
    return 2.0 * geom.link_length_L * math.cos(0.5 * q.q2)


def leg_length_rate(geom: LegGeometry, q: JointState) -> float:
    """Rate of change of the leg length (m/s)."""
    return -geom.link_length_L * math.sin(0.5 * q.q2) * q.dq2


def joint_state_from_leg_length(
    geom: LegGeometry,
    length: float,
    rate: float = 0.0,
    accel: float = 0.0,
) -> JointState:
    """
    Reconstruct the symmetric joint posture for a given leg length.

    The wheel stays straight below the hip (q1 = -q2/2) and the knee bends
    with positive q2. Rates and accelerations of the leg length are mapped
    to joint space by differentiating l = 2L cos(q2/2).

    Args:
        geom: Leg geometry
        length: Hip to wheel distance (m), within (0, 2L]
        rate: Leg length rate (m/s)
        accel: Leg length acceleration (m/s^2)

    Returns:
        JointState: posture with q1 = -q2/2

    Raises:
        KinematicsError: if the length cannot be reached
    """
    L = geom.link_length_L
    if not (math.isfinite(length) and 0.0 < length <= 2.0 * L):
        raise KinematicsError(f"Leg length {length} outside (0, {2.0 * L}]")

    half = math.acos(length / (2.0 * L))
    q2 = 2.0 * half
    s = L * math.sin(half)
    if s < 1e-12:
        dq2 = 0.0
        ddq2 = 0.0
    else:
        dq2 = -rate / s
        ddq2 = -(accel + 0.5 * L * math.cos(half) * dq2 * dq2) / s

    return JointState(q1=-0.5 * q2, q2=q2, dq1=-0.5 * dq2, dq2=dq2, ddq1=-0.5 * ddq2, ddq2=ddq2)
