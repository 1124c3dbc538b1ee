"""
Leg-length tracking for the Wheeled Biped Head Stabilizer.

PD + feedforward on the leg length, followed by gravity compensation of
the head mapped to a knee torque through the leg Jacobian:

    dF     = ddL_d + k_p (L_d - L_est) + k_d (dL_d - dL_est)
    tau_k  = J[z, knee] (dF + m_H g)

dF is used exactly as written: a mass-normalized acceleration command
added to the head weight, with k_p and k_d carrying the unit-mass
convention. Only the knee is commanded; the hip torque for height is zero.
"""

import logging
import math
from dataclasses import dataclass

from src.utils.leg_model import JointState, LegGeometry

# Configure logger
logger = logging.getLogger("height_controller")


@dataclass(frozen=True)
class HeightGains:
    k_p: float = 400.0
    k_d: float = 40.0
    head_mass_mH: float = 4.0
    gravity_g: float = 9.81
    tau_max: float = 30.0


@dataclass(frozen=True)
class HeightCommand:
    """Desired leg length with derivatives, and the current estimate."""
    L_d: float
    L_est: float
    dL_d: float = 0.0
    ddL_d: float = 0.0
    dL_est: float = 0.0


def delta_force(gains: HeightGains, cmd: HeightCommand) -> float:
    return cmd.ddL_d + gains.k_p * (cmd.L_d - cmd.L_est) + gains.k_d * (cmd.dL_d - cmd.dL_est)


def knee_torque(geom: LegGeometry, q: JointState, gains: HeightGains, dF: float) -> float:
    """Knee torque producing the vertical lifting force dF + m_H g at the wheel."""
    j_zk = geom.link_length_L * math.sin(q.q1 + q.q2)
    return j_zk * (dF + gains.head_mass_mH * gains.gravity_g)


def track(gains: HeightGains, cmd: HeightCommand, geom: LegGeometry, q: JointState) -> float:
    """Knee torque command for one tick, saturated to +/- tau_max."""
    tau = knee_torque(geom, q, gains, delta_force(gains, cmd))
    return max(-gains.tau_max, min(gains.tau_max, tau))
