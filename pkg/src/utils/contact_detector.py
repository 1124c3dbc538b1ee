"""
Ground contact detection for the Wheeled Biped Head Stabilizer.

The detector compares the head's vertical specific force with gravity and
the wheel-relative vertical acceleration with zero. Each comparison has a
dead-band, which yields a 3x3 grid of sign patterns. Every cell of the
grid maps to a contact status and a force-estimation flag; the mapping is
a plain lookup table that can be overridden from the configuration.

Note on the table: the row (head above g, wheel accelerating down) is
marked "off the ground" yet flags force estimation. The gate always
bypasses the estimator when the robot is off the ground, so that row
never reaches the estimator.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, Optional, Tuple

# Configure logger
logger = logging.getLogger("contact_detector")


class ContactStatus(str, Enum):
    ON_GROUND = "on_ground"
    OFF_GROUND = "off_ground"


class GateAction(str, Enum):
    RUN_ESTIMATOR = "run_estimator"
    BYPASS_TO_HEIGHT_CONTROLLER = "bypass_to_height_controller"


@dataclass(frozen=True)
class AccelSample:
    """Head specific force and wheel-relative acceleration for one tick."""
    head_zdd: float
    wheel_az: float
    gravity_g: float = 9.81

    def __post_init__(self):
        if not (math.isfinite(self.head_zdd) and math.isfinite(self.wheel_az)):
            raise ValueError("AccelSample accelerations must be finite")
        if not self.gravity_g > 0:
            raise ValueError(f"gravity_g must be positive, got {self.gravity_g}")


@dataclass(frozen=True)
class ContactDecision:
    status: ContactStatus
    estimate_force: bool


# (sign of head_zdd - g, sign of wheel_az) -> decision
SignPattern = Tuple[int, int]

CONTACT_TABLE: Dict[SignPattern, ContactDecision] = {
    (1, 1): ContactDecision(ContactStatus.OFF_GROUND, False),
    (1, -1): ContactDecision(ContactStatus.OFF_GROUND, True),
    (1, 0): ContactDecision(ContactStatus.ON_GROUND, False),
    (-1, 1): ContactDecision(ContactStatus.ON_GROUND, True),
    (-1, -1): ContactDecision(ContactStatus.OFF_GROUND, False),
    (-1, 0): ContactDecision(ContactStatus.OFF_GROUND, False),
    (0, 1): ContactDecision(ContactStatus.OFF_GROUND, False),
    (0, -1): ContactDecision(ContactStatus.OFF_GROUND, False),
    (0, 0): ContactDecision(ContactStatus.ON_GROUND, True),
}

_SIGN_SYMBOLS = {"+": 1, "-": -1, "0": 0}


def dead_band_sign(value: float, eps: float) -> int:
    """Sign of value, with |value| <= eps treated as zero."""
    if value > eps:
        return 1
    if value < -eps:
        return -1
    return 0


def parse_table_overrides(overrides: Mapping[str, Mapping[str, object]]) -> Dict[SignPattern, ContactDecision]:
    """
    Build a contact table from configuration overrides.

    Keys look like "+,0" (head sign, wheel sign); values carry
    "status" ("on_ground" / "off_ground") and "estimate" (bool).
    Cells not mentioned keep their default entry.
    """
    table = dict(CONTACT_TABLE)
    for key, entry in overrides.items():
        parts = [p.strip() for p in key.split(",")]
        if len(parts) != 2 or any(p not in _SIGN_SYMBOLS for p in parts):
            raise ValueError(f"Invalid contact table key '{key}', expected e.g. '+,0'")
        pattern = (_SIGN_SYMBOLS[parts[0]], _SIGN_SYMBOLS[parts[1]])
        table[pattern] = ContactDecision(
            status=ContactStatus(entry["status"]),
            estimate_force=bool(entry["estimate"]),
        )
    return table


def classify(
    sample: AccelSample,
    eps_zdd: float,
    eps_az: float,
    table: Optional[Mapping[SignPattern, ContactDecision]] = None,
) -> ContactDecision:
    """
    Classify one acceleration sample into a contact decision.

    Args:
        sample: Head specific force and wheel-relative acceleration
        eps_zdd: Dead-band around g for the head reading (m/s^2)
        eps_az: Dead-band around zero for the wheel reading (m/s^2)
        table: Optional replacement for the default lookup table

    Returns:
        ContactDecision: status and force-estimation flag
    """
    if eps_zdd <= 0 or eps_az <= 0:
        raise ValueError("Dead-bands must be positive")
    pattern = (
        dead_band_sign(sample.head_zdd - sample.gravity_g, eps_zdd),
        dead_band_sign(sample.wheel_az, eps_az),
    )
    return (table or CONTACT_TABLE)[pattern]


def gate(decision: ContactDecision) -> GateAction:
    """Decide whether the force estimator runs this tick."""
    if decision.status is ContactStatus.OFF_GROUND or not decision.estimate_force:
        return GateAction.BYPASS_TO_HEIGHT_CONTROLLER
    return GateAction.RUN_ESTIMATOR


class ContactDetector:
    """
    Debounced contact classifier owned by one control loop.

    A new classification is reported only after it has been observed for
    debounce_ticks consecutive samples.
    """

    def __init__(
        self,
        eps_zdd: float = 3.0,
        eps_az: float = 20.0,
        debounce_ticks: int = 3,
        table: Optional[Mapping[SignPattern, ContactDecision]] = None,
        initial: ContactDecision = CONTACT_TABLE[(0, 0)],
    ):
        if debounce_ticks < 1:
            raise ValueError("debounce_ticks must be at least 1")
        self.eps_zdd = eps_zdd
        self.eps_az = eps_az
        self.debounce_ticks = debounce_ticks
        self.table = dict(table) if table else dict(CONTACT_TABLE)
        self.initial = initial
        self.reset()

    def reset(self) -> None:
        self.decision = self.initial
        self._candidate = self.initial
        self._candidate_count = 0

    def update(self, sample: AccelSample) -> ContactDecision:
        """Feed one sample and return the debounced decision."""
        raw = classify(sample, self.eps_zdd, self.eps_az, self.table)
        if raw == self.decision:
            self._candidate = raw
            self._candidate_count = 0
            return self.decision

        if raw == self._candidate:
            self._candidate_count += 1
        else:
            self._candidate = raw
            self._candidate_count = 1

        if self._candidate_count >= self.debounce_ticks:
            logger.debug(
                f"Contact decision {self.decision.status.value}/{self.decision.estimate_force} -> "
                f"{raw.status.value}/{raw.estimate_force}"
            )
            self.decision = raw
            self._candidate_count = 0
        return self.decision
