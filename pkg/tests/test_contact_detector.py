import itertools

import numpy as np
import pytest

from src.utils.contact_detector import (
    CONTACT_TABLE,
    AccelSample,
    ContactDecision,
    ContactDetector,
    ContactStatus,
    GateAction,
    classify,
    dead_band_sign,
    gate,
    parse_table_overrides,
)

G = 9.81
EPS_ZDD = 0.3
EPS_AZ = 0.1

ON, OFF = ContactStatus.ON_GROUND, ContactStatus.OFF_GROUND

# one representative sample per cell: head offset from g, wheel acceleration
CELL_SAMPLES = {1: 2.0, 0: 0.0, -1: -2.0}

EXPECTED_TABLE = [
    ((1, 1), OFF, False),
    ((1, -1), OFF, True),
    ((1, 0), ON, False),
    ((-1, 1), ON, True),
    ((-1, -1), OFF, False),
    ((-1, 0), OFF, False),
    ((0, 1), OFF, False),
    ((0, -1), OFF, False),
    ((0, 0), ON, True),
]


def sample(head_offset, wheel_az):
    return AccelSample(head_zdd=G + head_offset, wheel_az=wheel_az, gravity_g=G)


@pytest.mark.parametrize("pattern, status, estimate", EXPECTED_TABLE)
def test_classify_table_rows(pattern, status, estimate):
    head_sign, wheel_sign = pattern
    decision = classify(sample(CELL_SAMPLES[head_sign], CELL_SAMPLES[wheel_sign] / 10), EPS_ZDD, EPS_AZ)
    assert decision == ContactDecision(status, estimate)


def test_table_covers_all_nine_cells():
    assert set(CONTACT_TABLE) == set(itertools.product((-1, 0, 1), repeat=2))


def test_dead_band_counts_as_zero():
    decision = classify(sample(EPS_ZDD / 2, 0.0), EPS_ZDD, EPS_AZ)
    assert decision == ContactDecision(ON, True)
    assert dead_band_sign(EPS_AZ, EPS_AZ) == 0
    assert dead_band_sign(-EPS_AZ, EPS_AZ) == 0
    assert dead_band_sign(EPS_AZ * 1.001, EPS_AZ) == 1


def test_classify_grid_straddling_dead_bands():
    head_values = [-1.0, -EPS_ZDD * 1.01, -EPS_ZDD * 0.99, 0.0, EPS_ZDD * 0.99, EPS_ZDD * 1.01, 1.0, -5.0, 5.0]
    wheel_values = [-1.0, -EPS_AZ * 1.01, -EPS_AZ * 0.99, 0.0, EPS_AZ * 0.99, EPS_AZ * 1.01, 1.0, -5.0, 5.0]
    for dz, az in itertools.product(head_values, wheel_values):
        pattern = (dead_band_sign(dz, EPS_ZDD), dead_band_sign(az, EPS_AZ))
        first = classify(sample(dz, az), EPS_ZDD, EPS_AZ)
        second = classify(sample(dz, az), EPS_ZDD, EPS_AZ)
        assert first == second == CONTACT_TABLE[pattern]


def test_classify_requires_positive_dead_bands():
    with pytest.raises(ValueError):
        classify(sample(0.0, 0.0), 0.0, EPS_AZ)


def test_accel_sample_rejects_non_finite():
    with pytest.raises(ValueError):
        AccelSample(head_zdd=np.nan, wheel_az=0.0)


@pytest.mark.parametrize(
    "decision, action",
    [
        (ContactDecision(OFF, False), GateAction.BYPASS_TO_HEIGHT_CONTROLLER),
        (ContactDecision(ON, True), GateAction.RUN_ESTIMATOR),
        (ContactDecision(ON, False), GateAction.BYPASS_TO_HEIGHT_CONTROLLER),
        (ContactDecision(OFF, True), GateAction.BYPASS_TO_HEIGHT_CONTROLLER),
    ],
)
def test_gate(decision, action):
    assert gate(decision) is action


def test_parse_table_overrides():
    table = parse_table_overrides({"+,0": {"status": "off_ground", "estimate": False}})
    assert table[(1, 0)] == ContactDecision(OFF, False)
    assert table[(0, 0)] == CONTACT_TABLE[(0, 0)]
    # the default table is untouched
    assert CONTACT_TABLE[(1, 0)] == ContactDecision(ON, False)


@pytest.mark.parametrize("key", ["+", "+,x", "1,0", "+,0,-"])
def test_parse_table_overrides_rejects_bad_keys(key):
    with pytest.raises(ValueError):
        parse_table_overrides({key: {"status": "on_ground", "estimate": True}})


def test_detector_starts_on_ground():
    detector = ContactDetector()
    assert detector.decision == ContactDecision(ON, True)


def test_detector_debounce():
    detector = ContactDetector(eps_zdd=EPS_ZDD, eps_az=EPS_AZ, debounce_ticks=3)
    free_fall = sample(-G, -2.0)

    assert detector.update(free_fall).status is ON
    assert detector.update(free_fall).status is ON
    assert detector.update(free_fall).status is OFF


def test_detector_ignores_short_glitches():
    detector = ContactDetector(eps_zdd=EPS_ZDD, eps_az=EPS_AZ, debounce_ticks=3)
    glitch = sample(2.0, 1.0)
    stand = sample(0.0, 0.0)
    for _ in range(10):
        detector.update(glitch)
        detector.update(glitch)
        assert detector.update(stand).status is ON


def test_detector_reset():
    detector = ContactDetector(eps_zdd=EPS_ZDD, eps_az=EPS_AZ, debounce_ticks=1)
    detector.update(sample(2.0, 1.0))
    assert detector.decision.status is OFF
    detector.reset()
    assert detector.decision == ContactDecision(ON, True)


def test_detector_uses_custom_table():
    table = parse_table_overrides({"0,0": {"status": "off_ground", "estimate": False}})
    detector = ContactDetector(debounce_ticks=1, table=table)
    assert detector.update(sample(0.0, 0.0)).status is OFF
