import pytest

from src.config import load_config
from src.utils.leg_model import LegGeometry
from src.utils.plant_sim import PlantParams, TerrainKind, TerrainProfile

# Shortened courses keep closed-loop tests fast
SHORT_OVERRIDES = [
    "terrain.slope_len_m=0.3",
    "terrain.flat_len_m=0.2",
    "terrain.rugged_len_m=0.5",
    "terrain.sine_wavelength_m=0.5",
    "terrain.sine_periods=1",
    "experiment.lead_in_m=0.2",
    "experiment.lead_out_m=0.2",
    "experiment.calibration_s=1.0",
    "experiment.reference_window_s=0.3",
    "experiment.transient_s=0.3",
]


@pytest.fixture
def geom():
    return LegGeometry(link_length_L=0.14)


@pytest.fixture
def plant_params():
    return PlantParams()


@pytest.fixture
def flat_profile():
    return TerrainProfile(kind=TerrainKind.FLAT)


@pytest.fixture
def short_config():
    return load_config(overrides=SHORT_OVERRIDES)


@pytest.fixture
def short_config_file(tmp_path):
    path = tmp_path / "short.yaml"
    path.write_text(
        "terrain:\n"
        "  slope_len_m: 0.3\n"
        "  flat_len_m: 0.2\n"
        "  rugged_len_m: 0.5\n"
        "experiment:\n"
        "  lead_in_m: 0.2\n"
        "  lead_out_m: 0.2\n"
        "  calibration_s: 1.0\n"
        "  reference_window_s: 0.3\n"
        "  transient_s: 0.3\n",
        encoding="utf-8",
    )
    return path
