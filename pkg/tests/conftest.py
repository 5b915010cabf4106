from typing import Callable, Optional, Sequence, Tuple
import math
import numpy as np
import pytest

from cran_positioning.experiment.config import CalibrationConfig, CrbConfig, ExperimentConfig, GridConfig
from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.geometry import Position, Region
from cran_positioning.scenario.signal import RadioUnit, Scenario, sinc_waveform_spectrum

SQUARE_POSITIONS: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (4000.0, 0.0), (4000.0, 4000.0), (0.0, 4000.0))
ScenarioFactory = Callable[..., Scenario]


def make_scenario(
    ru_positions: Sequence[Tuple[float, float]] = SQUARE_POSITIONS,
    num_antennas: int = 8,
    num_samples: int = 8,
    noise_power: float = 1e-2,
    fronthaul_bits: float = 32.0,
    region: Region = Region(500.0, 3500.0, 500.0, 3500.0),
    rician_k: float = 100.0,
    r_max: Optional[float] = None
) -> Scenario:
    """Scenario on the 4 km square with a 900 MHz half-wavelength array and Ts = 2.5 us."""
    wavelength = 3e8 / 900e6
    quantizer = None
    if r_max is not None:
        quantizer = UniformQuantizerSpec.from_rate(r_max, fronthaul_bits, num_antennas)
    units = tuple(
        RadioUnit(
            position=Position(x, y),
            num_antennas=num_antennas,
            noise_power=noise_power,
            fronthaul_bits=fronthaul_bits,
            quantizer=quantizer
        )
        for x, y in ru_positions
    )
    return Scenario(
        radio_units=units,
        region=region,
        wavelength=wavelength,
        antenna_spacing=wavelength / 2,
        sampling_period=2.5e-6,
        num_samples=num_samples,
        propagation_speed=3e8,
        mean_channel_power=tuple(1.0 for _ in units),
        rician_k=rician_k,
        waveform=sinc_waveform_spectrum(num_samples)
    )


@pytest.fixture
def scenario_factory() -> ScenarioFactory:
    """Fixture for building scenarios with overridden settings."""
    return make_scenario


@pytest.fixture
def scenario() -> Scenario:
    """Fixture for the four-RU reference scenario at a high SNR."""
    return make_scenario()


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixture for a seeded generator."""
    return np.random.default_rng(20170101)


def snr_noise_power(snr_db: float, num_samples: int = 8, channel_power: float = 1.0) -> float:
    return channel_power / (num_samples * math.pow(10.0, snr_db / 10.0))


@pytest.fixture
def small_config() -> ExperimentConfig:
    """Fixture for a reference-geometry experiment on a coarse grid with few trials."""
    return ExperimentConfig(
        grid=GridConfig(spacing=250.0, zoom_rounds=1),
        calibration=CalibrationConfig(draws=1000),
        crb=CrbConfig(snr_db_list=(-10.0,), b_over_m_list=(4.0,), positions=10),
        snr_db_list=(10.0,),
        b_over_m_list=(4.0,),
        trials=3,
        methods=("direct-quantized", "direct-ideal")
    )
