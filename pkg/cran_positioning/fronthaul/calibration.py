import logging
from typing import Optional, Tuple
import numpy as np

from cran_positioning.errors import CalibrationError
from cran_positioning.scenario.signal import Scenario, draw_channel, synthesize_observation

logger = logging.getLogger(__name__)

MIN_CALIBRATION_DRAWS: int = 1000


def calibrate_dynamic_range(
    scenario: Scenario,
    coverage: float,
    draws: int,
    rng: np.random.Generator,
    t0_max: Optional[float] = None
) -> Tuple[float, ...]:
    """
    Quantizer half-range per RU covering received components with probability `coverage`.

    All antennas, bins and real/imaginary parts of an RU are pooled, since one
    quantizer serves every frequency and antenna of that RU.

    Args:
        scenario: Scenario with the noise powers to calibrate for
        coverage: Target probability that a component lies inside [-r_max, r_max]
        draws: Monte Carlo draws of source position, channel and noise
        rng: Generator driving the draws
        t0_max: Transmit-time prior forwarded to draw_channel

    Returns:
        One r_max per radio unit

    Raises:
        ValueError: If coverage is outside (0, 1) or draws is too small
        CalibrationError: If a radio unit receives identically zero signal
    """
    if not 0.0 < coverage < 1.0:
        raise ValueError(f"Coverage must lie strictly between 0 and 1, got {coverage}")
    if draws < MIN_CALIBRATION_DRAWS:
        raise ValueError(f"Calibration needs at least {MIN_CALIBRATION_DRAWS} draws, got {draws}")

    magnitudes: list[list[np.ndarray]] = [[] for _ in range(scenario.num_radio_units)]
    for _ in range(draws):
        draw = draw_channel(scenario, rng, t0_max)
        observation = synthesize_observation(scenario, draw, rng)
        for index, matrix in enumerate(observation.samples):
            magnitudes[index].append(np.abs(np.concatenate((matrix.real.ravel(), matrix.imag.ravel()))))

    r_max = tuple(float(np.quantile(np.concatenate(values), coverage)) for values in magnitudes)
    for index, value in enumerate(r_max):
        if not value > 0:
            raise CalibrationError(f"Radio unit {index} calibrated to a degenerate range r_max={value}")
    logger.info("Calibrated r_max=%s at coverage=%s over %d draws", [round(value, 6) for value in r_max], coverage, draws)
    return r_max
