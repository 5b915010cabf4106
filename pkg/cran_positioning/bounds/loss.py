from typing import Optional, Sequence
import numpy as np
import numpy.typing as npt

from cran_positioning.bounds.efim import position_crb
from cran_positioning.bounds.fisher import ParamVector, component_information, unit_fim
from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.signal import Scenario


def quantization_loss(levels: int, r_max: float, sigma: float) -> float:
    """
    Low-SNR factor L_Q <= 1 by which quantization scales the Fisher information.

    It is the information a quantized zero-mean component keeps, relative to the
    2/sigma^2 of the unquantized component.

    Example:
        >>> round(quantization_loss(2, 1.0, 1.0), 6)
        0.63662
    """
    if levels < 2:
        raise ValueError(f"Quantizer needs at least 2 levels, got {levels}")
    quantizer = UniformQuantizerSpec(r_max=r_max, levels=levels)
    information = component_information(np.zeros(1), sigma, quantizer)[0]
    return float(information * sigma ** 2 / 2.0)


def loss_ratio(
    scenario: Scenario,
    param: ParamVector,
    quantizers: Sequence[UniformQuantizerSpec]
) -> float:
    """CRB^UQ / CRB^Q at the given parameters."""
    return position_crb(scenario, param) / position_crb(scenario, param, quantizers)


def convergence_sweep(
    index: int,
    param: ParamVector,
    scenario: Scenario,
    level_schedule: Sequence[int],
    r_max: Optional[float] = None
) -> list[float]:
    """
    Frobenius distance between the quantized and unquantized RU information per level count.

    Args:
        index: Radio unit to evaluate
        param: Parameters the information is evaluated at
        scenario: Scenario providing noise power and waveform
        level_schedule: Strictly increasing level counts
        r_max: Quantizer half-range used for every level count; defaults to convergence_range

    Returns:
        ||Psi_Q(L) - Psi_UQ||_F for each L in the schedule
    """
    schedule = list(level_schedule)
    if any(later <= earlier for earlier, later in zip(schedule, schedule[1:])):
        raise ValueError(f"Level schedule must be strictly increasing, got {schedule}")
    if r_max is None:
        r_max = convergence_range(scenario, index, param)
    delay = scenario.delay(index, param.p)
    angle = scenario.angle(index, param.p)
    amplitude = complex(param.b[index])
    reference = unit_fim(scenario, index, delay, angle, amplitude, param.t0, None)
    distances = []
    for levels in schedule:
        quantizer = UniformQuantizerSpec(r_max=r_max, levels=levels)
        quantized = unit_fim(scenario, index, delay, angle, amplitude, param.t0, quantizer)
        distances.append(float(np.linalg.norm(quantized - reference, ord="fro")))
    return distances


def convergence_range(scenario: Scenario, index: int, param: ParamVector) -> float:
    """Quantizer half-range max(4 sigma, 4 max|f|) used for convergence checks."""
    sigma = float(np.sqrt(scenario.radio_units[index].noise_power))
    amplitude = abs(complex(param.b[index]))
    peak: npt.NDArray[np.float64] = np.abs(scenario.waveform.coefficients) * amplitude
    signal_scale = float(peak.max()) / np.sqrt(scenario.radio_units[index].num_antennas)
    return 4.0 * max(sigma, signal_scale)
