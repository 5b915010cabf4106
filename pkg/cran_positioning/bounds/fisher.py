from dataclasses import dataclass
import numpy as np
import numpy.typing as npt
from scipy.special import ndtr

from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.geometry import Position, steering_vector
from cran_positioning.scenario.signal import Scenario

MIN_CELL_PROBABILITY: float = 1e-300
PARAMETER_NAMES: tuple[str, ...] = ("tau", "phi", "b_re", "b_im")


@dataclass(frozen=True, eq=False)
class ParamVector:
    """
    Unknowns of the bound: position and per-RU channel coefficients.

    The transmit time is treated as known, which keeps the result a lower bound.
    """
    p: Position
    b: npt.NDArray[np.complex128]
    t0: float = 0.0

    @property
    def dimension(self) -> int:
        return 2 + 2 * len(self.b)

    @classmethod
    def nominal(cls, scenario: Scenario, position: Position, t0: float = 0.0) -> "ParamVector":
        """Parameters with b_j = sqrt(E|b_j|^2), the line-of-sight amplitude with zero phase."""
        b = np.sqrt(np.asarray(scenario.mean_channel_power, dtype=float)).astype(np.complex128)
        return cls(p=position, b=b, t0=t0)


@dataclass(frozen=True, eq=False)
class NoiselessMean:
    """Noiseless observation f_{j,k,m} of one RU, shape (Ns, M)."""
    values: npt.NDArray[np.complex128]

    def components(self) -> npt.NDArray[np.float64]:
        """Real and imaginary parts stacked along a leading axis, shape (2, Ns, M)."""
        return np.stack((self.values.real, self.values.imag))


def cell_probability(
    level: int,
    mean: float,
    sigma: float,
    quantizer: UniformQuantizerSpec
) -> float:
    """
    Probability that a Gaussian component with the given mean falls in cell `level`.

    Each component has standard deviation sigma / sqrt(2), sigma being the complex-sample
    noise standard deviation.
    """
    if not 1 <= level <= quantizer.levels:
        raise ValueError(f"Level index out of range 1..{quantizer.levels}: {level}")
    edges = quantizer.extended_thresholds()
    scale = sigma / np.sqrt(2.0)
    return float(_interval_probability((edges[level - 1] - mean) / scale, (edges[level] - mean) / scale))


def _interval_probability(
    lower: npt.NDArray[np.float64],
    upper: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    """Phi(upper) - Phi(lower), evaluated on the tail that keeps precision."""
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    right_tail = lower > 0
    direct = ndtr(upper) - ndtr(lower)
    mirrored = ndtr(-lower) - ndtr(-upper)
    probability: npt.NDArray[np.float64] = np.where(right_tail, mirrored, direct)
    return probability


def unit_mean(
    scenario: Scenario,
    index: int,
    delay: float,
    angle: float,
    amplitude: complex,
    t0: float
) -> NoiselessMean:
    unit = scenario.radio_units[index]
    response = steering_vector(angle, unit.num_antennas, scenario.antenna_spacing, scenario.wavelength)
    spectrum = scenario.waveform.coefficients * np.exp(-1j * scenario.angular_frequencies() * (delay + t0))
    return NoiselessMean(amplitude * np.outer(spectrum, response))


def unit_derivatives(
    scenario: Scenario,
    index: int,
    delay: float,
    angle: float,
    amplitude: complex,
    t0: float
) -> npt.NDArray[np.float64]:
    """
    Partials of every component with respect to (tau, phi, b_re, b_im).

    Returns:
        Array of shape (4, 2, Ns, M): parameter, (real, imaginary), bin, antenna
    """
    unit = scenario.radio_units[index]
    frequencies = scenario.angular_frequencies()
    carrier = unit_mean(scenario, index, delay, angle, 1.0, t0).values
    mean = amplitude * carrier
    element_index = np.arange(unit.num_antennas)[None, :]
    complex_partials = np.stack((
        -1j * frequencies[:, None] * mean,
        2j * np.pi * scenario.antenna_spacing * np.sin(angle) * element_index * mean / scenario.wavelength,
        carrier,
        1j * carrier,
    ))
    return np.stack((complex_partials.real, complex_partials.imag), axis=1)


def mean_derivatives(
    index: int,
    frequency_bin: int,
    antenna: int,
    param: ParamVector,
    scenario: Scenario
) -> npt.NDArray[np.float64]:
    """
    Partials of f^Re and f^Im of one (RU, bin, antenna) sample, shape (4, 2).

    Rows follow (tau, phi, b_re, b_im); `antenna` is 0-based.
    """
    delay = scenario.delay(index, param.p)
    angle = scenario.angle(index, param.p)
    partials = unit_derivatives(scenario, index, delay, angle, complex(param.b[index]), param.t0)
    sample: npt.NDArray[np.float64] = partials[:, :, frequency_bin, antenna]
    return sample


def component_information(
    means: npt.NDArray[np.float64],
    sigma: float,
    quantizer: UniformQuantizerSpec
) -> npt.NDArray[np.float64]:
    """
    Fisher information a quantized component carries about its own mean.

    Sum over cells of (Gamma_l - Gamma_{l-1})^2 / (pi sigma^2 P_l), with
    Gamma_l = exp(-(q_l - f)^2 / sigma^2) and Gamma = 0 at the infinite edges.
    Cells with P_l below 1e-300 contribute nothing.
    """
    values = np.asarray(means, dtype=float).ravel()
    edges = quantizer.extended_thresholds()
    offsets = edges[None, :] - values[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        gamma = np.where(np.isfinite(offsets), np.exp(-(offsets ** 2) / sigma ** 2), 0.0)
    scale = sigma / np.sqrt(2.0)
    probability = _interval_probability(offsets[:, :-1] / scale, offsets[:, 1:] / scale)
    numerator = np.diff(gamma, axis=1) ** 2
    usable = probability >= MIN_CELL_PROBABILITY
    terms = np.where(usable, numerator / np.where(usable, probability, 1.0), 0.0)
    information: npt.NDArray[np.float64] = terms.sum(axis=1) / (np.pi * sigma ** 2)
    return information.reshape(np.shape(means))


def unit_fim(
    scenario: Scenario,
    index: int,
    delay: float,
    angle: float,
    amplitude: complex,
    t0: float,
    quantizer: UniformQuantizerSpec | None
) -> npt.NDArray[np.float64]:
    """4x4 information of one RU about (tau, phi, b_re, b_im); unquantized when `quantizer` is None."""
    sigma = float(np.sqrt(scenario.radio_units[index].noise_power))
    partials = unit_derivatives(scenario, index, delay, angle, amplitude, t0).reshape(4, -1)
    if quantizer is None:
        weights = np.full(partials.shape[1], 2.0 / sigma ** 2)
    else:
        means = unit_mean(scenario, index, delay, angle, amplitude, t0).components()
        weights = component_information(means, sigma, quantizer).ravel()
    fim = (partials * weights[None, :]) @ partials.T
    symmetric: npt.NDArray[np.float64] = (fim + fim.T) / 2
    return symmetric


def fim_quantized(
    index: int,
    param: ParamVector,
    scenario: Scenario,
    quantizer: UniformQuantizerSpec
) -> npt.NDArray[np.float64]:
    """Information of RU `index` about (tau, phi, b_re, b_im) from quantized, undithered samples."""
    return unit_fim(
        scenario, index, scenario.delay(index, param.p), scenario.angle(index, param.p),
        complex(param.b[index]), param.t0, quantizer
    )


def fim_unquantized(index: int, param: ParamVector, scenario: Scenario) -> npt.NDArray[np.float64]:
    """Information of RU `index` about (tau, phi, b_re, b_im) from unquantized samples."""
    return unit_fim(
        scenario, index, scenario.delay(index, param.p), scenario.angle(index, param.p),
        complex(param.b[index]), param.t0, None
    )
