from dataclasses import dataclass, field, replace
import math
from typing import Callable, Optional, Sequence, Tuple
import numpy as np
import numpy.typing as npt

from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.geometry import (
    Position,
    Region,
    bearing,
    propagation_delay,
    steering_vector
)

NORMALIZATION_TOLERANCE: float = 1e-12


@dataclass(frozen=True, eq=False)
class WaveformSpectrum:
    """DFT coefficients S(0..Ns-1) of the known transmitted waveform, unit total energy."""
    coefficients: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        energy = float(np.sum(np.abs(self.coefficients) ** 2))
        if abs(energy - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Waveform spectrum must have unit energy, got {energy}")

    def __len__(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class RadioUnit:
    """
    Radio unit with an M-element uniform linear array.

    Attributes:
        position: Array reference position in meters
        num_antennas: Number of array elements M
        noise_power: Variance of each complex DFT noise coefficient
        fronthaul_bits: Bits per complex vector sample across the M antennas
        quantizer: Uniform quantizer used on the fronthaul, once calibrated
    """
    position: Position
    num_antennas: int
    noise_power: float
    fronthaul_bits: float
    quantizer: Optional[UniformQuantizerSpec] = None

    def __post_init__(self) -> None:
        if self.num_antennas < 1:
            raise ValueError(f"Radio unit needs at least one antenna, got {self.num_antennas}")
        if self.noise_power <= 0:
            raise ValueError(f"Noise power must be positive, got {self.noise_power}")
        if self.fronthaul_bits <= 0:
            raise ValueError(f"Fronthaul rate must be positive, got {self.fronthaul_bits}")


@dataclass(frozen=True)
class Scenario:
    """Immutable description of the network geometry, waveform, noise and fronthaul budgets."""
    radio_units: Tuple[RadioUnit, ...]
    region: Region
    wavelength: float
    antenna_spacing: float
    sampling_period: float
    num_samples: int
    propagation_speed: float
    mean_channel_power: Tuple[float, ...]
    rician_k: float
    waveform: WaveformSpectrum

    def __post_init__(self) -> None:
        if len(self.radio_units) < 1:
            raise ValueError("Scenario needs at least one radio unit")
        if self.sampling_period <= 0:
            raise ValueError(f"Sampling period must be positive, got {self.sampling_period}")
        if self.num_samples < 1:
            raise ValueError(f"Number of samples must be at least 1, got {self.num_samples}")
        if len(self.waveform) != self.num_samples:
            raise ValueError(
                f"Waveform has {len(self.waveform)} coefficients but scenario uses {self.num_samples} samples"
            )
        if len(self.mean_channel_power) != len(self.radio_units):
            raise ValueError("One mean channel power is required per radio unit")

    @property
    def num_radio_units(self) -> int:
        return len(self.radio_units)

    @property
    def observation_window(self) -> float:
        return self.num_samples * self.sampling_period

    def angular_frequencies(self) -> npt.NDArray[np.float64]:
        """w_k = 2 pi k / (Ns Ts) for k = 0..Ns-1."""
        return 2 * np.pi * np.arange(self.num_samples) / self.observation_window

    def delay(self, index: int, position: Position) -> float:
        return propagation_delay(position, self.radio_units[index].position, self.propagation_speed)

    def angle(self, index: int, position: Position) -> float:
        return bearing(position, self.radio_units[index].position)

    def array_response(self, index: int, position: Position) -> npt.NDArray[np.complex128]:
        unit = self.radio_units[index]
        return steering_vector(self.angle(index, position), unit.num_antennas, self.antenna_spacing, self.wavelength)

    def with_noise_powers(self, noise_powers: Sequence[float]) -> "Scenario":
        return self._map_units(lambda index, unit: replace(unit, noise_power=float(noise_powers[index])))

    def with_fronthaul_bits(self, fronthaul_bits: Sequence[float]) -> "Scenario":
        return self._map_units(lambda index, unit: replace(unit, fronthaul_bits=float(fronthaul_bits[index])))

    def with_quantizers(self, quantizers: Sequence[Optional[UniformQuantizerSpec]]) -> "Scenario":
        return self._map_units(lambda index, unit: replace(unit, quantizer=quantizers[index]))

    def _map_units(self, transform: Callable[[int, RadioUnit], RadioUnit]) -> "Scenario":
        units = tuple(transform(index, unit) for index, unit in enumerate(self.radio_units))
        return replace(self, radio_units=units)


@dataclass(frozen=True, eq=False)
class ChannelDraw:
    """One realization of the unknowns: channel coefficients, transmit time and source position."""
    b: npt.NDArray[np.complex128]
    t0: float
    p_true: Position

    def __post_init__(self) -> None:
        if self.t0 < 0:
            raise ValueError(f"Transmit time must be non-negative, got {self.t0}")


@dataclass(frozen=True, eq=False)
class FreqObservation:
    """Per-RU complex matrices of shape (M, Ns): antenna by frequency bin."""
    samples: Tuple[npt.NDArray[np.complex128], ...] = field(default_factory=tuple)

    def check_shape(self, scenario: Scenario) -> None:
        if len(self.samples) != scenario.num_radio_units:
            raise ValueError(
                f"Observation holds {len(self.samples)} radio units, scenario has {scenario.num_radio_units}"
            )
        for index, (matrix, unit) in enumerate(zip(self.samples, scenario.radio_units)):
            expected = (unit.num_antennas, scenario.num_samples)
            if matrix.shape != expected:
                raise ValueError(f"Radio unit {index} observation has shape {matrix.shape}, expected {expected}")

    def scaled(self, factor: complex) -> "FreqObservation":
        return FreqObservation(tuple(matrix * factor for matrix in self.samples))


def sinc_waveform_spectrum(num_samples: int) -> WaveformSpectrum:
    """
    Spectrum of s(n) = sinc(n) / sqrt(Ns) sampled at the Nyquist rate.

    The sampled sinc is a scaled unit impulse, so its DFT is flat at 1/sqrt(Ns).
    """
    if num_samples < 1:
        raise ValueError(f"Number of samples must be at least 1, got {num_samples}")
    time_samples = np.sinc(np.arange(num_samples)) / math.sqrt(num_samples)
    coefficients = np.fft.fft(time_samples).astype(np.complex128)
    return WaveformSpectrum(coefficients)


def draw_channel(
    scenario: Scenario,
    rng: np.random.Generator,
    t0_max: Optional[float] = None
) -> ChannelDraw:
    """
    Draw a source position, Rician channel coefficients and a transmit time.

    Args:
        scenario: Scenario providing the region, channel powers and Rician factor
        rng: Generator for all randomness of the draw
        t0_max: Upper end of the uniform transmit-time prior; defaults to half the window

    Returns:
        ChannelDraw with the source uniform over the region
    """
    if t0_max is None:
        t0_max = scenario.observation_window / 2
    position = scenario.region.sample_uniform(rng)
    power = np.asarray(scenario.mean_channel_power, dtype=float)
    if math.isinf(scenario.rician_k):
        specular_share, diffuse_share = 1.0, 0.0
    else:
        specular_share = scenario.rician_k / (scenario.rician_k + 1.0)
        diffuse_share = 1.0 / (scenario.rician_k + 1.0)
    diffuse = (rng.standard_normal(len(power)) + 1j * rng.standard_normal(len(power))) / math.sqrt(2)
    b = np.sqrt(specular_share * power) + np.sqrt(diffuse_share * power) * diffuse
    t0 = float(rng.uniform(0.0, t0_max)) if t0_max > 0 else 0.0
    return ChannelDraw(b=b.astype(np.complex128), t0=t0, p_true=position)


def mean_observation(scenario: Scenario, draw: ChannelDraw) -> FreqObservation:
    """Noiseless part b_j alpha_j(p) S(k) exp(-i w_k (tau_j(p) + t0)) for every RU."""
    frequencies = scenario.angular_frequencies()
    matrices = []
    for index in range(scenario.num_radio_units):
        delay = scenario.delay(index, draw.p_true) + draw.t0
        spectrum = scenario.waveform.coefficients * np.exp(-1j * frequencies * delay)
        response = scenario.array_response(index, draw.p_true)
        matrices.append(draw.b[index] * np.outer(response, spectrum))
    return FreqObservation(tuple(matrices))


def synthesize_observation(
    scenario: Scenario,
    draw: ChannelDraw,
    rng: np.random.Generator
) -> FreqObservation:
    """
    Noisy DFT-domain observation at every RU.

    Noise is circularly-symmetric complex Gaussian with variance noise_power per
    complex coefficient, independent across radio units, antennas and bins.
    """
    mean = mean_observation(scenario, draw)
    matrices = []
    for matrix, unit in zip(mean.samples, scenario.radio_units):
        noise = rng.standard_normal(matrix.shape) + 1j * rng.standard_normal(matrix.shape)
        matrices.append(matrix + math.sqrt(unit.noise_power / 2) * noise)
    return FreqObservation(tuple(matrices))
