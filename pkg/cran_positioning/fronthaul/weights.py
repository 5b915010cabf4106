from dataclasses import dataclass
import numpy as np
import numpy.typing as npt

from cran_positioning.scenario.signal import Scenario


@dataclass(frozen=True, eq=False)
class EffectiveWeights:
    """Effective noise variances gamma_j^2(k), shape (N_r, Ns)."""
    gamma_squared: npt.NDArray[np.float64]

    def for_unit(self, index: int) -> npt.NDArray[np.float64]:
        return self.gamma_squared[index]


def effective_weights(scenario: Scenario) -> EffectiveWeights:
    """
    Channel plus quantization noise variance per RU and frequency bin.

    The quantization noise is sized so that each antenna's quantizer carries B_j/M
    bits per complex sample under a Rayleigh model of the received signal:
    gamma^2 = sigma^2 + (E|b|^2 |S(k)|^2 + sigma^2) / (2^{B/M} - 1).

    Raises:
        ValueError: If a radio unit has a non-positive fronthaul rate
    """
    spectrum_power = np.abs(scenario.waveform.coefficients) ** 2
    rows = []
    for unit, channel_power in zip(scenario.radio_units, scenario.mean_channel_power):
        if unit.fronthaul_bits <= 0:
            raise ValueError(f"Fronthaul rate must be positive, got {unit.fronthaul_bits}")
        signal_power = channel_power * spectrum_power + unit.noise_power
        rows.append(unit.noise_power + signal_power / np.expm1(unit.fronthaul_bits / unit.num_antennas * np.log(2.0)))
    return EffectiveWeights(np.vstack(rows))


def ideal_weights(scenario: Scenario) -> EffectiveWeights:
    """Weights for unquantized observations: gamma_j^2(k) = sigma_j^2."""
    noise = np.array([unit.noise_power for unit in scenario.radio_units], dtype=float)
    return EffectiveWeights(np.repeat(noise[:, None], scenario.num_samples, axis=1))
