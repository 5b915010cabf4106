from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union
import numpy as np
import numpy.typing as npt

from cran_positioning.fronthaul.quantizer import (
    DitherSpec,
    UniformQuantizerSpec,
    quantize_component,
    reconstruct
)
from cran_positioning.scenario.signal import FreqObservation, Scenario


@dataclass(frozen=True, eq=False)
class QuantizedObservation:
    """
    What each RU sends over the fronthaul.

    Attributes:
        levels: Per-RU level indices of shape (2, M, Ns); axis 0 is (real, imaginary)
        dither: Per-RU complex dither realization of shape (M, Ns), or None when dithering is off
    """
    levels: Tuple[npt.NDArray[np.int64], ...]
    dither: Optional[Tuple[npt.NDArray[np.complex128], ...]]


def fronthaul_round_trip(
    observation: FreqObservation,
    quantizers: Union[UniformQuantizerSpec, Sequence[UniformQuantizerSpec]],
    dither: DitherSpec,
    rng: np.random.Generator
) -> Tuple[QuantizedObservation, FreqObservation]:
    """
    Dither, quantize and reconstruct every component, then subtract the same dither.

    Args:
        observation: Received DFT-domain samples at the RUs
        quantizers: One quantizer shared by all RUs, or one per RU
        dither: Dither settings; a disabled dither is identically zero
        rng: Generator for the dither realization

    Returns:
        The transmitted level indices and the dither-subtracted observation at the CU
    """
    if isinstance(quantizers, UniformQuantizerSpec):
        quantizers = [quantizers] * len(observation.samples)
    if len(quantizers) != len(observation.samples):
        raise ValueError(f"Got {len(quantizers)} quantizers for {len(observation.samples)} radio units")

    levels = []
    dithers = []
    recovered = []
    for matrix, quantizer in zip(observation.samples, quantizers):
        half_width = dither.half_width(quantizer)
        if dither.enabled:
            realization = (
                rng.uniform(-half_width, half_width, matrix.shape)
                + 1j * rng.uniform(-half_width, half_width, matrix.shape)
            )
        else:
            realization = np.zeros(matrix.shape, dtype=np.complex128)
        dithered = matrix + realization
        level = np.stack((
            quantize_component(dithered.real, quantizer),
            quantize_component(dithered.imag, quantizer)
        ))
        reconstructed = reconstruct(level[0], quantizer) + 1j * reconstruct(level[1], quantizer)
        levels.append(level)
        dithers.append(realization)
        recovered.append(reconstructed - realization)

    quantized = QuantizedObservation(tuple(levels), tuple(dithers) if dither.enabled else None)
    return quantized, FreqObservation(tuple(recovered))


class IdealLink:
    """Unlimited-capacity fronthaul: the CU sees the received samples unchanged."""

    def __init__(self) -> None:
        self.name: str = "ideal"

    def transport(
        self,
        scenario: Scenario,
        observation: FreqObservation,
        rng: np.random.Generator
    ) -> FreqObservation:
        return observation


class QuantizedLink:
    """
    Scalar-quantized fronthaul using each RU's calibrated quantizer.

    Args:
        dither: Dither settings applied at every RU
    """

    def __init__(self, dither: DitherSpec) -> None:
        self.dither: DitherSpec = dither
        self.name: str = "dithered" if dither.enabled else "quantized"

    def transport(
        self,
        scenario: Scenario,
        observation: FreqObservation,
        rng: np.random.Generator
    ) -> FreqObservation:
        quantizers = self._get_quantizers(scenario)
        _, recovered = fronthaul_round_trip(observation, quantizers, self.dither, rng)
        return recovered

    def _get_quantizers(self, scenario: Scenario) -> list[UniformQuantizerSpec]:
        quantizers = []
        for index, unit in enumerate(scenario.radio_units):
            if unit.quantizer is None:
                raise ValueError(f"Radio unit {index} has no calibrated quantizer")
            quantizers.append(unit.quantizer)
        return quantizers
