from dataclasses import dataclass
import math
from typing import Union
import numpy as np
import numpy.typing as npt

MIN_LEVELS: int = 2


@dataclass(frozen=True)
class UniformQuantizerSpec:
    """
    Mid-rise uniform scalar quantizer applied to each real and imaginary component.

    Representation points are -r_max + (l - 1) * step for l = 1..levels and the
    decision thresholds sit halfway between neighbouring points. Inputs beyond the
    outer thresholds saturate to the extreme levels.
    """
    r_max: float
    levels: int

    def __post_init__(self) -> None:
        if self.levels < MIN_LEVELS:
            raise ValueError(f"Quantizer needs at least {MIN_LEVELS} levels, got {self.levels}")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise ValueError(f"Quantizer range r_max must be positive and finite, got {self.r_max}")

    @property
    def step(self) -> float:
        return 2.0 * self.r_max / (self.levels - 1)

    @classmethod
    def from_rate(cls, r_max: float, fronthaul_bits: float, num_antennas: int) -> "UniformQuantizerSpec":
        """
        Build the quantizer an RU can afford with `fronthaul_bits` per complex vector sample.

        Each of the 2M real components gets B/(2M) bits, rounded to the nearest level count.

        Example:
            >>> UniformQuantizerSpec.from_rate(1.0, 32.0, 8).levels
            4
        """
        return cls(r_max=r_max, levels=levels_for_rate(fronthaul_bits, num_antennas))

    def representation_points(self) -> npt.NDArray[np.float64]:
        return -self.r_max + np.arange(self.levels) * self.step

    def thresholds(self) -> npt.NDArray[np.float64]:
        """Interior decision thresholds q_1..q_{L-1}."""
        return -self.r_max + (np.arange(1, self.levels) - 0.5) * self.step

    def extended_thresholds(self) -> npt.NDArray[np.float64]:
        """Thresholds q_0..q_L including the infinite outer edges."""
        return np.concatenate(([-np.inf], self.thresholds(), [np.inf]))


@dataclass(frozen=True)
class DitherSpec:
    """Subtractive dither drawn uniformly on [-step/divisor, step/divisor]."""
    divisor: float = 2.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.divisor <= 0:
            raise ValueError(f"Dither divisor must be positive, got {self.divisor}")

    def half_width(self, quantizer: UniformQuantizerSpec) -> float:
        return quantizer.step / self.divisor if self.enabled else 0.0


def levels_for_rate(fronthaul_bits: float, num_antennas: int) -> int:
    if fronthaul_bits <= 0:
        raise ValueError(f"Fronthaul rate must be positive, got {fronthaul_bits}")
    return max(MIN_LEVELS, int(round(2.0 ** (fronthaul_bits / (2 * num_antennas)))))


def quantize_component(
    value: Union[float, npt.NDArray[np.float64]],
    quantizer: UniformQuantizerSpec
) -> npt.NDArray[np.int64]:
    """
    Map real amplitudes to 1-based level indices.

    Level l covers (q_{l-1}, q_l]; values on a threshold fall in the lower cell.

    Example:
        >>> int(quantize_component(0.4, UniformQuantizerSpec(r_max=1.0, levels=3)))
        2
    """
    values = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("Quantizer input must be finite")
    return np.searchsorted(quantizer.thresholds(), values, side="left").astype(np.int64) + 1


def reconstruct(
    level: Union[int, npt.NDArray[np.int64]],
    quantizer: UniformQuantizerSpec
) -> npt.NDArray[np.float64]:
    """
    Representation point of a 1-based level index.

    Raises:
        ValueError: If any index lies outside 1..levels
    """
    levels = np.asarray(level)
    if np.any(levels < 1) or np.any(levels > quantizer.levels):
        raise ValueError(f"Level index out of range 1..{quantizer.levels}: {level}")
    return -quantizer.r_max + (levels - 1) * quantizer.step
