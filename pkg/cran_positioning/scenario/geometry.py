from dataclasses import dataclass
import math
import numpy as np
import numpy.typing as npt


@dataclass(frozen=True)
class Position:
    """Planar position in meters."""
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Position coordinates must be finite, got ({self.x}, {self.y})")

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def from_array(cls, values: npt.ArrayLike) -> "Position":
        x, y = np.asarray(values, dtype=float)
        return cls(float(x), float(y))


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle in which the source is known to lie."""
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(
                f"Region must have positive area, got x=[{self.x_min}, {self.x_max}], "
                f"y=[{self.y_min}, {self.y_max}]"
            )

    @property
    def center(self) -> Position:
        return Position((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    def contains(self, position: Position) -> bool:
        return self.x_min <= position.x <= self.x_max and self.y_min <= position.y <= self.y_max

    def sample_uniform(self, rng: np.random.Generator) -> Position:
        return Position(
            float(rng.uniform(self.x_min, self.x_max)),
            float(rng.uniform(self.y_min, self.y_max))
        )

    def clip(self, position: Position) -> Position:
        return Position(
            min(max(position.x, self.x_min), self.x_max),
            min(max(position.y, self.y_min), self.y_max)
        )


def distance(position: Position, reference: Position) -> float:
    """
    Euclidean distance between two positions.

    Example:
        >>> distance(Position(0, 0), Position(3, 4))
        5.0
    """
    return math.hypot(position.x - reference.x, position.y - reference.y)


def bearing(position: Position, reference: Position) -> float:
    """
    Four-quadrant angle of `position` seen from `reference`, in (-pi, pi].

    Raises:
        ValueError: If the two positions coincide
    """
    if position.x == reference.x and position.y == reference.y:
        raise ValueError(f"Bearing is undefined for coincident points {position}")
    return math.atan2(position.y - reference.y, position.x - reference.x)


def propagation_delay(position: Position, reference: Position, propagation_speed: float) -> float:
    if propagation_speed <= 0:
        raise ValueError(f"Propagation speed must be positive, got {propagation_speed}")
    return distance(position, reference) / propagation_speed


def steering_vector(
    angle: float,
    num_antennas: int,
    antenna_spacing: float,
    wavelength: float
) -> npt.NDArray[np.complex128]:
    """
    Unit-norm response of a uniform linear array along the x-axis.

    Entry m (0-based) is exp(-i 2 pi m spacing cos(angle) / wavelength) / sqrt(M).

    Example:
        >>> steering_vector(0.0, 2, 0.5, 1.0).round(6)
        array([ 0.707107+0.j, -0.707107-0.j])
    """
    if num_antennas < 1:
        raise ValueError(f"Array needs at least one antenna, got {num_antennas}")
    return steering_matrix(np.array([angle]), num_antennas, antenna_spacing, wavelength)[0]


def steering_matrix(
    angles: npt.NDArray[np.float64],
    num_antennas: int,
    antenna_spacing: float,
    wavelength: float
) -> npt.NDArray[np.complex128]:
    """Steering vectors for many angles at once, shape (len(angles), M)."""
    element_index = np.arange(num_antennas)
    phase = -2j * np.pi * antenna_spacing * np.cos(np.asarray(angles))[:, None] * element_index[None, :] / wavelength
    return np.exp(phase) / np.sqrt(num_antennas)


def lattice_distances(
    points: npt.NDArray[np.float64],
    reference: Position
) -> npt.NDArray[np.float64]:
    """Distances from an (P, 2) array of points to one reference position."""
    return np.hypot(points[:, 0] - reference.x, points[:, 1] - reference.y)


def lattice_bearings(
    points: npt.NDArray[np.float64],
    reference: Position
) -> npt.NDArray[np.float64]:
    return np.arctan2(points[:, 1] - reference.y, points[:, 0] - reference.x)
