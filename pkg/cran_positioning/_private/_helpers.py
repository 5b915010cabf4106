from typing import Sequence, Union
import numpy as np
import numpy.typing as npt

MAX_CONDITION_NUMBER: float = 1e12


def wrap_angle(angle: Union[float, npt.NDArray[np.float64]]) -> npt.NDArray[np.float64]:
    """
    Wrap angles to the half-open interval (-pi, pi].

    Example:
        >>> float(wrap_angle(3 * np.pi / 2))
        -1.5707963267948966
    """
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def fold_angle(angle: Union[float, npt.NDArray[np.float64]]) -> npt.NDArray[np.float64]:
    """Map an angle onto [0, pi], the range a linear array can distinguish."""
    return np.abs(wrap_angle(angle))


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Build an independent generator from a master seed and a counter path.

    Identical (seed, keys) always yield the same stream regardless of the order in
    which streams are created, so trials can run on any number of workers.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def trial_seed(seed: int, *keys: int) -> int:
    """32-bit seed of one trial, derived from the master seed and its counter path."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def stable_key(text: str) -> int:
    """Deterministic integer key for a label (Python's hash() is salted per process)."""
    return int.from_bytes(text.encode("utf-8"), "little") % (2**32)


def condition_number(matrix: npt.NDArray[np.float64]) -> float:
    return float(np.linalg.cond(matrix))


def as_float_list(values: Sequence[float]) -> list[float]:
    return [float(value) for value in values]


def scaled_condition_number(matrix: npt.NDArray[np.float64]) -> float:
    """
    Condition number after scaling to unit diagonal.

    Parameters with very different units (seconds against amplitudes) make the raw
    condition number meaningless; a zero or negative diagonal entry counts as singular.
    """
    diagonal = np.diag(matrix)
    if np.any(diagonal <= 0):
        return float("inf")
    scale = 1.0 / np.sqrt(diagonal)
    return condition_number(matrix * np.outer(scale, scale))
