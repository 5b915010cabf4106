from dataclasses import dataclass
import numpy as np
import numpy.typing as npt

from cran_positioning.scenario.geometry import Position


@dataclass(frozen=True, eq=False)
class Estimate:
    """
    Output of a localizer.

    Attributes:
        p_hat: Estimated source position
        t0_hat: Estimated transmit time in seconds
        b_hat: Estimated complex channel coefficient per RU (empty when not estimated)
        objective: Score of the selected candidate (larger is better for every localizer)
    """
    p_hat: Position
    t0_hat: float
    b_hat: npt.NDArray[np.complex128]
    objective: float
