from dataclasses import dataclass
import math
from typing import Optional, Sequence
import numpy as np
import numpy.typing as npt
from scipy.linalg import block_diag

from cran_positioning._private._helpers import MAX_CONDITION_NUMBER, scaled_condition_number
from cran_positioning.bounds.fisher import ParamVector, fim_quantized, fim_unquantized
from cran_positioning.errors import SingularInformationError
from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.geometry import Position
from cran_positioning.scenario.signal import Scenario

AMPLITUDE_SELECTOR: npt.NDArray[np.float64] = np.hstack((np.zeros((2, 2)), np.eye(2)))


@dataclass(frozen=True, eq=False)
class Efim2:
    """
    Equivalent information J(p) = X - Y Z^-1 Y^T about the position.

    Attributes:
        matrix: 2x2 equivalent Fisher information J(p)
        x: Position block of the full information, 2x2
        y: Position/amplitude cross block, 2 x 2N_r
        z: Amplitude block, 2N_r x 2N_r (block diagonal)
    """
    matrix: npt.NDArray[np.float64]
    x: npt.NDArray[np.float64]
    y: npt.NDArray[np.float64]
    z: npt.NDArray[np.float64]


def position_jacobian(scenario: Scenario, index: int, position: Position) -> npt.NDArray[np.float64]:
    """
    U_j: derivative of (tau_j, phi_j, b_re, b_im) with respect to (x, y), shape (2, 4).

    Example:
        A unit on the x-axis to the left of p gives [[1/c, 0, 0, 0], [0, 1/d, 0, 0]].
    """
    angle = scenario.angle(index, position)
    distance = scenario.delay(index, position) * scenario.propagation_speed
    speed = scenario.propagation_speed
    return np.array([
        [math.cos(angle) / speed, -math.sin(angle) / distance, 0.0, 0.0],
        [math.sin(angle) / speed, math.cos(angle) / distance, 0.0, 0.0],
    ])


def efim(
    scenario: Scenario,
    position: Position,
    fims: Sequence[npt.NDArray[np.float64]]
) -> Efim2:
    """
    Equivalent position information after eliminating the channel coefficients.

    Args:
        scenario: Scenario providing the geometry
        position: Source position the per-RU information was evaluated at
        fims: Per-RU 4x4 information about (tau, phi, b_re, b_im)

    Returns:
        Efim2 holding J(p) and its X, Y, Z blocks

    Raises:
        SingularInformationError: If the amplitude block Z has condition number above 1e12
    """
    if len(fims) != scenario.num_radio_units:
        raise ValueError(f"Got {len(fims)} information matrices for {scenario.num_radio_units} radio units")
    x = np.zeros((2, 2))
    cross_blocks = []
    amplitude_blocks = []
    for index, fim in enumerate(fims):
        jacobian = position_jacobian(scenario, index, position)
        x += jacobian @ fim @ jacobian.T
        cross_blocks.append(jacobian @ fim @ AMPLITUDE_SELECTOR.T)
        amplitude_blocks.append(AMPLITUDE_SELECTOR @ fim @ AMPLITUDE_SELECTOR.T)
    y = np.hstack(cross_blocks)
    z = block_diag(*amplitude_blocks)

    conditioning = scaled_condition_number(z)
    if not conditioning <= MAX_CONDITION_NUMBER:
        raise SingularInformationError(f"Amplitude information is singular (condition number {conditioning:.3e})")
    matrix = x - y @ np.linalg.solve(z, y.T)
    return Efim2(matrix=(matrix + matrix.T) / 2, x=x, y=y, z=z)


def full_parameter_fim(
    scenario: Scenario,
    position: Position,
    fims: Sequence[npt.NDArray[np.float64]]
) -> npt.NDArray[np.float64]:
    """
    Information about (x, y, b_1, .., b_Nr) assembled as T diag(Psi_j) T^T.

    T is the Jacobian of the per-RU parameters with respect to the full parameter vector.
    """
    count = scenario.num_radio_units
    jacobian = np.zeros((2 + 2 * count, 4 * count))
    for index in range(count):
        columns = slice(4 * index, 4 * index + 4)
        jacobian[:2, columns] = position_jacobian(scenario, index, position)
        jacobian[2 + 2 * index:4 + 2 * index, columns] = AMPLITUDE_SELECTOR
    full: npt.NDArray[np.float64] = jacobian @ block_diag(*fims) @ jacobian.T
    return full


def crb_trace(information: Efim2) -> float:
    """
    Lower bound tr(J(p)^-1) on the squared position error, in m^2.

    Raises:
        SingularInformationError: If J(p) is not invertible
    """
    conditioning = scaled_condition_number(information.matrix)
    if not conditioning <= MAX_CONDITION_NUMBER:
        raise SingularInformationError(f"Position information is singular (condition number {conditioning:.3e})")
    return float(np.trace(np.linalg.inv(information.matrix)))


def position_crb(
    scenario: Scenario,
    param: ParamVector,
    quantizers: Optional[Sequence[UniformQuantizerSpec]] = None
) -> float:
    """CRB on the squared position error with quantized (quantizers given) or unquantized observations."""
    if quantizers is None:
        fims = [fim_unquantized(index, param, scenario) for index in range(scenario.num_radio_units)]
    else:
        fims = [
            fim_quantized(index, param, scenario, quantizer)
            for index, quantizer in enumerate(quantizers)
        ]
    return crb_trace(efim(scenario, param.p, fims))


@dataclass(frozen=True)
class AveragedCrb:
    """
    CRBs averaged over source positions, m^2.

    `crb_quantized` is NaN when no quantizers were given.
    """
    crb_quantized: float
    crb_unquantized: float
    positions_used: int
    positions_skipped: int


def average_crb(
    scenario: Scenario,
    positions: Sequence[Position],
    quantizers: Optional[Sequence[UniformQuantizerSpec]] = None
) -> AveragedCrb:
    """
    Mean CRB^Q and CRB^UQ over `positions` at nominal amplitudes.

    A position whose information is singular under either observation model is
    skipped for both, so the two means cover the same positions.

    Raises:
        SingularInformationError: If every position is singular
    """
    quantized, unquantized = [], []
    for position in positions:
        param = ParamVector.nominal(scenario, position)
        try:
            crb_q = math.nan if quantizers is None else position_crb(scenario, param, quantizers)
            crb_uq = position_crb(scenario, param)
        except SingularInformationError:
            continue
        quantized.append(crb_q)
        unquantized.append(crb_uq)
    if not unquantized:
        raise SingularInformationError(f"All {len(positions)} positions have singular information")
    return AveragedCrb(
        crb_quantized=float(np.mean(quantized)),
        crb_unquantized=float(np.mean(unquantized)),
        positions_used=len(unquantized),
        positions_skipped=len(positions) - len(unquantized)
    )
