from typing import Callable, Tuple
import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from cran_positioning.fronthaul.weights import EffectiveWeights
from cran_positioning.localization.estimate import Estimate
from cran_positioning.localization.search_grid import LatticeScorer, SearchGrid
from cran_positioning.scenario.geometry import (
    Position,
    lattice_bearings,
    lattice_distances,
    steering_matrix
)
from cran_positioning.scenario.signal import FreqObservation, Scenario

WeightsProvider = Callable[[Scenario], EffectiveWeights]


def weighted_template(
    scenario: Scenario,
    index: int,
    position: Position,
    weights: EffectiveWeights
) -> npt.NDArray[np.complex128]:
    """
    Gamma-normalized delayed waveform of RU `index` at t0 = 0.

    Entry k is S(k) exp(-i w_k tau_j(p)) / gamma_j(k).
    """
    delay = scenario.delay(index, position)
    phase = np.exp(-1j * scenario.angular_frequencies() * delay)
    return scenario.waveform.coefficients * phase / np.sqrt(weights.for_unit(index))


def template_norm(scenario: Scenario, index: int, weights: EffectiveWeights) -> float:
    """||S_bar_j||, which does not depend on position or transmit time."""
    return float(np.sqrt(np.sum(np.abs(scenario.waveform.coefficients) ** 2 / weights.for_unit(index))))


def candidate_matrix(
    scenario: Scenario,
    observation: FreqObservation,
    position: Position,
    weights: EffectiveWeights
) -> npt.NDArray[np.complex128]:
    """
    Matrix V(p) of shape (Ns, N_r) whose FFT along bins scores every transmit time.

    Column j, entry k: S*(k) exp(i w_k tau_j(p)) alpha_j(p)^H R_j(k) / (gamma_j^2(k) ||S_bar_j||).
    """
    return candidate_tensor(scenario, observation, position.as_array()[None, :], weights)[0]


def candidate_tensor(
    scenario: Scenario,
    observation: FreqObservation,
    points: npt.NDArray[np.float64],
    weights: EffectiveWeights
) -> npt.NDArray[np.complex128]:
    """Candidate matrices for many positions at once, shape (P, Ns, N_r)."""
    frequencies = scenario.angular_frequencies()
    conjugate_spectrum = np.conj(scenario.waveform.coefficients)
    columns = []
    for index, unit in enumerate(scenario.radio_units):
        delays = lattice_distances(points, unit.position) / scenario.propagation_speed
        responses = steering_matrix(
            lattice_bearings(points, unit.position),
            unit.num_antennas,
            scenario.antenna_spacing,
            scenario.wavelength
        )
        combined = np.conj(responses) @ observation.samples[index]
        phase = np.exp(1j * delays[:, None] * frequencies[None, :])
        scale = conjugate_spectrum / (weights.for_unit(index) * template_norm(scenario, index, weights))
        columns.append(combined * phase * scale[None, :])
    return np.stack(columns, axis=-1)


def fft_t0_scores(candidates: npt.NDArray[np.complex128], t0_oversampling: int) -> npt.NDArray[np.float64]:
    """
    Sum over RUs of |F V_j|^2 with F the zero-padded (q_t0 Ns)-point DFT.

    Accepts a single (Ns, N_r) matrix or a stack (P, Ns, N_r); bins run along the
    second-to-last axis. Entry k of the result belongs to the transmit time given by
    fft_bin_to_t0(k).
    """
    if t0_oversampling < 1:
        raise ValueError(f"t0 oversampling factor must be at least 1, got {t0_oversampling}")
    length = candidates.shape[-2] * t0_oversampling
    spectrum = np.fft.fft(candidates, n=length, axis=-2)
    scores: npt.NDArray[np.float64] = np.sum(np.abs(spectrum) ** 2, axis=-1)
    return scores


def t0_grid(scenario: Scenario, t0_oversampling: int) -> npt.NDArray[np.float64]:
    """Transmit-time lattice {0, .., q_t0 Ns - 1} * Ts / q_t0 covering one observation window."""
    return np.arange(scenario.num_samples * t0_oversampling) * scenario.sampling_period / t0_oversampling


def fft_bin_to_t0(bin_index: int, scenario: Scenario, t0_oversampling: int) -> float:
    """
    Transmit time scored by FFT bin `bin_index`.

    The objective carries exp(+i w_k t0) while the DFT uses exp(-i ...), so bin k
    scores grid index (-k mod q_t0 Ns).
    """
    length = scenario.num_samples * t0_oversampling
    return float((-bin_index) % length * scenario.sampling_period / t0_oversampling)


def direct_objective(
    scenario: Scenario,
    observation: FreqObservation,
    position: Position,
    t0: float,
    weights: EffectiveWeights
) -> float:
    """Concentrated objective C_tilde(t0, p) evaluated term by term, without the FFT."""
    frequencies = scenario.angular_frequencies()
    total = 0.0
    for index in range(scenario.num_radio_units):
        delay = scenario.delay(index, position) + t0
        combined = np.conj(scenario.array_response(index, position)) @ observation.samples[index]
        terms = np.exp(1j * frequencies * delay) * np.conj(scenario.waveform.coefficients) * combined
        total += abs(np.sum(terms / weights.for_unit(index))) ** 2 / template_norm(scenario, index, weights) ** 2
    return float(total)


def estimate_amplitude(
    scenario: Scenario,
    observation: FreqObservation,
    index: int,
    position: Position,
    t0: float,
    weights: EffectiveWeights
) -> complex:
    """
    Closed-form least-squares channel coefficient of RU `index` at (p, t0).

    Raises:
        ValueError: If the weighted template has zero norm
    """
    norm_squared = template_norm(scenario, index, weights) ** 2
    if norm_squared == 0:
        raise ValueError(f"Weighted template of radio unit {index} has zero norm")
    delay = scenario.delay(index, position) + t0
    combined = np.conj(scenario.array_response(index, position)) @ observation.samples[index]
    terms = np.conj(scenario.waveform.coefficients) * np.exp(1j * scenario.angular_frequencies() * delay) * combined
    return complex(np.sum(terms / weights.for_unit(index)) / norm_squared)


def weighted_cost(
    scenario: Scenario,
    observation: FreqObservation,
    index: int,
    position: Position,
    t0: float,
    amplitude: complex,
    weights: EffectiveWeights
) -> float:
    """Weighted squared residual C_j(b, t0, p) of RU `index`."""
    delay = scenario.delay(index, position) + t0
    spectrum = scenario.waveform.coefficients * np.exp(-1j * scenario.angular_frequencies() * delay)
    model = amplitude * np.outer(scenario.array_response(index, position), spectrum)
    residual = np.sum(np.abs(observation.samples[index] - model) ** 2, axis=0)
    return float(np.sum(residual / weights.for_unit(index)))


def refine_t0(
    scenario: Scenario,
    observation: FreqObservation,
    position: Position,
    t0: float,
    weights: EffectiveWeights,
    t0_oversampling: int
) -> Tuple[float, float]:
    """
    Continuous transmit-time maximization within one FFT bin of `t0` at a fixed position.

    The objective is periodic in the observation window, so the result is wrapped onto
    it. The lattice value is kept unless the bounded search raises the objective by more
    than a relative 1e-9.

    Returns:
        Transmit time and its objective value
    """
    step = scenario.sampling_period / t0_oversampling
    at_lattice = direct_objective(scenario, observation, position, t0, weights)
    result = minimize_scalar(
        lambda value: -direct_objective(scenario, observation, position, value, weights),
        bounds=(t0 - step, t0 + step),
        method="bounded",
        options={"xatol": step * 1e-4}
    )
    refined = -float(result.fun)
    if refined > at_lattice * (1 + 1e-9):
        return float(result.x) % scenario.observation_window, refined
    return t0, at_lattice


def estimate_position(
    scenario: Scenario,
    observation: FreqObservation,
    weights: EffectiveWeights,
    grid: SearchGrid
) -> Estimate:
    """
    Approximate ML position estimate.

    Every lattice point is scored by its best transmit time (FFT over the t0 grid),
    the lattice is refined around the incumbent, and the channel coefficients are
    recovered in closed form at the winning (p, t0).

    Args:
        scenario: Scenario describing geometry and waveform
        observation: Dither-subtracted observations at the CU
        weights: Effective noise variances gamma_j^2(k)
        grid: Position lattice and t0 resolution

    Returns:
        Estimate with the maximizing position, transmit time and amplitudes

    Raises:
        ValueError: If the search grid is empty
    """
    observation.check_shape(scenario)

    def scorer(t0_oversampling: int) -> LatticeScorer:
        def score_points(points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
            scores = fft_t0_scores(candidate_tensor(scenario, observation, points, weights), t0_oversampling)
            best: npt.NDArray[np.float64] = np.max(scores, axis=-1)
            return best
        return score_points

    p_hat, objective = grid.search(
        scenario.region, scorer(grid.t0_oversampling), scorer(grid.refine_t0_oversampling)
    )
    t0_oversampling = grid.refine_t0_oversampling if grid.refines else grid.t0_oversampling
    scores = fft_t0_scores(candidate_matrix(scenario, observation, p_hat, weights), t0_oversampling)
    t0_hat = fft_bin_to_t0(int(np.argmax(scores)), scenario, t0_oversampling)
    if grid.refines:
        t0_hat, objective = refine_t0(scenario, observation, p_hat, t0_hat, weights, t0_oversampling)
    b_hat = np.array([
        estimate_amplitude(scenario, observation, index, p_hat, t0_hat, weights)
        for index in range(scenario.num_radio_units)
    ], dtype=np.complex128)
    return Estimate(p_hat=p_hat, t0_hat=t0_hat, b_hat=b_hat, objective=objective)


class DirectLocalizer:
    """
    Direct (one-step) localizer working on observations forwarded to the CU.

    Args:
        grid: Search lattice and transmit-time resolution
        weights_provider: Maps a scenario to the effective noise weights to use
        name: Label used in experiment records
    """

    def __init__(self, grid: SearchGrid, weights_provider: WeightsProvider, name: str = "direct") -> None:
        self.grid: SearchGrid = grid
        self.weights_provider: WeightsProvider = weights_provider
        self.name: str = name

    def localize(self, scenario: Scenario, observation: FreqObservation) -> Estimate:
        return estimate_position(scenario, observation, self.weights_provider(scenario), self.grid)
