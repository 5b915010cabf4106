from dataclasses import dataclass
import math
from typing import Optional, Tuple
import numpy as np
import numpy.typing as npt
from scipy import linalg

from cran_positioning._private._helpers import MAX_CONDITION_NUMBER, fold_angle, scaled_condition_number, wrap_angle
from cran_positioning.bounds.fisher import unit_fim
from cran_positioning.errors import SingularInformationError
from cran_positioning.localization.estimate import Estimate
from cran_positioning.localization.search_grid import SearchGrid
from cran_positioning.scenario.geometry import lattice_bearings, lattice_distances, steering_matrix
from cran_positioning.scenario.signal import FreqObservation, Scenario, WaveformSpectrum

MIN_SPECTRUM_MAGNITUDE: float = 1e-12
DEFAULT_AOA_POINTS: int = 721
DEFAULT_TOA_OVERSAMPLING: int = 10


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """
    Per-RU TOA/AOA estimates forwarded to the CU, with their fusion variances.

    Attributes:
        toa_hat: Estimates of tau_j(p) + t0 in seconds, one per RU
        aoa_hat: Estimates of the folded bearing in [0, pi], one per RU
        toa_var: TOA variances; infinite entries drop the measurement
        aoa_var: AOA variances; infinite entries drop the measurement
    """
    toa_hat: npt.NDArray[np.float64]
    aoa_hat: npt.NDArray[np.float64]
    toa_var: npt.NDArray[np.float64]
    aoa_var: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        sizes = {len(self.toa_hat), len(self.aoa_hat), len(self.toa_var), len(self.aoa_var)}
        if len(sizes) != 1:
            raise ValueError(f"Measurement arrays must have equal length, got sizes {sorted(sizes)}")
        if np.any(np.asarray(self.toa_var) <= 0) or np.any(np.asarray(self.aoa_var) <= 0):
            raise ValueError("Measurement variances must be positive")

    def __len__(self) -> int:
        return len(self.toa_hat)


@dataclass(frozen=True, eq=False)
class MusicSpectrum:
    """
    MUSIC pseudo-spectrum over a parameter lattice.

    Attributes:
        estimate: Lattice value with the largest pseudo-spectrum
        grid: Parameter lattice (angles in radians or delays in seconds)
        spectrum: Pseudo-spectrum 1 / ||E_n^H a||^2 at every lattice point
    """
    estimate: float
    grid: npt.NDArray[np.float64]
    spectrum: npt.NDArray[np.float64]

    @property
    def peak_to_median(self) -> float:
        """Peak over median of the pseudo-spectrum; small values mean no identifiable source."""
        return float(np.max(self.spectrum) / np.median(self.spectrum))


def default_angle_lattice(points: int = DEFAULT_AOA_POINTS) -> npt.NDArray[np.float64]:
    """Angles in [0, pi], the range over which a linear array response is unique."""
    return np.linspace(0.0, np.pi, points)


def default_delay_lattice(scenario: Scenario, oversampling: int = DEFAULT_TOA_OVERSAMPLING) -> npt.NDArray[np.float64]:
    """Delays k Ts / oversampling covering one observation window [0, Ns Ts)."""
    if oversampling < 1:
        raise ValueError(f"TOA oversampling factor must be at least 1, got {oversampling}")
    return np.arange(scenario.num_samples * oversampling) * scenario.sampling_period / oversampling


def _noise_subspace(covariance: npt.NDArray[np.complex128], sources: int = 1) -> npt.NDArray[np.complex128]:
    # eigh returns eigenvalues in ascending order
    _, eigenvectors = linalg.eigh(covariance)
    noise: npt.NDArray[np.complex128] = eigenvectors[:, :covariance.shape[0] - sources]
    return noise


def _pseudo_spectrum(
    noise: npt.NDArray[np.complex128],
    manifold: npt.NDArray[np.complex128]
) -> npt.NDArray[np.float64]:
    projection = np.sum(np.abs(manifold.conj() @ noise) ** 2, axis=1)
    spectrum: npt.NDArray[np.float64] = 1.0 / np.maximum(projection, np.finfo(float).tiny)
    return spectrum


def music_aoa(
    samples: npt.NDArray[np.complex128],
    num_antennas: int,
    antenna_spacing: float,
    wavelength: float,
    grid: Optional[npt.NDArray[np.float64]] = None
) -> MusicSpectrum:
    """
    Single-source MUSIC angle estimate from one RU's (M, Ns) observation.

    Each frequency bin is one spatial snapshot. The M - 1 eigenvectors with the
    smallest eigenvalues of the sample covariance span the noise subspace.

    Args:
        samples: Observation of one RU, antennas by bins
        num_antennas: Array size M
        antenna_spacing: Element spacing in meters
        wavelength: Carrier wavelength in meters
        grid: Angle lattice; defaults to 721 points over [0, pi]

    Returns:
        MusicSpectrum whose estimate is the lattice angle with the largest pseudo-spectrum

    Raises:
        ValueError: If M < 2, the shape does not match M, or there are no snapshots
    """
    if num_antennas < 2:
        raise ValueError(f"MUSIC angle estimation needs at least 2 antennas, got {num_antennas}")
    if samples.ndim != 2 or samples.shape[0] != num_antennas:
        raise ValueError(f"Expected an observation with {num_antennas} rows, got shape {samples.shape}")
    if samples.shape[1] == 0:
        raise ValueError("MUSIC covariance needs at least one snapshot")
    angles = default_angle_lattice() if grid is None else np.asarray(grid, dtype=float)

    covariance = samples @ samples.conj().T / samples.shape[1]
    manifold = steering_matrix(angles, num_antennas, antenna_spacing, wavelength)
    spectrum = _pseudo_spectrum(_noise_subspace(covariance), manifold)
    return MusicSpectrum(estimate=float(angles[int(np.argmax(spectrum))]), grid=angles, spectrum=spectrum)


def subband_covariance(snapshot: npt.NDArray[np.complex128], length: int) -> npt.NDArray[np.complex128]:
    """
    Frequency-smoothed covariance of a length-Ns vector from its Ns - length + 1 sub-bands.

    Example:
        >>> subband_covariance(np.ones(8, dtype=complex), 4).shape
        (4, 4)
    """
    if not 2 <= length <= len(snapshot):
        raise ValueError(f"Sub-band length must lie in [2, {len(snapshot)}], got {length}")
    windows = np.lib.stride_tricks.sliding_window_view(snapshot, length)
    covariance: npt.NDArray[np.complex128] = windows.T @ windows.conj() / len(windows)
    return covariance


def music_toa(
    samples: npt.NDArray[np.complex128],
    waveform: WaveformSpectrum,
    sampling_period: float,
    grid: npt.NDArray[np.float64],
    combiner: Optional[npt.NDArray[np.complex128]] = None,
    subband_length: Optional[int] = None
) -> MusicSpectrum:
    """
    Single-source MUSIC delay estimate of tau_j(p) + t0 from one RU's observation.

    The antennas are combined with `combiner` (the steering vector at the estimated
    angle), the waveform is divided out, and the bins act as the array with
    manifold exp(-i w_k tau).

    Args:
        samples: Observation of one RU, antennas by bins
        waveform: Known transmitted spectrum S(k)
        sampling_period: Ts in seconds
        grid: Delay lattice in seconds
        combiner: Unit-norm antenna combiner; defaults to the first antenna only
        subband_length: Frequency smoothing length; defaults to max(2, Ns // 2)

    Raises:
        ValueError: If Ns < 2 or any |S(k)| is below 1e-12
    """
    num_samples = samples.shape[1]
    if num_samples < 2:
        raise ValueError(f"MUSIC delay estimation needs at least 2 frequency bins, got {num_samples}")
    coefficients = waveform.coefficients
    if np.any(np.abs(coefficients) < MIN_SPECTRUM_MAGNITUDE):
        raise ValueError(f"Waveform spectrum has a coefficient below {MIN_SPECTRUM_MAGNITUDE} in magnitude")
    if combiner is None:
        combiner = np.eye(samples.shape[0], 1)[:, 0].astype(np.complex128)
    length = max(2, num_samples // 2) if subband_length is None else subband_length

    snapshot = (combiner.conj() @ samples) / coefficients
    covariance = subband_covariance(snapshot, length)
    frequencies = 2 * np.pi * np.arange(length) / (num_samples * sampling_period)
    delays = np.asarray(grid, dtype=float)
    manifold = np.exp(-1j * delays[:, None] * frequencies[None, :]) / math.sqrt(length)
    spectrum = _pseudo_spectrum(_noise_subspace(covariance), manifold)
    return MusicSpectrum(estimate=float(delays[int(np.argmax(spectrum))]), grid=delays, spectrum=spectrum)


def measurement_variances(scenario: Scenario, index: int, aoa_hat: float) -> Tuple[float, float]:
    """
    Single-RU unquantized CRB on (tau, phi), evaluated at the estimated angle.

    The channel coefficient stays a nuisance parameter at b = sqrt(E|b|^2). When the
    angle carries no information (M = 1 or an end-fire angle) the AOA variance is
    infinite and the TOA variance comes from the remaining parameters.

    Returns:
        (toa_var, aoa_var)

    Raises:
        SingularInformationError: If even the delay cannot be bounded
    """
    amplitude = complex(math.sqrt(scenario.mean_channel_power[index]))
    fim = unit_fim(scenario, index, 0.0, aoa_hat, amplitude, 0.0, None)
    if scaled_condition_number(fim) <= MAX_CONDITION_NUMBER:
        covariance = np.linalg.inv(fim)
        return float(covariance[0, 0]), float(covariance[1, 1])
    reduced = fim[np.ix_([0, 2, 3], [0, 2, 3])]
    conditioning = scaled_condition_number(reduced)
    if not conditioning <= MAX_CONDITION_NUMBER:
        raise SingularInformationError(
            f"Delay information of radio unit {index} is singular (condition number {conditioning:.3e})"
        )
    return float(np.linalg.inv(reduced)[0, 0]), math.inf


def fusion_cost(
    measurements: MeasurementSet,
    scenario: Scenario,
    points: npt.NDArray[np.float64],
    use_toa: bool = True,
    use_aoa: bool = True
) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Weighted TOA/AOA residual cost at every point, with t0 eliminated in closed form.

    TOA residuals toa_hat_j - tau_j(p) are unwrapped modulo the observation window
    relative to the first RU before the weighted mean t0*(p) is taken.

    Returns:
        (cost, t0_star), both of shape (P,)
    """
    window = scenario.observation_window
    cost = np.zeros(len(points))
    t0_star = np.zeros(len(points))
    toa_weights = 1.0 / np.asarray(measurements.toa_var, dtype=float)
    aoa_weights = 1.0 / np.asarray(measurements.aoa_var, dtype=float)

    if use_toa and np.sum(toa_weights) > 0:
        delays = np.column_stack([
            lattice_distances(points, unit.position) / scenario.propagation_speed
            for unit in scenario.radio_units
        ])
        residual = np.asarray(measurements.toa_hat)[None, :] - delays
        offset = residual - residual[:, :1]
        residual = residual[:, :1] + (np.mod(offset + window / 2, window) - window / 2)
        t0_star = residual @ toa_weights / np.sum(toa_weights)
        cost += ((residual - t0_star[:, None]) ** 2) @ toa_weights

    if use_aoa:
        bearings = np.column_stack([lattice_bearings(points, unit.position) for unit in scenario.radio_units])
        angle_residual = wrap_angle(fold_angle(np.asarray(measurements.aoa_hat))[None, :] - fold_angle(bearings))
        cost += (angle_residual ** 2) @ aoa_weights
    return cost, t0_star


def fuse_ml(
    measurements: MeasurementSet,
    scenario: Scenario,
    grid: SearchGrid,
    use_toa: bool = True,
    use_aoa: bool = True
) -> Estimate:
    """
    Maximum-likelihood fusion of per-RU TOA/AOA measurements over the search lattice.

    Args:
        measurements: One measurement per radio unit
        scenario: Scenario with the RU geometry
        grid: Position lattice (the t0 settings are not used)
        use_toa: Include the TOA terms
        use_aoa: Include the AOA terms

    Returns:
        Estimate with the minimizing position, t0*(p_hat) and objective = -cost

    Raises:
        ValueError: If fewer than 2 measurements are given or both terms are disabled
    """
    if len(measurements) < 2:
        raise ValueError(f"Fusion needs measurements from at least 2 radio units, got {len(measurements)}")
    if len(measurements) != scenario.num_radio_units:
        raise ValueError(
            f"Got {len(measurements)} measurements for {scenario.num_radio_units} radio units"
        )
    if not (use_toa or use_aoa):
        raise ValueError("Fusion needs at least one of TOA or AOA measurements")

    def score_points(points: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        cost, _ = fusion_cost(measurements, scenario, points, use_toa, use_aoa)
        return -cost

    p_hat, objective = grid.search(scenario.region, score_points)
    _, t0_star = fusion_cost(measurements, scenario, p_hat.as_array()[None, :], use_toa, use_aoa)
    return Estimate(
        p_hat=p_hat,
        t0_hat=float(t0_star[0]),
        b_hat=np.zeros(0, dtype=np.complex128),
        objective=objective
    )


class IndirectLocalizer:
    """
    Two-step baseline: MUSIC AOA and TOA per RU, then ML fusion at the CU.

    Args:
        grid: Position lattice for the fusion step
        angle_grid: AOA lattice; defaults to 721 points over [0, pi]
        toa_oversampling: Delay lattice spacing is Ts / toa_oversampling
        subband_length: TOA smoothing length; defaults to max(2, Ns // 2)
        use_toa: Include TOA terms in the fusion
        use_aoa: Include AOA terms in the fusion
    """

    def __init__(
        self,
        grid: SearchGrid,
        angle_grid: Optional[npt.NDArray[np.float64]] = None,
        toa_oversampling: int = DEFAULT_TOA_OVERSAMPLING,
        subband_length: Optional[int] = None,
        use_toa: bool = True,
        use_aoa: bool = True
    ) -> None:
        self.grid: SearchGrid = grid
        self.angle_grid: npt.NDArray[np.float64] = default_angle_lattice() if angle_grid is None else angle_grid
        self.toa_oversampling: int = toa_oversampling
        self.subband_length: Optional[int] = subband_length
        self.use_toa: bool = use_toa
        self.use_aoa: bool = use_aoa
        self.name: str = "indirect"

    def measure(self, scenario: Scenario, observation: FreqObservation) -> MeasurementSet:
        """Per-RU MUSIC estimates and their CRB-based variances."""
        observation.check_shape(scenario)
        delay_grid = default_delay_lattice(scenario, self.toa_oversampling)
        toa_hat, aoa_hat, toa_var, aoa_var = [], [], [], []
        for index, unit in enumerate(scenario.radio_units):
            samples = observation.samples[index]
            if unit.num_antennas >= 2:
                angle = music_aoa(
                    samples, unit.num_antennas, scenario.antenna_spacing, scenario.wavelength, self.angle_grid
                ).estimate
            else:
                angle = 0.0
            combiner = steering_matrix(
                np.array([angle]), unit.num_antennas, scenario.antenna_spacing, scenario.wavelength
            )[0]
            delay = music_toa(
                samples, scenario.waveform, scenario.sampling_period, delay_grid, combiner, self.subband_length
            ).estimate
            delay_var, angle_var = measurement_variances(scenario, index, angle)
            toa_hat.append(delay)
            aoa_hat.append(angle)
            toa_var.append(delay_var)
            aoa_var.append(angle_var)
        return MeasurementSet(
            toa_hat=np.array(toa_hat),
            aoa_hat=np.array(aoa_hat),
            toa_var=np.array(toa_var),
            aoa_var=np.array(aoa_var)
        )

    def localize(self, scenario: Scenario, observation: FreqObservation) -> Estimate:
        return fuse_ml(self.measure(scenario, observation), scenario, self.grid, self.use_toa, self.use_aoa)
