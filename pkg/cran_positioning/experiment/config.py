from dataclasses import asdict, dataclass, field, replace
import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union
import tomli

from cran_positioning._private._helpers import db_to_linear
from cran_positioning.errors import ConfigError
from cran_positioning.fronthaul.quantizer import UniformQuantizerSpec
from cran_positioning.scenario.geometry import Position, Region
from cran_positioning.scenario.signal import RadioUnit, Scenario, sinc_waveform_spectrum

METHOD_NAMES: Tuple[str, ...] = ("direct-quantized", "direct-dithered", "direct-ideal", "indirect")
DITHER_MODES: Tuple[str, ...] = ("on", "off", "sweep", "select")
CRB_PATTERNS: Tuple[str, ...] = ("equal", "configured")


def _floats(values: Sequence[Any]) -> Tuple[float, ...]:
    return tuple(float(value) for value in values)


def _check_keys(section: str, data: Dict[str, Any], allowed: Sequence[str]) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown keys in [{section}]: {unknown}")


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Network geometry and signal settings, SI units throughout.

    The wavelength follows from the carrier frequency; the antenna spacing is given
    in wavelengths. `t0_max` defaults to half the observation window.
    """
    ru_positions: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (4000.0, 0.0), (4000.0, 4000.0), (0.0, 4000.0))
    region: Tuple[float, float, float, float] = (500.0, 3500.0, 500.0, 3500.0)
    num_antennas: int = 8
    carrier_frequency: float = 900e6
    antenna_spacing_wavelengths: float = 0.5
    sampling_period: float = 2.5e-6
    num_samples: int = 8
    propagation_speed: float = 3e8
    mean_channel_power: float = 1.0
    rician_k_db: float = 20.0
    t0_max: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        _check_keys("scenario", data, [item.name for item in cls.__dataclass_fields__.values()])
        values = dict(data)
        if "ru_positions" in values:
            values["ru_positions"] = tuple((float(x), float(y)) for x, y in values["ru_positions"])
        if "region" in values:
            if len(values["region"]) != 4:
                raise ConfigError(f"Region must be [x_min, x_max, y_min, y_max], got {values['region']}")
            values["region"] = _floats(values["region"])
        for name in ("num_antennas", "num_samples"):
            if name in values:
                values[name] = int(values[name])
        for name in ("carrier_frequency", "antenna_spacing_wavelengths", "sampling_period",
                     "propagation_speed", "mean_channel_power", "rician_k_db", "t0_max"):
            if values.get(name) is not None:
                values[name] = float(values[name])
        return cls(**values)

    @property
    def wavelength(self) -> float:
        return self.propagation_speed / self.carrier_frequency

    @property
    def observation_window(self) -> float:
        return self.num_samples * self.sampling_period

    @property
    def resolved_t0_max(self) -> float:
        return self.observation_window / 2 if self.t0_max is None else self.t0_max


@dataclass(frozen=True)
class GridConfig:
    spacing: float = 25.0
    t0_oversampling: int = 1
    zoom_rounds: int = 2
    zoom_factor: int = 5
    refine_t0_oversampling: int = 64
    max_recenters: int = 20

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridConfig":
        _check_keys("grid", data, [item.name for item in cls.__dataclass_fields__.values()])
        return cls(
            spacing=float(data.get("spacing", cls.spacing)),
            t0_oversampling=int(data.get("t0_oversampling", cls.t0_oversampling)),
            zoom_rounds=int(data.get("zoom_rounds", cls.zoom_rounds)),
            zoom_factor=int(data.get("zoom_factor", cls.zoom_factor)),
            refine_t0_oversampling=int(data.get("refine_t0_oversampling", cls.refine_t0_oversampling)),
            max_recenters=int(data.get("max_recenters", cls.max_recenters))
        )


@dataclass(frozen=True)
class CalibratedRange:
    """Quantizer half-ranges r_max, one per RU, calibrated at one SNR."""
    snr_db: float
    r_max: Tuple[float, ...]


@dataclass(frozen=True)
class CalibrationConfig:
    """
    Dynamic-range calibration settings.

    Attributes:
        coverage: Probability that a received component lies inside [-r_max, r_max]
        draws: Monte Carlo draws per SNR
        calibrated: Ranges already calibrated; SNRs listed here are not recalibrated
    """
    coverage: float = 0.95
    draws: int = 2000
    calibrated: Tuple[CalibratedRange, ...] = ()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CalibrationConfig":
        _check_keys("calibration", data, ["coverage", "draws", "calibrated"])
        calibrated = tuple(
            CalibratedRange(snr_db=float(entry["snr_db"]), r_max=_floats(entry["r_max"]))
            for entry in data.get("calibrated", [])
        )
        return cls(
            coverage=float(data.get("coverage", cls.coverage)),
            draws=int(data.get("draws", cls.draws)),
            calibrated=calibrated
        )

    def lookup(self, snr_db: float) -> Optional[Tuple[float, ...]]:
        for entry in self.calibrated:
            if entry.snr_db == snr_db:
                return entry.r_max
        return None


@dataclass(frozen=True)
class IndirectConfig:
    aoa_points: int = 721
    toa_oversampling: int = 10
    subband_length: Optional[int] = None
    use_toa: bool = True
    use_aoa: bool = True

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IndirectConfig":
        _check_keys("indirect", data, ["aoa_points", "toa_oversampling", "subband_length", "use_toa", "use_aoa"])
        subband_length = data.get("subband_length")
        return cls(
            aoa_points=int(data.get("aoa_points", cls.aoa_points)),
            toa_oversampling=int(data.get("toa_oversampling", cls.toa_oversampling)),
            subband_length=None if subband_length is None else int(subband_length),
            use_toa=bool(data.get("use_toa", cls.use_toa)),
            use_aoa=bool(data.get("use_aoa", cls.use_aoa))
        )


@dataclass(frozen=True)
class CrbConfig:
    """
    CRB settings.

    Attributes:
        snr_db_list: SNR points of the CRB sweep
        b_over_m_list: Fronthaul rates of the CRB sweep
        positions: Seeded source positions averaged at every point
        pattern: "equal" gives every RU rate B and one shared quantizer in the sweep;
            "configured" uses the fronthaul pattern and the per-RU calibrated ranges
        simulate_bounds: Attach position-averaged CRBs to every simulated cell
    """
    snr_db_list: Tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    b_over_m_list: Tuple[float, ...] = (4.0,)
    positions: int = 200
    pattern: str = "equal"
    simulate_bounds: bool = True

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CrbConfig":
        _check_keys("crb", data, [item.name for item in cls.__dataclass_fields__.values()])
        return cls(
            snr_db_list=_floats(data.get("snr_db_list", cls.snr_db_list)),
            b_over_m_list=_floats(data.get("b_over_m_list", cls.b_over_m_list)),
            positions=int(data.get("positions", cls.positions)),
            pattern=str(data.get("pattern", cls.pattern)),
            simulate_bounds=bool(data.get("simulate_bounds", cls.simulate_bounds))
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Full description of a Monte Carlo experiment.

    Attributes:
        snr_db_list: SNR per antenna in dB
        b_over_m_list: Fronthaul rates B/M in bits per complex sample per antenna
        fronthaul_pattern: Per-RU multiplier of B (B_j = pattern_j * B)
        trials: Monte Carlo trials per sweep cell
        seed: Master seed; every random stream is derived from it
        methods: Localization methods to evaluate
        dither: "on" uses `dither_divisor`, "off" drops the dithered method, "sweep" runs
            every entry of `dither_divisors` and "select" picks the entry with the
            lowest RMS over pilot trials in each sweep cell
        dither_divisor: Dither half-width is step / divisor in mode "on"
        dither_divisors: Divisors of the sweep and candidates of the selection
        dither_pilot_trials: Pilot trials per candidate divisor in mode "select"
    """
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    indirect: IndirectConfig = field(default_factory=IndirectConfig)
    crb: CrbConfig = field(default_factory=CrbConfig)
    snr_db_list: Tuple[float, ...] = (0.0, 5.0)
    b_over_m_list: Tuple[float, ...] = (2.0, 3.0, 4.0, 5.0, 6.0)
    fronthaul_pattern: Tuple[float, ...] = (1.0, 1.0, 1.0, 2.0)
    trials: int = 500
    seed: int = 2017
    methods: Tuple[str, ...] = METHOD_NAMES
    dither: str = "select"
    dither_divisor: float = 2.0
    dither_divisors: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 64.0)
    dither_pilot_trials: int = 100

    def __post_init__(self) -> None:
        self._validate()

    @classmethod
    def reference(cls) -> "ExperimentConfig":
        """Four RUs on a 4 km square, 3x3 km source region, M=8, Ns=8, Ts=2.5 us, K=20 dB."""
        return cls()

    def build_scenario(
        self,
        snr_db: float,
        b_over_m: float,
        r_max: Optional[Sequence[float]] = None,
        fronthaul_pattern: Optional[Sequence[float]] = None
    ) -> Scenario:
        """
        Scenario at one sweep point.

        Noise power follows sigma^2 = E|b|^2 / (Ns 10^(snr_db/10)); RU j gets
        B_j = pattern_j * (B/M) * M bits. Quantizers are attached when `r_max` is given.
        """
        settings = self.scenario
        pattern = self.fronthaul_pattern if fronthaul_pattern is None else fronthaul_pattern
        noise_power = settings.mean_channel_power / (settings.num_samples * db_to_linear(snr_db))
        units = []
        for index, (x, y) in enumerate(settings.ru_positions):
            bits = float(pattern[index]) * b_over_m * settings.num_antennas
            quantizer = None
            if r_max is not None:
                quantizer = UniformQuantizerSpec.from_rate(float(r_max[index]), bits, settings.num_antennas)
            units.append(RadioUnit(
                position=Position(x, y),
                num_antennas=settings.num_antennas,
                noise_power=noise_power,
                fronthaul_bits=bits,
                quantizer=quantizer
            ))
        return Scenario(
            radio_units=tuple(units),
            region=Region(*settings.region),
            wavelength=settings.wavelength,
            antenna_spacing=settings.antenna_spacing_wavelengths * settings.wavelength,
            sampling_period=settings.sampling_period,
            num_samples=settings.num_samples,
            propagation_speed=settings.propagation_speed,
            mean_channel_power=tuple(settings.mean_channel_power for _ in units),
            rician_k=db_to_linear(settings.rician_k_db),
            waveform=sinc_waveform_spectrum(settings.num_samples)
        )

    def with_calibration(self, ranges: Dict[float, Tuple[float, ...]]) -> "ExperimentConfig":
        """Copy with the given per-SNR ranges merged into the calibration section."""
        merged = {entry.snr_db: entry.r_max for entry in self.calibration.calibrated}
        merged.update(ranges)
        calibrated = tuple(CalibratedRange(snr_db, tuple(merged[snr_db])) for snr_db in sorted(merged))
        return replace(self, calibration=replace(self.calibration, calibrated=calibrated))

    def _validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"Number of trials must be at least 1, got {self.trials}")
        if not self.snr_db_list or not self.b_over_m_list:
            raise ConfigError("SNR and fronthaul rate lists must not be empty")
        if not self.methods:
            raise ConfigError("Method list must not be empty")
        unknown = [method for method in self.methods if method not in METHOD_NAMES]
        if unknown:
            raise ConfigError(f"Unknown methods {unknown}; expected a subset of {list(METHOD_NAMES)}")
        if self.dither not in DITHER_MODES:
            raise ConfigError(f"Dither mode must be one of {list(DITHER_MODES)}, got '{self.dither}'")
        if self.dither in ("sweep", "select") and not self.dither_divisors:
            raise ConfigError(f"Dither mode '{self.dither}' needs at least one divisor")
        if any(divisor <= 0 for divisor in (self.dither_divisor, *self.dither_divisors)):
            raise ConfigError("Dither divisors must be positive")
        if self.dither_pilot_trials < 1:
            raise ConfigError(f"Number of pilot trials must be at least 1, got {self.dither_pilot_trials}")
        if len(self.fronthaul_pattern) != len(self.scenario.ru_positions):
            raise ConfigError(
                f"Fronthaul pattern has {len(self.fronthaul_pattern)} entries for "
                f"{len(self.scenario.ru_positions)} radio units"
            )
        if any(value <= 0 for value in (*self.b_over_m_list, *self.fronthaul_pattern)):
            raise ConfigError("Fronthaul rates and pattern multipliers must be positive")
        if not 0.0 < self.calibration.coverage < 1.0:
            raise ConfigError(f"Calibration coverage must lie in (0, 1), got {self.calibration.coverage}")
        if self.crb.positions < 1 or not self.crb.snr_db_list or not self.crb.b_over_m_list:
            raise ConfigError("CRB sweep needs at least one position, SNR and fronthaul rate")
        if self.crb.pattern not in CRB_PATTERNS:
            raise ConfigError(f"CRB pattern must be one of {list(CRB_PATTERNS)}, got '{self.crb.pattern}'")


class ConfigLoader:
    """Reads and writes ExperimentConfig as TOML (read only) or JSON."""

    SECTIONS: Tuple[str, ...] = ("scenario", "grid", "calibration", "indirect", "crb")

    def load(self, path: Union[str, Path]) -> ExperimentConfig:
        """
        Load a configuration file.

        Args:
            path: A .toml or .json file

        Returns:
            The parsed, validated configuration

        Raises:
            ConfigError: If the type is unsupported, the file is unreadable or a value is invalid
        """
        path = Path(path)
        if path.suffix == ".toml":
            data = self._read_toml(path)
        elif path.suffix == ".json":
            data = self._read_json(path)
        else:
            raise ConfigError(f"Unsupported config type '{path.suffix}'. Only .toml and .json files are supported.")
        return self.from_dict(data)

    def from_dict(self, data: Dict[str, Any]) -> ExperimentConfig:
        top_level = [item for item in ExperimentConfig.__dataclass_fields__]
        _check_keys("experiment", data, top_level)
        values: Dict[str, Any] = {}
        parsers = {
            "scenario": ScenarioConfig.from_dict,
            "grid": GridConfig.from_dict,
            "calibration": CalibrationConfig.from_dict,
            "indirect": IndirectConfig.from_dict,
            "crb": CrbConfig.from_dict,
        }
        try:
            for name, parser in parsers.items():
                if name in data:
                    values[name] = parser(dict(data[name]))
            for name in ("snr_db_list", "b_over_m_list", "fronthaul_pattern", "dither_divisors"):
                if name in data:
                    values[name] = _floats(data[name])
            for name in ("trials", "seed", "dither_pilot_trials"):
                if name in data:
                    values[name] = int(data[name])
            if "methods" in data:
                values["methods"] = tuple(str(method) for method in data["methods"])
            if "dither" in data:
                values["dither"] = str(data["dither"])
            if "dither_divisor" in data:
                values["dither_divisor"] = float(data["dither_divisor"])
            return ExperimentConfig(**values)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"Invalid configuration value: {str(e)}")

    def to_dict(self, config: ExperimentConfig) -> Dict[str, Any]:
        """Plain nested dict of the resolved configuration; unset optional values are omitted."""
        return _drop_none(asdict(config))

    def dump_json(self, config: ExperimentConfig, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.write_text(json.dumps(self.to_dict(config), indent=2, sort_keys=True) + "\n")
        except OSError as e:
            raise OSError(f"Failed to write {path}: {str(e)}")
        return path

    def _read_toml(self, path: Path) -> Dict[str, Any]:
        try:
            with path.open("rb") as handle:
                data: Dict[str, Any] = tomli.load(handle)
        except (OSError, tomli.TOMLDecodeError) as e:
            raise ConfigError(f"Failed to read {path}: {str(e)}")
        return data

    def _read_json(self, path: Path) -> Dict[str, Any]:
        try:
            data: Dict[str, Any] = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Failed to read {path}: {str(e)}")
        return data


def _drop_none(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _drop_none(item) for key, item in value.items() if item is not None}
    if isinstance(value, (list, tuple)):
        return [_drop_none(item) for item in value]
    return value
