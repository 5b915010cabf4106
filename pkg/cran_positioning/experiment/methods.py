from dataclasses import dataclass, replace
import math
from typing import List, Optional, Sequence

from cran_positioning._private._interfaces import FronthaulLink, Localizer
from cran_positioning.errors import ConfigError
from cran_positioning.experiment.config import METHOD_NAMES, ExperimentConfig
from cran_positioning.fronthaul.links import IdealLink, QuantizedLink
from cran_positioning.fronthaul.quantizer import DitherSpec
from cran_positioning.fronthaul.weights import effective_weights, ideal_weights
from cran_positioning.localization.direct import DirectLocalizer
from cran_positioning.localization.indirect import IndirectLocalizer, default_angle_lattice
from cran_positioning.localization.search_grid import SearchGrid


@dataclass(frozen=True, eq=False)
class MethodPipeline:
    """
    A fronthaul link paired with the localizer that consumes its output.

    Attributes:
        method: Method name as listed in the configuration
        link: Path from the RUs to the CU
        localizer: Estimator running at the CU
        dither_divisor: Divisor of the dithered link, NaN for the other methods
        selects_divisor: The divisor is still to be picked per sweep cell from pilot trials
    """
    method: str
    link: FronthaulLink
    localizer: Localizer
    dither_divisor: float = math.nan
    selects_divisor: bool = False

    @property
    def label(self) -> str:
        if self.selects_divisor:
            return f"{self.method}/select"
        if math.isnan(self.dither_divisor):
            return self.method
        return f"{self.method}/{self.dither_divisor:g}"


class MethodFactory:
    """
    Builds the pipelines an experiment evaluates.

    The indirect baseline forwards unquantized samples: its per-RU TOA/AOA values
    are small enough that their quantization is negligible.
    """

    def __init__(self, config: ExperimentConfig) -> None:
        self.config: ExperimentConfig = config
        self.grid: SearchGrid = SearchGrid(
            spacing=config.grid.spacing,
            t0_oversampling=config.grid.t0_oversampling,
            zoom_rounds=config.grid.zoom_rounds,
            zoom_factor=config.grid.zoom_factor,
            refine_t0_oversampling=config.grid.refine_t0_oversampling,
            max_recenters=config.grid.max_recenters
        )

    def generate(self, methods: Optional[Sequence[str]] = None) -> List[MethodPipeline]:
        """
        Pipelines for the configured (or given) methods under the configured dither mode.

        With dither "off" the dithered method is dropped; with "sweep" it is expanded
        into one pipeline per divisor; with "select" it becomes a placeholder the
        harness resolves per sweep cell.

        Raises:
            ConfigError: If a method is unknown or no method remains
        """
        methods = list(self.config.methods if methods is None else methods)
        self._validate_methods(methods)

        pipelines: List[MethodPipeline] = []
        for method in methods:
            if method != "direct-dithered":
                pipelines.append(self.create(method))
            elif self.config.dither == "on":
                pipelines.append(self.create(method, self.config.dither_divisor))
            elif self.config.dither == "sweep":
                pipelines.extend(self.create(method, divisor) for divisor in self.config.dither_divisors)
            elif self.config.dither == "select":
                pipelines.append(replace(self.create(method), dither_divisor=math.nan, selects_divisor=True))
        if not pipelines:
            raise ConfigError(f"No methods left to run for dither mode '{self.config.dither}'")
        return pipelines

    def create(self, method: str, dither_divisor: Optional[float] = None) -> MethodPipeline:
        self._validate_methods([method])
        if method == "direct-quantized":
            return MethodPipeline(
                method, QuantizedLink(DitherSpec(enabled=False)), DirectLocalizer(self.grid, effective_weights)
            )
        if method == "direct-dithered":
            divisor = self.config.dither_divisor if dither_divisor is None else dither_divisor
            return MethodPipeline(
                method, QuantizedLink(DitherSpec(divisor=divisor)), DirectLocalizer(self.grid, effective_weights),
                dither_divisor=divisor
            )
        if method == "direct-ideal":
            return MethodPipeline(method, IdealLink(), DirectLocalizer(self.grid, ideal_weights))
        settings = self.config.indirect
        localizer = IndirectLocalizer(
            self.grid,
            angle_grid=default_angle_lattice(settings.aoa_points),
            toa_oversampling=settings.toa_oversampling,
            subband_length=settings.subband_length,
            use_toa=settings.use_toa,
            use_aoa=settings.use_aoa
        )
        return MethodPipeline(method, IdealLink(), localizer)

    def _validate_methods(self, methods: Sequence[str]) -> None:
        if not methods:
            raise ConfigError("Method list must not be empty")
        for method in methods:
            if method not in METHOD_NAMES:
                raise ConfigError(f"Unknown method '{method}'. Accepted methods are {list(METHOD_NAMES)}")
