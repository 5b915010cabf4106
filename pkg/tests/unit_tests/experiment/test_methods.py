from dataclasses import replace
import math
import pytest

from cran_positioning.errors import ConfigError
from cran_positioning.experiment.config import ExperimentConfig
from cran_positioning.experiment.methods import MethodFactory
from cran_positioning.fronthaul.links import IdealLink, QuantizedLink
from cran_positioning.fronthaul.weights import effective_weights, ideal_weights
from cran_positioning.localization.direct import DirectLocalizer
from cran_positioning.localization.indirect import IndirectLocalizer

@pytest.fixture
def config() -> ExperimentConfig:
    """Fixture for the reference experiment configuration."""
    return ExperimentConfig.reference()

@pytest.fixture
def factory(config: ExperimentConfig) -> MethodFactory:
    """Fixture for MethodFactory instance."""
    return MethodFactory(config)

def test_generate_all_methods(factory: MethodFactory) -> None:
    """Test the default pipelines in configured order."""
    pipelines = factory.generate()
    assert [pipeline.label for pipeline in pipelines] == [
        "direct-quantized", "direct-dithered/select", "direct-ideal", "indirect"
    ]

def test_pipeline_components(factory: MethodFactory) -> None:
    """Test the link, localizer and weights each method uses."""
    quantized = factory.create("direct-quantized")
    assert isinstance(quantized.link, QuantizedLink) and not quantized.link.dither.enabled
    assert isinstance(quantized.localizer, DirectLocalizer)
    assert quantized.localizer.weights_provider is effective_weights
    assert math.isnan(quantized.dither_divisor)

    dithered = factory.create("direct-dithered", 4.0)
    assert isinstance(dithered.link, QuantizedLink) and dithered.link.dither.divisor == 4.0
    assert dithered.dither_divisor == 4.0

    ideal = factory.create("direct-ideal")
    assert isinstance(ideal.link, IdealLink)
    assert ideal.localizer.weights_provider is ideal_weights

    indirect = factory.create("indirect")
    assert isinstance(indirect.link, IdealLink)
    assert isinstance(indirect.localizer, IndirectLocalizer)
    assert len(indirect.localizer.angle_grid) == 721

def test_grid_follows_config(config: ExperimentConfig) -> None:
    """Test that the search grid is built from the grid section."""
    grid = replace(config.grid, spacing=40.0, zoom_rounds=1, refine_t0_oversampling=16, max_recenters=3)
    factory = MethodFactory(replace(config, grid=grid))
    assert factory.grid.spacing == 40.0
    assert factory.grid.zoom_rounds == 1
    assert (factory.grid.refine_t0_oversampling, factory.grid.max_recenters) == (16, 3)

def test_dither_off_drops_dithered(config: ExperimentConfig) -> None:
    """Test that dither mode off removes the dithered method."""
    pipelines = MethodFactory(replace(config, dither="off")).generate()
    assert [pipeline.method for pipeline in pipelines] == ["direct-quantized", "direct-ideal", "indirect"]

def test_dither_sweep_expands_divisors(config: ExperimentConfig) -> None:
    """Test that dither mode sweep adds one pipeline per divisor."""
    config = replace(config, dither="sweep", dither_divisors=(1.0, 2.0, 4.0))
    pipelines = MethodFactory(config).generate(["direct-dithered"])
    assert [pipeline.label for pipeline in pipelines] == [
        "direct-dithered/1", "direct-dithered/2", "direct-dithered/4"
    ]

def test_dither_select_leaves_placeholder(config: ExperimentConfig) -> None:
    """Test that dither mode select defers the divisor to the harness."""
    pipelines = MethodFactory(config).generate(["direct-dithered"])
    assert len(pipelines) == 1
    assert pipelines[0].selects_divisor
    assert math.isnan(pipelines[0].dither_divisor)
    assert pipelines[0].label == "direct-dithered/select"

def test_dither_on_uses_configured_divisor(config: ExperimentConfig) -> None:
    """Test that dither mode on builds one pipeline with the configured divisor."""
    pipelines = MethodFactory(replace(config, dither="on", dither_divisor=8.0)).generate(["direct-dithered"])
    assert [pipeline.label for pipeline in pipelines] == ["direct-dithered/8"]
    assert not pipelines[0].selects_divisor

def test_no_methods_left(config: ExperimentConfig) -> None:
    """Test that dropping the only method is reported."""
    with pytest.raises(ConfigError) as exc_info:
        MethodFactory(replace(config, dither="off")).generate(["direct-dithered"])
    assert "No methods left to run for dither mode 'off'" in str(exc_info.value)

def test_invalid_method_lists(factory: MethodFactory) -> None:
    """Test rejection of empty and unknown method lists."""
    with pytest.raises(ConfigError) as exc_info:
        factory.generate([])
    assert "Method list must not be empty" in str(exc_info.value)
    with pytest.raises(ConfigError) as exc_info:
        factory.create("direct-magic")
    assert "Unknown method 'direct-magic'" in str(exc_info.value)
