import numpy as np
import pytest

from cran_positioning.fronthaul.links import fronthaul_round_trip
from cran_positioning.fronthaul.quantizer import (
    DitherSpec,
    UniformQuantizerSpec,
    levels_for_rate,
    quantize_component,
    reconstruct
)
from cran_positioning.scenario.signal import FreqObservation

@pytest.fixture
def three_levels() -> UniformQuantizerSpec:
    """Fixture for a 3-level quantizer on [-1, 1]."""
    return UniformQuantizerSpec(r_max=1.0, levels=3)

@pytest.fixture
def four_levels() -> UniformQuantizerSpec:
    """Fixture for a 4-level quantizer on [-1, 1]."""
    return UniformQuantizerSpec(r_max=1.0, levels=4)

def test_levels_for_rate() -> None:
    """Test the level count afforded by a fronthaul rate."""
    assert levels_for_rate(32.0, 8) == 4
    assert levels_for_rate(48.0, 8) == 8
    assert levels_for_rate(16.0, 8) == 2
    assert levels_for_rate(8.0, 8) == 2

def test_levels_for_rate_invalid() -> None:
    """Test that a non-positive rate is rejected."""
    with pytest.raises(ValueError) as exc_info:
        levels_for_rate(0.0, 8)
    assert "Fronthaul rate must be positive" in str(exc_info.value)

def test_quantizer_geometry(three_levels: UniformQuantizerSpec) -> None:
    """Test step, representation points and thresholds."""
    assert three_levels.step == pytest.approx(1.0)
    np.testing.assert_allclose(three_levels.representation_points(), [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(three_levels.thresholds(), [-0.5, 0.5])
    edges = three_levels.extended_thresholds()
    assert edges[0] == -np.inf and edges[-1] == np.inf

def test_quantizer_validation() -> None:
    """Test that invalid quantizers are rejected."""
    with pytest.raises(ValueError) as exc_info:
        UniformQuantizerSpec(r_max=1.0, levels=1)
    assert "at least 2 levels" in str(exc_info.value)
    with pytest.raises(ValueError) as exc_info:
        UniformQuantizerSpec(r_max=0.0, levels=4)
    assert "must be positive and finite" in str(exc_info.value)

def test_quantize_component_cells(three_levels: UniformQuantizerSpec) -> None:
    """Test level assignment inside, on and beyond the thresholds."""
    assert int(quantize_component(0.4, three_levels)) == 2
    assert int(quantize_component(0.5, three_levels)) == 2
    assert int(quantize_component(0.5000001, three_levels)) == 3
    assert int(quantize_component(-0.5, three_levels)) == 1
    assert int(quantize_component(100.0, three_levels)) == 3
    assert int(quantize_component(-100.0, three_levels)) == 1

def test_quantize_component_array(four_levels: UniformQuantizerSpec) -> None:
    """Test vectorized quantization keeps the input shape."""
    levels = quantize_component(np.array([[-0.9, -0.1], [0.1, 0.9]]), four_levels)
    assert levels.tolist() == [[1, 2], [3, 4]]

def test_quantize_component_rejects_non_finite(three_levels: UniformQuantizerSpec) -> None:
    """Test that non-finite inputs are rejected."""
    with pytest.raises(ValueError) as exc_info:
        quantize_component(np.array([0.0, np.nan]), three_levels)
    assert "must be finite" in str(exc_info.value)

def test_reconstruct(four_levels: UniformQuantizerSpec) -> None:
    """Test reconstruction at the representation points."""
    np.testing.assert_allclose(reconstruct(np.arange(1, 5), four_levels), four_levels.representation_points())

def test_reconstruct_out_of_range(four_levels: UniformQuantizerSpec) -> None:
    """Test that level indices outside 1..L are rejected."""
    with pytest.raises(ValueError) as exc_info:
        reconstruct(5, four_levels)
    assert "out of range 1..4" in str(exc_info.value)
    with pytest.raises(ValueError):
        reconstruct(0, four_levels)

def test_dither_half_width(four_levels: UniformQuantizerSpec) -> None:
    """Test the dither half-width for several divisors."""
    assert DitherSpec().half_width(four_levels) == pytest.approx(four_levels.step / 2)
    assert DitherSpec(divisor=4.0).half_width(four_levels) == pytest.approx(four_levels.step / 4)
    assert DitherSpec(enabled=False).half_width(four_levels) == 0.0
    with pytest.raises(ValueError) as exc_info:
        DitherSpec(divisor=0.0)
    assert "Dither divisor must be positive" in str(exc_info.value)

def test_round_trip_without_dither_is_exact_on_points(four_levels: UniformQuantizerSpec) -> None:
    """Test that representation points survive an undithered round trip."""
    points = four_levels.representation_points()
    matrix = (points[:, None] + 1j * points[None, ::-1]).astype(complex)
    quantized, recovered = fronthaul_round_trip(
        FreqObservation((matrix,)), four_levels, DitherSpec(enabled=False), np.random.default_rng(0)
    )
    assert quantized.dither is None
    assert quantized.levels[0].shape == (2, 4, 4)
    np.testing.assert_allclose(recovered.samples[0], matrix, atol=1e-12)

def test_round_trip_error_bound(four_levels: UniformQuantizerSpec) -> None:
    """Test that the dithered round-trip error stays within half a step inside the range."""
    rng = np.random.default_rng(3)
    matrix = rng.uniform(-0.5, 0.5, (8, 8)) + 1j * rng.uniform(-0.5, 0.5, (8, 8))
    quantized, recovered = fronthaul_round_trip(FreqObservation((matrix,)), four_levels, DitherSpec(), rng)
    assert quantized.dither is not None
    error = recovered.samples[0] - matrix
    bound = four_levels.step / 2 + 1e-12
    assert np.all(np.abs(error.real) <= bound)
    assert np.all(np.abs(error.imag) <= bound)

def test_subtractive_dither_removes_bias(four_levels: UniformQuantizerSpec) -> None:
    """Test that the dithered error has zero mean where plain quantization is biased."""
    matrix = np.full((100, 200), 0.3 + 0.3j)
    rng = np.random.default_rng(11)
    _, plain = fronthaul_round_trip(FreqObservation((matrix,)), four_levels, DitherSpec(enabled=False), rng)
    _, dithered = fronthaul_round_trip(FreqObservation((matrix,)), four_levels, DitherSpec(), rng)
    assert np.mean(plain.samples[0].real - 0.3) == pytest.approx(1 / 3 - 0.3)
    assert abs(np.mean(dithered.samples[0].real - 0.3)) < 0.01
    assert abs(np.mean(dithered.samples[0].imag - 0.3)) < 0.01

def test_round_trip_quantizer_count() -> None:
    """Test that a per-RU quantizer list must match the observation."""
    observation = FreqObservation((np.zeros((2, 2), dtype=complex), np.zeros((2, 2), dtype=complex)))
    with pytest.raises(ValueError) as exc_info:
        fronthaul_round_trip(
            observation, [UniformQuantizerSpec(1.0, 4)], DitherSpec(), np.random.default_rng(0)
        )
    assert "Got 1 quantizers for 2 radio units" in str(exc_info.value)
