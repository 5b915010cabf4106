import numpy as np
import pytest

from cran_positioning.fronthaul.weights import effective_weights, ideal_weights
from tests.conftest import ScenarioFactory

def test_effective_weights_formula(scenario_factory: ScenarioFactory) -> None:
    """Test gamma^2 against the closed form at B/M = 4."""
    scenario = scenario_factory(noise_power=0.5, fronthaul_bits=32.0)
    weights = effective_weights(scenario)
    spectrum_power = 1.0 / 8
    expected = 0.5 + (spectrum_power + 0.5) / (2.0 ** 4 - 1)
    assert weights.gamma_squared.shape == (4, 8)
    np.testing.assert_allclose(weights.for_unit(2), np.full(8, expected))

def test_effective_weights_one_bit_per_antenna(scenario_factory: ScenarioFactory) -> None:
    """Test that one bit per antenna adds the whole received power as noise."""
    scenario = scenario_factory(noise_power=0.25, fronthaul_bits=8.0)
    expected = 0.25 + (1.0 / 8 + 0.25)
    np.testing.assert_allclose(effective_weights(scenario).for_unit(0), np.full(8, expected))

def test_effective_weights_approach_noise(scenario_factory: ScenarioFactory) -> None:
    """Test that gamma^2 tends to sigma^2 as the rate grows."""
    scenario = scenario_factory(noise_power=0.1, fronthaul_bits=8.0 * 40)
    np.testing.assert_allclose(effective_weights(scenario).gamma_squared, 0.1, rtol=1e-9)

def test_effective_weights_decrease_with_rate(scenario_factory: ScenarioFactory) -> None:
    """Test that more fronthaul bits never increase the effective noise."""
    values = [
        effective_weights(scenario_factory(fronthaul_bits=bits)).gamma_squared[0, 0]
        for bits in (8.0, 16.0, 32.0, 64.0)
    ]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))

def test_ideal_weights(scenario_factory: ScenarioFactory) -> None:
    """Test that ideal weights equal the channel noise power."""
    scenario = scenario_factory(noise_power=0.3).with_noise_powers([0.3, 0.3, 0.3, 0.6])
    weights = ideal_weights(scenario)
    np.testing.assert_allclose(weights.for_unit(0), np.full(8, 0.3))
    np.testing.assert_allclose(weights.for_unit(3), np.full(8, 0.6))
    assert weights.gamma_squared.shape == (4, 8)

def test_effective_weights_respect_per_unit_rates(scenario_factory: ScenarioFactory) -> None:
    """Test that an RU with twice the rate gets a smaller gamma^2."""
    scenario = scenario_factory(fronthaul_bits=16.0).with_fronthaul_bits([16.0, 16.0, 16.0, 32.0])
    gamma = effective_weights(scenario).gamma_squared
    assert gamma[3, 0] < gamma[0, 0]
    assert gamma[0, 0] == pytest.approx(gamma[1, 0])
