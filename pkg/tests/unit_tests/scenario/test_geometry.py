import math
import numpy as np
import pytest

from cran_positioning.scenario.geometry import (
    Position,
    Region,
    bearing,
    distance,
    lattice_bearings,
    lattice_distances,
    propagation_delay,
    steering_matrix,
    steering_vector
)

WAVELENGTH = 3e8 / 900e6

@pytest.fixture
def region() -> Region:
    """Fixture for the reference source region."""
    return Region(500.0, 3500.0, 500.0, 3500.0)

def test_distance_examples() -> None:
    """Test distances of known point pairs."""
    assert distance(Position(0, 0), Position(3, 4)) == 5.0
    assert distance(Position(7, -2), Position(7, -2)) == 0.0
    assert distance(Position(0, 0), Position(2000, 2000)) == pytest.approx(2828.42712474619, rel=1e-12)

def test_distance_is_symmetric() -> None:
    """Test that distance does not depend on argument order."""
    first, second = Position(120.5, -33.0), Position(-4.0, 910.25)
    assert distance(first, second) == distance(second, first)

def test_bearing_examples() -> None:
    """Test bearings in several quadrants."""
    origin = Position(0, 0)
    assert bearing(Position(1, 1), origin) == pytest.approx(math.pi / 4)
    assert bearing(Position(0, 5), origin) == pytest.approx(math.pi / 2)
    assert bearing(Position(-1, 0), origin) == pytest.approx(math.pi)
    assert bearing(Position(0, -1), origin) == pytest.approx(-math.pi / 2)

def test_bearing_coincident_points() -> None:
    """Test that the bearing of coincident points is rejected."""
    with pytest.raises(ValueError) as exc_info:
        bearing(Position(3, 4), Position(3, 4))
    assert "Bearing is undefined" in str(exc_info.value)

def test_propagation_delay() -> None:
    """Test conversion of distance to delay."""
    assert propagation_delay(Position(750, 0), Position(0, 0), 3e8) == pytest.approx(2.5e-6)
    assert propagation_delay(Position(2000, 2000), Position(0, 0), 3e8) == pytest.approx(2828.42712474619 / 3e8)

def test_propagation_delay_invalid_speed() -> None:
    """Test that a non-positive propagation speed is rejected."""
    with pytest.raises(ValueError) as exc_info:
        propagation_delay(Position(1, 0), Position(0, 0), 0.0)
    assert "Propagation speed must be positive" in str(exc_info.value)

def test_steering_vector_single_antenna() -> None:
    """Test that a one-element array responds with 1 at every angle."""
    for angle in (0.0, 0.3, math.pi / 2, 2.5):
        np.testing.assert_allclose(steering_vector(angle, 1, WAVELENGTH / 2, WAVELENGTH), [1.0])

def test_steering_vector_broadside() -> None:
    """Test that a broadside source gives equal phases on all elements."""
    response = steering_vector(math.pi / 2, 8, WAVELENGTH / 2, WAVELENGTH)
    np.testing.assert_allclose(response, np.full(8, 1 / math.sqrt(8)), atol=1e-12)

def test_steering_vector_endfire_half_wavelength() -> None:
    """Test the alternating response of a half-wavelength pair at end-fire."""
    response = steering_vector(0.0, 2, WAVELENGTH / 2, WAVELENGTH)
    np.testing.assert_allclose(response, np.array([1.0, -1.0]) / math.sqrt(2), atol=1e-12)

def test_steering_vector_unit_norm() -> None:
    """Test that steering vectors have unit norm."""
    for angle in np.linspace(-math.pi, math.pi, 13):
        assert np.linalg.norm(steering_vector(angle, 8, WAVELENGTH / 2, WAVELENGTH)) == pytest.approx(1.0)

def test_steering_vector_depends_on_cosine_only() -> None:
    """Test that mirrored angles give the same response."""
    np.testing.assert_allclose(
        steering_vector(0.7, 8, WAVELENGTH / 2, WAVELENGTH),
        steering_vector(-0.7, 8, WAVELENGTH / 2, WAVELENGTH)
    )

def test_steering_vector_no_antennas() -> None:
    """Test that an empty array is rejected."""
    with pytest.raises(ValueError) as exc_info:
        steering_vector(0.0, 0, WAVELENGTH / 2, WAVELENGTH)
    assert "at least one antenna" in str(exc_info.value)

def test_steering_matrix_rows_match_vectors() -> None:
    """Test that the batched steering matrix agrees with single vectors."""
    angles = np.array([0.1, 1.2, 2.9])
    matrix = steering_matrix(angles, 4, WAVELENGTH / 2, WAVELENGTH)
    assert matrix.shape == (3, 4)
    for row, angle in zip(matrix, angles):
        np.testing.assert_allclose(row, steering_vector(float(angle), 4, WAVELENGTH / 2, WAVELENGTH))

def test_lattice_helpers_match_scalar_versions() -> None:
    """Test lattice distances and bearings against the scalar functions."""
    reference = Position(4000.0, 0.0)
    points = np.array([[500.0, 500.0], [3500.0, 3500.0], [1000.0, 2200.0]])
    expected_distances = [distance(Position(*point), reference) for point in points]
    expected_bearings = [bearing(Position(*point), reference) for point in points]
    np.testing.assert_allclose(lattice_distances(points, reference), expected_distances)
    np.testing.assert_allclose(lattice_bearings(points, reference), expected_bearings)

def test_position_rejects_non_finite() -> None:
    """Test that positions must be finite."""
    with pytest.raises(ValueError) as exc_info:
        Position(float("nan"), 0.0)
    assert "must be finite" in str(exc_info.value)

def test_position_array_conversion() -> None:
    """Test conversion between positions and arrays."""
    position = Position(12.5, -3.0)
    assert Position.from_array(position.as_array()) == position

def test_region_rejects_empty_area() -> None:
    """Test that a region needs positive area."""
    with pytest.raises(ValueError) as exc_info:
        Region(0.0, 0.0, 0.0, 10.0)
    assert "positive area" in str(exc_info.value)

def test_region_contains_and_clip(region: Region) -> None:
    """Test membership and clipping to the region."""
    assert region.contains(Position(500.0, 3500.0))
    assert not region.contains(Position(499.0, 1000.0))
    assert region.clip(Position(0.0, 5000.0)) == Position(500.0, 3500.0)
    assert region.center == Position(2000.0, 2000.0)

def test_region_sample_uniform(region: Region) -> None:
    """Test that uniform samples stay inside the region."""
    rng = np.random.default_rng(7)
    samples = [region.sample_uniform(rng) for _ in range(500)]
    assert all(region.contains(sample) for sample in samples)
    assert np.mean([sample.x for sample in samples]) == pytest.approx(2000.0, rel=0.1)
