import numpy as np
import pytest

from dirichletlab.contractions import LipschitzMap, NormalContraction, apply_contraction, random_pool


class TestNormalContraction:
    """Test cases for NormalContraction."""

    def test_canonical_members(self):
        """Test the five canonical maps on a few values."""
        # Arrange
        t = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        expected = {
            "identity": [-2.0, -0.5, 0.0, 0.5, 2.0],
            "negation": [2.0, 0.5, 0.0, -0.5, -2.0],
            "unit-clamp": [0.0, 0.0, 0.0, 0.5, 1.0],
            "absolute": [2.0, 0.5, 0.0, 0.5, 2.0],
            "positive-part": [0.0, 0.0, 0.0, 0.5, 2.0],
        }

        # Act & Assert
        for phi in NormalContraction.canonical():
            np.testing.assert_allclose(phi(t), expected[phi.label])

    def test_rejects_steep_slope(self):
        """Test that slopes outside [-1, 1] are rejected."""
        # Act & Assert
        with pytest.raises(ValueError, match="outside"):
            NormalContraction((0.0,), (1.0, 1.5))

    def test_rejects_missing_origin(self):
        """Test that 0 must be a breakpoint."""
        # Act & Assert
        with pytest.raises(ValueError, match="contain 0"):
            NormalContraction((1.0,), (1.0, 1.0))

    def test_rejects_unsorted_breakpoints(self):
        """Test that breakpoints must increase strictly."""
        # Act & Assert
        with pytest.raises(ValueError, match="strictly increasing"):
            NormalContraction((0.0, 0.0), (1.0, 1.0, 1.0))

    def test_random_members_fix_origin_and_are_contractions(self, rng):
        """Test phi(0) = 0 and the 1-Lipschitz bound on random members."""
        # Arrange
        maps = [NormalContraction.random(rng) for _ in range(50)]

        # Act & Assert
        for phi in maps:
            assert phi(0.0) == 0.0
            assert phi.lipschitz <= 1.0
            assert phi.lipschitz_excess(rng, n_samples=500) <= 1e-12

    def test_random_pool_starts_with_canonical(self, rng):
        """Test that the pool lists the canonical maps first."""
        # Act
        pool = random_pool(rng, 3)

        # Assert
        assert len(pool) == 8
        assert [phi.label for phi in pool[:5]] == ["identity", "negation", "unit-clamp", "absolute", "positive-part"]


class TestLipschitzMap:
    """Test cases for general Lipschitz maps."""

    def test_scaled_map(self):
        """Test that scaling multiplies values and the Lipschitz constant."""
        # Arrange
        phi = NormalContraction.absolute()

        # Act
        scaled = phi.scaled(2.0)

        # Assert
        assert isinstance(scaled, LipschitzMap)
        assert scaled.lipschitz == 2.0
        np.testing.assert_allclose(scaled(np.array([-1.0, 3.0])), [2.0, 6.0])

    def test_describe_round_trip(self):
        """Test that describe() holds enough to rebuild the map."""
        # Arrange
        phi = NormalContraction((-1.0, 0.0, 2.0), (0.5, -1.0, 0.25, 1.0), label="sample")

        # Act
        data = phi.describe()
        rebuilt = LipschitzMap(tuple(data["breakpoints"]), tuple(data["slopes"]), data["label"])

        # Assert
        t = np.linspace(-4.0, 4.0, 33)
        np.testing.assert_array_equal(rebuilt(t), phi(t))

    def test_piecewise_values(self):
        """Test values on each interval of a three-piece map."""
        # Arrange
        phi = NormalContraction((-1.0, 0.0, 1.0), (0.0, 1.0, -1.0, 0.5))

        # Act
        values = apply_contraction(phi, np.array([-3.0, -1.0, -0.5, 0.5, 1.0, 3.0]))

        # Assert
        np.testing.assert_allclose(values, [-1.0, -1.0, -0.5, -0.5, -1.0, 0.0])
