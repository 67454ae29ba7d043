import math

import numpy as np
import pytest

from dirichletlab.forms import CustomForm
from dirichletlab.prox_engine import (NevilleTableau, ProxFailure, envelope, geometric_limit, minimal_subgradient, prox,
                                      yosida, yosida_path)
from dirichletlab.solver_settings import SolverSettings
from dirichletlab.space import MeasureSpace, inner, m_norm


class TestSolverSettings:
    """Test cases for SolverSettings."""

    def test_default_schedule(self):
        """Test the geometric lambda schedule from 1e-1 down to 1e-6."""
        # Act
        schedule = SolverSettings().lambda_schedule()

        # Assert
        assert schedule[0] == pytest.approx(0.1)
        assert len(schedule) == 17
        assert schedule[-1] >= 1e-6
        assert all(b < a for a, b in zip(schedule, schedule[1:]))

    def test_rejects_inverted_schedule(self):
        """Test that lambda_min must lie below lambda_max."""
        # Act & Assert
        with pytest.raises(ValueError, match="lambda_min"):
            SolverSettings(lambda_min=1.0, lambda_max=0.1)

    def test_with_overrides_skips_none(self, settings):
        """Test that None overrides keep the current value."""
        # Act
        updated = settings.with_overrides(tol=1e-6, max_iters=None)

        # Assert
        assert updated.tol == 1e-6
        assert updated.max_iters == settings.max_iters


class TestProxLinear:
    """Test cases for the direct solver on quadratic forms."""

    def test_yosida_on_one_edge(self, one_edge, pair_space):
        """Test A_lambda(1, -1) = (2, -2) at lambda = 0.25."""
        # Act
        result = yosida(one_edge, np.array([1.0, -1.0]), 0.25, pair_space)

        # Assert
        np.testing.assert_allclose(result, [2.0, -2.0], atol=1e-12)

    def test_prox_is_linear_solve(self, quadratic_path, weighted_space, rng):
        """Test (M + 2 lambda Q) prox(u) = M u on weighted atoms."""
        # Arrange
        u = rng.standard_normal(4)
        lam = 0.3

        # Act
        result = prox(quadratic_path, u, lam, weighted_space)

        # Assert
        system = np.diag(weighted_space.mass) + 2 * lam * quadratic_path.quadratic_matrix(4)
        np.testing.assert_allclose(system @ result.minimizer, weighted_space.mass * u, atol=1e-10)
        assert result.strategy == "linear"
        assert result.residual <= 1e-8

    def test_prox_nonexpansive(self, quadratic_path, weighted_space, rng):
        """Test ||prox u - prox v||_m <= ||u - v||_m."""
        # Arrange
        pairs = [(rng.standard_normal(4), rng.standard_normal(4)) for _ in range(20)]

        # Act & Assert
        for u, v in pairs:
            pu = prox(quadratic_path, u, 0.5, weighted_space).minimizer
            pv = prox(quadratic_path, v, 0.5, weighted_space).minimizer
            assert m_norm(pu - pv, weighted_space) <= m_norm(u - v, weighted_space) + 1e-8

    def test_prox_of_zero(self, quadratic_path, weighted_space):
        """Test prox(0) = 0."""
        # Act
        result = prox(quadratic_path, np.zeros(4), 1.0, weighted_space)

        # Assert
        np.testing.assert_array_equal(result.minimizer, np.zeros(4))
        assert result.envelope == 0.0


class TestProxNewton:
    """Test cases for damped Newton on C^1 forms."""

    def test_anisotropic_stationarity(self, anisotropic_path, weighted_space, rng):
        """Test grad E(v) + M (v - u) / lambda = 0 at the minimiser."""
        # Arrange
        u = 2.0 * rng.standard_normal(4)
        lam = 0.2

        # Act
        result = prox(anisotropic_path, u, lam, weighted_space)

        # Assert
        v = np.asarray(result.minimizer)
        stationarity = anisotropic_path.euclidean_gradient(v) + weighted_space.mass * (v - u) / lam
        np.testing.assert_allclose(stationarity, 0.0, atol=1e-6)
        assert result.strategy == "newton"

    def test_prox_minimises(self, power_path, rng):
        """Test that random perturbations never lower the Moreau objective."""
        # Arrange
        space = MeasureSpace.uniform(4)
        u = rng.standard_normal(4)
        lam = 0.5
        result = prox(power_path, u, lam, space)

        def objective(v):
            return power_path.evaluate(v) + m_norm(v - u, space) ** 2 / (2 * lam)

        # Act & Assert
        for _ in range(20):
            perturbed = result.minimizer + 1e-3 * rng.standard_normal(4)
            assert objective(perturbed) >= result.envelope - 1e-12

    def test_iteration_limit_raises(self, power_path, rng):
        """Test that a single iteration is not enough and the best iterate is kept."""
        # Arrange
        space = MeasureSpace.uniform(4)
        cfg = SolverSettings(max_iters=1)
        u = np.array([3.0, -1.0, 2.0, -4.0])

        # Act & Assert
        with pytest.raises(ProxFailure) as excinfo:
            prox(power_path, u, 1.0, space, cfg)
        assert excinfo.value.best.shape == (4,)
        assert excinfo.value.residual > cfg.tol


class TestProxSplit:
    """Test cases for the squared total variation solver."""

    def test_certified_by_gap(self, tv_path, path_space):
        """Test that the split solver reports a small duality gap."""
        # Act
        result = prox(tv_path, np.array([0.0, 0.0, 1.0]), 0.1, path_space)

        # Assert
        assert result.strategy == "split"
        assert result.gap is not None
        assert result.gap <= 1e-10

    def test_two_homogeneous_scaling(self, tv_path, path_space):
        """Test prox(c u) = c prox(u) for c > 0."""
        # Arrange
        u = np.array([0.5, -1.0, 2.0])

        # Act
        base = prox(tv_path, u, 0.2, path_space).minimizer
        scaled = prox(tv_path, 3.0 * u, 0.2, path_space).minimizer

        # Assert
        np.testing.assert_allclose(scaled, 3.0 * base, atol=1e-7)

    def test_constant_field_is_fixed(self, tv_path, path_space):
        """Test that constants have zero energy and are fixed points."""
        # Act
        result = prox(tv_path, np.full(3, 2.0), 1.0, path_space)

        # Assert
        np.testing.assert_array_equal(result.minimizer, np.full(3, 2.0))
        assert result.gap == 0.0


class TestProxArguments:
    """Test cases for argument validation."""

    @pytest.mark.parametrize("lam", [0.0, -1.0, math.inf])
    def test_rejects_bad_lambda(self, one_edge, pair_space, lam):
        """Test that lambda must be a finite positive real."""
        # Act & Assert
        with pytest.raises(ValueError, match="lambda"):
            prox(one_edge, np.zeros(2), lam, pair_space)

    def test_custom_form_has_no_solver(self, pair_space):
        """Test that forms without a strategy are refused."""
        # Arrange
        form = CustomForm(energy_fn=lambda u: float(u @ u), size=2)

        # Act & Assert
        with pytest.raises(ValueError, match="No prox solver"):
            prox(form, np.zeros(2), 1.0, pair_space)

    def test_yosida_path_requires_decreasing_schedule(self, one_edge, pair_space):
        """Test that the schedule must strictly decrease."""
        # Act & Assert
        with pytest.raises(ValueError, match="strictly decreasing"):
            yosida_path(one_edge, np.zeros(2), pair_space, lambda_schedule=[0.1, 0.2])


class TestEnvelope:
    """Test cases for the Moreau-Yosida envelope."""

    def test_envelope_below_energy_and_increasing(self, anisotropic_path, weighted_space, rng):
        """Test E_lambda(u) <= E(u) and that E_lambda grows as lambda shrinks."""
        # Arrange
        u = rng.standard_normal(4)

        # Act
        values = [envelope(anisotropic_path, u, lam, weighted_space) for lam in (1.0, 0.1, 0.01)]

        # Assert
        assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12
        assert values[2] <= anisotropic_path.evaluate(u) + 1e-12


class TestMinimalSubgradient:
    """Test cases for the extrapolated Yosida limit."""

    def test_quadratic_gradient(self, one_edge, pair_space):
        """Test that the limit is 2 M^-1 Q u for a quadratic form."""
        # Act
        xi = minimal_subgradient(one_edge, np.array([1.0, -1.0]), pair_space)

        # Assert
        np.testing.assert_allclose(xi, [4.0, -4.0], atol=1e-6)

    def test_total_variation_kink(self, tv_path, path_space):
        """Test the minimal subgradient (-1, -1, 2) of the squared TV at u = (0, 0, 1)."""
        # Act
        xi = minimal_subgradient(tv_path, np.array([0.0, 0.0, 1.0]), path_space)

        # Assert
        np.testing.assert_allclose(xi, [-1.0, -1.0, 2.0], atol=1e-6)

    def test_weighted_gradient(self, anisotropic_path, weighted_space, rng):
        """Test that a C^1 form's limit is its L^2(m) gradient."""
        # Arrange
        u = rng.standard_normal(4)

        # Act
        xi = minimal_subgradient(anisotropic_path, u, weighted_space)

        # Assert
        expected = anisotropic_path.euclidean_gradient(u) / weighted_space.mass
        np.testing.assert_allclose(xi, expected, rtol=1e-5, atol=1e-6)

    def test_power_form_at_flat_edges(self, power_path, weighted_space):
        """Test the q = 1.5 form where two edge differences vanish and Yosida values converge like sqrt(lambda)."""
        # Arrange
        u = np.array([0.0, 0.0, 1.0, 1.0])

        # Act
        xi = minimal_subgradient(power_path, u, weighted_space)

        # Assert
        np.testing.assert_allclose(xi, [0.0, -1.0, 4.0, 0.0], atol=1e-4)
        assert inner(xi, u, weighted_space) == pytest.approx(2.0 * power_path.evaluate(u), rel=1e-4)

    def test_result_is_read_only(self, one_edge, pair_space):
        """Test that the returned subgradient cannot be mutated."""
        # Act
        xi = minimal_subgradient(one_edge, np.array([1.0, -1.0]), pair_space)

        # Assert
        with pytest.raises(ValueError):
            xi[0] = 0.0


class TestGeometricLimit:
    """Test cases for the Aitken limit of geometrically converging values."""

    def test_fractional_rate_is_removed(self):
        """Test that 1 + sqrt(lambda) on a halving schedule extrapolates to 1."""
        # Arrange
        values = [1.0 + math.sqrt(0.1 * 0.5 ** k) for k in range(3)]

        # Act
        limit = geometric_limit(values)

        # Assert
        assert limit == pytest.approx(1.0, abs=1e-12)

    def test_vector_values(self):
        """Test the limit of field-valued sequences."""
        # Arrange
        target = np.array([0.0, -1.0, 4.0])
        direction = np.array([1.0, 2.0, -1.0])
        values = [target + 0.3 ** k * direction for k in range(4)]

        # Act
        limit = geometric_limit(values)

        # Assert
        np.testing.assert_allclose(limit, target, atol=1e-12)

    def test_needs_three_values(self):
        """Test that fewer than three values give no limit."""
        # Act & Assert
        assert geometric_limit([1.0, 0.5]) is None

    def test_stalled_or_growing_values(self):
        """Test that constant or diverging values give no limit."""
        # Act & Assert
        assert geometric_limit([2.0, 2.0, 2.0]) is None
        assert geometric_limit([1.0, 2.0, 4.0]) is None


class TestNevilleTableau:
    """Test cases for polynomial extrapolation to zero."""

    def test_linear_data_is_exact(self):
        """Test that values a + b lambda extrapolate to a after two entries."""
        # Arrange
        tableau = NevilleTableau()

        # Act
        tableau.add(0.1, 1.0 + 2.0 * 0.1)
        estimate = tableau.add(0.05, 1.0 + 2.0 * 0.05)

        # Assert
        assert estimate == pytest.approx(1.0)
