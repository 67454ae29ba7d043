import math

import numpy as np
import pytest

from dirichletlab.semigroup import FlowFailure, exact_quadratic_flow, flow, markov_probe
from dirichletlab.solver_settings import SolverSettings
from dirichletlab.space import MeasureSpace, m_norm


class TestExactQuadraticFlow:
    """Test cases for the spectral reference semigroup."""

    def test_one_edge_decay(self, one_edge, pair_space):
        """Test T_t(1, -1) = (e^-1, -e^-1) at t = 0.25."""
        # Act
        state = exact_quadratic_flow(one_edge.quadratic_matrix(2), [1.0, -1.0], 0.25, pair_space)

        # Assert
        np.testing.assert_allclose(state, [math.exp(-1.0), -math.exp(-1.0)], atol=1e-12)

    def test_constants_are_invariant(self, quadratic_path, weighted_space):
        """Test that the kernel of Q is not damped."""
        # Act
        state = exact_quadratic_flow(quadratic_path.quadratic_matrix(4), np.full(4, 3.0), 5.0, weighted_space)

        # Assert
        np.testing.assert_allclose(state, np.full(4, 3.0), atol=1e-10)

    def test_rejects_non_symmetric(self, pair_space):
        """Test that Q must be symmetric."""
        # Act & Assert
        with pytest.raises(ValueError, match="symmetric"):
            exact_quadratic_flow([[1.0, 0.0], [1.0, 1.0]], [1.0, 0.0], 1.0, pair_space)

    def test_rejects_size_mismatch(self, path_space):
        """Test that Q must match the space."""
        # Act & Assert
        with pytest.raises(ValueError, match="3 points"):
            exact_quadratic_flow(np.eye(2), [1.0, 0.0], 1.0, path_space)


class TestFlow:
    """Test cases for the implicit Euler flow."""

    def test_converges_to_exact_flow(self, one_edge, pair_space):
        """Test first-order convergence: the error halves each time the step count doubles."""
        # Arrange
        exact = exact_quadratic_flow(one_edge.quadratic_matrix(2), [1.0, -1.0], 0.25, pair_space)

        # Act
        errors = [m_norm(flow(one_edge, [1.0, -1.0], 0.25, steps, pair_space).final - exact, pair_space)
                  for steps in (64, 128, 256, 512, 1024)]

        # Assert
        assert errors[-1] < 1e-3
        ratios = [coarse / fine for coarse, fine in zip(errors, errors[1:])]
        assert ratios == pytest.approx([2.0] * 4, rel=0.05)

    def test_trajectory_shape(self, anisotropic_path, weighted_space, rng):
        """Test times, states and residuals of a short run."""
        # Act
        trajectory = flow(anisotropic_path, rng.standard_normal(4), 1.0, 8, weighted_space)

        # Assert
        assert len(trajectory.times) == 9
        assert trajectory.times[-1] == 1.0
        assert trajectory.step == pytest.approx(0.125)
        assert len(trajectory.states) == 9
        assert len(trajectory.residuals) == 8
        assert trajectory.dissipation_defect() <= 1e-12

    def test_zero_time(self, tv_path, path_space):
        """Test that t_final = 0 returns the initial state only."""
        # Act
        trajectory = flow(tv_path, [0.0, 0.0, 1.0], 0.0, 10, path_space)

        # Assert
        assert trajectory.times == (0.0,)
        np.testing.assert_array_equal(trajectory.final, [0.0, 0.0, 1.0])

    def test_mass_is_conserved(self, tv_path, path_space):
        """Test that the flow of a constant-invariant form keeps sum_i m_i u_i."""
        # Act
        trajectory = flow(tv_path, [0.0, 0.0, 1.0], 0.5, 10, path_space)

        # Assert
        for state in trajectory.states:
            assert float(np.sum(state)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("steps", [0, -3, 2.5])
    def test_rejects_bad_steps(self, one_edge, pair_space, steps):
        """Test that steps must be a positive integer."""
        # Act & Assert
        with pytest.raises(ValueError, match="steps"):
            flow(one_edge, [1.0, 0.0], 1.0, steps, pair_space)

    def test_failure_keeps_partial_trajectory(self, power_path):
        """Test that a failing resolvent step reports the states computed so far."""
        # Arrange
        space = MeasureSpace.uniform(4)
        cfg = SolverSettings(max_iters=1)

        # Act & Assert
        with pytest.raises(FlowFailure) as excinfo:
            flow(power_path, [3.0, -1.0, 2.0, -4.0], 1.0, 4, space, cfg)
        assert excinfo.value.trajectory.times[0] == 0.0
        assert excinfo.value.cause is not None

    def test_csv_rows(self, one_edge, pair_space):
        """Test one row per time and point."""
        # Act
        rows = flow(one_edge, [1.0, -1.0], 0.5, 2, pair_space).csv_rows()

        # Assert
        assert len(rows) == 6
        assert rows[0] == (0.0, 0, 1.0)


class TestMarkovChecks:
    """Test cases for the L^p contraction and order checks."""

    def test_quadratic_graph_is_markovian(self, quadratic_path, weighted_space):
        """Test that a graph Laplacian flow contracts in every L^p and keeps order."""
        # Arrange
        pairs = [
            (np.array([1.0, -2.0, 0.5, 3.0]), np.array([0.0, 1.0, 0.5, -1.0])),
            (np.array([0.0, 0.0, 4.0, 0.0]), np.array([1.0, 1.0, 1.0, 1.0])),
            (np.array([2.0, 1.0, 0.0, 1.0]), np.array([1.0, 1.0, -1.0, 0.0])),
        ]

        # Act
        records = markov_probe(quadratic_path, pairs, (0.1, 1.0), space=weighted_space)

        # Assert
        names = [record.name for record in records]
        assert names == ["lp_contraction_p1", "lp_contraction_p2", "lp_contraction_pinf", "order_preservation"]
        assert all(record.passed for record in records)
        assert records[-1].samples == 2

    def test_sum_squared_breaks_order(self, sum_squared, pair_space):
        """Test that the (u_0 + u_1)^2 flow pushes an ordered pair out of order."""
        # Arrange
        pairs = [(np.array([1.0, 0.0]), np.zeros(2))]

        # Act
        records = markov_probe(sum_squared, pairs, (0.1, 1.0), space=pair_space)

        # Assert
        order = records[-1]
        assert order.name == "order_preservation"
        assert not order.passed
        assert order.counterexample["u"] == [1.0, 0.0]

    def test_notes_missing_ordered_pairs(self, one_edge, pair_space):
        """Test the note when no pair is ordered."""
        # Arrange
        pairs = [(np.array([1.0, -1.0]), np.array([-1.0, 1.0]))]

        # Act
        records = markov_probe(one_edge, pairs, (0.5,), space=pair_space)

        # Assert
        assert records[-1].samples == 0
        assert records[-1].notes == ["no ordered pairs were supplied"]

    def test_requires_space(self, one_edge):
        """Test that the measure space is mandatory."""
        # Act & Assert
        with pytest.raises(ValueError, match="measure space"):
            markov_probe(one_edge, [(np.zeros(2), np.zeros(2))], (1.0,))
