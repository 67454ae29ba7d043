import json

import pytest

from dirichletlab.experiment import ExperimentConfig
from dirichletlab.experiment_loader import ConfigError, ExperimentLoader
from dirichletlab.forms import AnisotropicGraph
from dirichletlab.storage_providers import FileSystemProvider, MemoryProvider


def one_edge_config(**overrides):
    config = {
        "space": {"weights": [1.0, 1.0]},
        "form": {"family": "quadratic_graph", "edges": [[0, 1, 1.0]]},
        "seed": 1,
    }
    config.update(overrides)
    return config


def loader_for(document, **kwargs):
    text = document if isinstance(document, str) else json.dumps(document)
    return ExperimentLoader(MemoryProvider({"experiment.json": text}), **kwargs)


class TestExperimentLoader:
    """Test cases for ExperimentLoader."""

    def test_loads_valid_config(self):
        """Test a minimal config with defaults filled in."""
        # Act
        config = loader_for(one_edge_config()).get_config()

        # Assert
        assert config.seed == 1
        assert config.command.audit.budget == 500
        assert config.command.flow is None
        assert config.build_space().size == 2
        assert config.form == {"family": "quadratic_graph", "edges": [[0, 1, 1.0]]}

    def test_loads_from_file_system(self, temp_config_dir):
        """Test reading the config through a FileSystemProvider."""
        # Act
        config = ExperimentLoader(FileSystemProvider(temp_config_dir)).get_config()

        # Assert
        assert config.command.flow.steps == 64
        assert config.command.slopes.u == [0.0, 1.0]

    def test_empty_storage(self):
        """Test that an empty provider is an error."""
        # Act & Assert
        with pytest.raises(ConfigError, match="empty"):
            ExperimentLoader(MemoryProvider())

    def test_missing_config(self):
        """Test that the named config must exist."""
        # Arrange
        provider = MemoryProvider({"other.json": "{}"})

        # Act & Assert
        with pytest.raises(ConfigError, match="not found"):
            ExperimentLoader(provider, "experiment.json")

    def test_malformed_json_reports_position(self):
        """Test that JSON syntax errors carry a line and column."""
        # Act & Assert
        with pytest.raises(ConfigError) as excinfo:
            loader_for('{"space": {"size": 2},\n "form": }')
        assert excinfo.value.lines[0].startswith("line 2 column")

    def test_non_object_document(self):
        """Test that the top level must be an object."""
        # Act & Assert
        with pytest.raises(ConfigError, match="JSON object"):
            loader_for([1, 2, 3])

    def test_validation_lines_name_fields(self):
        """Test that each schema error is reported with its field path."""
        # Arrange
        document = one_edge_config(space={"weights": [1.0, 0.0]}, unknown=True)

        # Act & Assert
        with pytest.raises(ConfigError) as excinfo:
            loader_for(document)
        assert any(line.startswith("space.weights") and "weights[1]" in line for line in excinfo.value.lines)
        assert any(line.startswith("unknown") for line in excinfo.value.lines)

    def test_placeholders_keep_types(self):
        """Test that a whole-string token takes the placeholder value with its type."""
        # Arrange
        document = one_edge_config(
            form={"family": "anisotropic_graph", "edges": "${edges}"},
            command={"audit": {"budget": "${budget}"}},
            output_dir="runs/${name}",
        )
        placeholders = {"edges": [[0, 1, 1.0, 4.0]], "budget": 25, "name": "first"}

        # Act
        config = loader_for(document, placeholders=placeholders).get_config()

        # Assert
        assert isinstance(config.build_form(), AnisotropicGraph)
        assert config.command.audit.budget == 25
        assert config.output_dir == "runs/first"

    def test_unknown_placeholder_is_left_alone(self):
        """Test that tokens without a value stay in the string."""
        # Arrange
        document = one_edge_config(output_dir="runs/${missing}")

        # Act
        config = loader_for(document, placeholders={"other": 1}).get_config()

        # Assert
        assert config.output_dir == "runs/${missing}"


class TestExperimentConfig:
    """Test cases for the experiment schema."""

    def test_custom_family_rejected(self):
        """Test that callable-backed forms cannot come from a config."""
        # Act & Assert
        with pytest.raises(ValueError, match="custom"):
            ExperimentConfig.model_validate(one_edge_config(form={"family": "custom", "size": 2}))

    def test_unknown_family_lists_available(self):
        """Test that an unknown family tag names the registered ones."""
        # Act & Assert
        with pytest.raises(ValueError, match="Available families"):
            ExperimentConfig.model_validate(one_edge_config(form={"family": "cubic_graph"}))

    def test_form_must_fit_space(self):
        """Test that the form may only read points of the space."""
        # Arrange
        document = one_edge_config(form={"family": "quadratic_graph", "edges": [[0, 3, 1.0]]})

        # Act & Assert
        with pytest.raises(ValueError, match="form reads 4 points but the space has 2"):
            ExperimentConfig.model_validate(document)

    def test_space_needs_size_or_weights(self):
        """Test that an empty space spec is rejected."""
        # Act & Assert
        with pytest.raises(ValueError, match="size or a list of weights"):
            ExperimentConfig.model_validate(one_edge_config(space={}))

    def test_slopes_need_both_fields(self):
        """Test that u without v is rejected."""
        # Arrange
        document = one_edge_config(command={"slopes": {"u": [0.0, 1.0]}})

        # Act & Assert
        with pytest.raises(ValueError, match="together"):
            ExperimentConfig.model_validate(document)

    def test_solver_settings_precedence(self):
        """Test defaults, then config tolerances, then explicit overrides."""
        # Arrange
        config = ExperimentConfig.model_validate(one_edge_config(tolerances={"tol": 1e-6, "max_iters": 50}))

        # Act
        from_config = config.solver_settings()
        overridden = config.solver_settings(tol=1e-9)

        # Assert
        assert from_config.tol == 1e-6
        assert from_config.max_iters == 50
        assert overridden.tol == 1e-9
        assert overridden.max_iters == 50

    def test_expected_labels(self):
        """Test that a single expectation becomes a one-element list."""
        # Act
        single = ExperimentConfig.model_validate(one_edge_config(expect="not-dirichlet"))
        several = ExperimentConfig.model_validate(one_edge_config(expect=["symmetric", "quadratic"]))

        # Assert
        assert single.expected_labels() == ["not-dirichlet"]
        assert several.expected_labels() == ["symmetric", "quadratic"]
