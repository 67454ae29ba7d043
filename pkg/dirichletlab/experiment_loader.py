import json
import re
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .experiment import ExperimentConfig, format_validation_error
from .storage_providers import StorageProviderBase

PLACEHOLDER = re.compile(r"\$\{(\w+)\}")


class ConfigError(ValueError):
    """A config that cannot be read or validated; `lines` holds one message per problem."""

    def __init__(self, source: str, lines: List[str]):
        super().__init__(f"{source}: " + "; ".join(lines))
        self.source = source
        self.lines = lines


class ExperimentLoader:
    """
    Loads an experiment config from a storage provider.
    The provider can be memory, file system, or any custom implementation
    that implements the StorageProviderBase interface (list_files, download_file, etc).
    """
    def __init__(
        self,
        provider: StorageProviderBase,
        config_name: str = "experiment.json",
        placeholders: Optional[Dict[str, Any]] = None,
    ):
        """
        Args:
            provider: Storage provider instance (required)
            config_name: File name of the JSON config inside the provider
            placeholders: Dict of values for `${name}` tokens in string values
        """
        self._provider = provider
        self._config_name = config_name

        if not self._provider.list_files():
            raise ConfigError(config_name, ["experiment storage is empty"])

        content = self._provider.download_file(config_name)
        if content is None:
            raise ConfigError(config_name, [f"{config_name} not found in experiment storage"])
        try:
            document = json.loads(content.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            position = f"line {e.lineno} column {e.colno}: " if isinstance(e, json.JSONDecodeError) else ""
            raise ConfigError(config_name, [f"{position}{e}"])
        if not isinstance(document, dict):
            raise ConfigError(config_name, ["the config must be a JSON object"])

        if placeholders:
            document = self._fill_placeholders(document, placeholders)

        try:
            self._config = ExperimentConfig.model_validate(document)
        except ValidationError as e:
            raise ConfigError(config_name, format_validation_error(e))

    def _fill_placeholders(self, value: Any, placeholders: Dict[str, Any]) -> Any:
        """
        Replace `${name}` tokens recursively. A string that is exactly one
        token takes the placeholder value with its type; unknown names stay.
        """
        if isinstance(value, dict):
            return {key: self._fill_placeholders(item, placeholders) for key, item in value.items()}
        if isinstance(value, list):
            return [self._fill_placeholders(item, placeholders) for item in value]
        if not isinstance(value, str):
            return value
        whole = PLACEHOLDER.fullmatch(value)
        if whole and whole.group(1) in placeholders:
            return placeholders[whole.group(1)]
        return PLACEHOLDER.sub(
            lambda match: str(placeholders[match.group(1)]) if match.group(1) in placeholders else match.group(0),
            value,
        )

    def get_config(self) -> ExperimentConfig:
        """Get the validated experiment config."""
        return self._config
