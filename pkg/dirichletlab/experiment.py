"""
Experiment configuration: the strict schema behind every CLI command.

An experiment names a measure space, a form descriptor (family tag plus
parameters) and per-command parameters. Unknown keys are rejected at every
level so a misspelled field never silently falls back to a default.
"""
import math
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .form_registry import create_form
from .forms.base import EnergyForm
from .solver_settings import SolverSettings
from .space import MeasureSpace


def format_validation_error(error: ValidationError) -> List[str]:
    """One `field.path: message` line per pydantic error."""
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return lines


class SpaceSpec(BaseModel):
    """Either explicit weights, or a size for the uniform space with unit weights."""
    model_config = ConfigDict(extra="forbid")

    size: Optional[int] = Field(default=None, ge=1)
    weights: Optional[List[float]] = None

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, weights: Optional[List[float]]) -> Optional[List[float]]:
        if weights is None:
            return weights
        if not weights:
            raise ValueError("weights must not be empty")
        for index, weight in enumerate(weights):
            if not math.isfinite(weight) or weight <= 0:
                raise ValueError(f"weights[{index}] must be a finite positive real, got {weight}")
        return weights

    @model_validator(mode="after")
    def _size_matches(self):
        if self.size is None and self.weights is None:
            raise ValueError("give the space a size or a list of weights")
        if self.size is not None and self.weights is not None and self.size != len(self.weights):
            raise ValueError(f"size is {self.size} but {len(self.weights)} weights were given")
        return self

    def build(self) -> MeasureSpace:
        if self.weights is not None:
            return MeasureSpace(tuple(self.weights))
        return MeasureSpace.uniform(self.size)


class AuditSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    budget: int = Field(default=500, ge=1)
    t_grid: List[float] = Field(default_factory=lambda: [0.01, 0.1, 1.0])
    max_step: float = Field(default=0.05, gt=0)

    @field_validator("t_grid")
    @classmethod
    def _nonnegative_times(cls, t_grid: List[float]) -> List[float]:
        if not t_grid:
            raise ValueError("t_grid must not be empty")
        if any(not math.isfinite(t) or t < 0 for t in t_grid):
            raise ValueError("t_grid values must be finite and nonnegative")
        return t_grid


class FlowSpec(BaseModel):
    """Implicit Euler run; `reference` compares against the exact flow of quadratic forms."""
    model_config = ConfigDict(extra="forbid")

    u0: List[float]
    t_final: float = Field(ge=0)
    steps: int = Field(ge=1)
    reference: bool = True


class SlopesSpec(BaseModel):
    """Explicit (u, v) pairs, a number of sampled pairs, or both."""
    model_config = ConfigDict(extra="forbid")

    u: Optional[List[float]] = None
    v: Optional[List[float]] = None
    samples: int = Field(default=0, ge=0)
    quadraticity: bool = True

    @model_validator(mode="after")
    def _has_pairs(self):
        if (self.u is None) != (self.v is None):
            raise ValueError("u and v must be given together")
        if self.u is None and self.samples == 0:
            raise ValueError("give u and v, or a positive number of samples")
        return self


class CommandSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    audit: AuditSpec = Field(default_factory=AuditSpec)
    flow: Optional[FlowSpec] = None
    slopes: Optional[SlopesSpec] = None


class ToleranceOverrides(BaseModel):
    """Solver settings the experiment tightens or relaxes; unset fields keep their defaults."""
    model_config = ConfigDict(extra="forbid")

    tol: Optional[float] = Field(default=None, gt=0)
    max_iters: Optional[int] = Field(default=None, ge=1)
    subgradient_tol: Optional[float] = Field(default=None, gt=0)
    slope_tol: Optional[float] = Field(default=None, gt=0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    space: SpaceSpec
    form: Dict[str, Any]
    command: CommandSpec = Field(default_factory=CommandSpec)
    seed: Optional[int] = Field(default=None, ge=0)
    output_dir: Optional[str] = None
    tolerances: ToleranceOverrides = Field(default_factory=ToleranceOverrides)
    expect: Optional[Union[str, List[str]]] = None

    @field_validator("form")
    @classmethod
    def _known_form(cls, descriptor: Dict[str, Any]) -> Dict[str, Any]:
        if descriptor.get("family") == "custom":
            raise ValueError("family 'custom' wraps a Python callable and cannot be built from a config")
        try:
            form = create_form(descriptor)
        except ValidationError as e:
            raise ValueError("; ".join(format_validation_error(e)))
        return form.descriptor()

    @model_validator(mode="after")
    def _form_fits_space(self):
        size = self.space.size if self.space.weights is None else len(self.space.weights)
        needed = self.build_form().min_size()
        if needed > size:
            raise ValueError(f"form reads {needed} points but the space has {size}")
        return self

    def build_space(self) -> MeasureSpace:
        return self.space.build()

    def build_form(self) -> EnergyForm:
        return create_form(self.form)

    def solver_settings(self, tol: Optional[float] = None, max_iters: Optional[int] = None) -> SolverSettings:
        """Defaults, then config tolerances, then explicit overrides."""
        return SolverSettings().with_overrides(
            tol=self.tolerances.tol,
            max_iters=self.tolerances.max_iters,
            subgradient_tol=self.tolerances.subgradient_tol,
        ).with_overrides(tol=tol, max_iters=max_iters)

    def expected_labels(self) -> List[str]:
        if self.expect is None:
            return []
        return [self.expect] if isinstance(self.expect, str) else list(self.expect)
