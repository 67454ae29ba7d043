from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SolverSettings(BaseModel):
    """
    Tolerances and iteration limits shared by the prox solvers.

    `tol` bounds the relative stationarity residual of a prox step.
    `subgradient_tol` is the Cauchy threshold of the extrapolated Yosida
    limit; the lambda_* fields describe its default geometric schedule.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default=1e-8, gt=0)
    max_iters: int = Field(default=500, ge=1)
    armijo: float = Field(default=1e-4, gt=0, lt=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    max_backtracks: int = Field(default=60, ge=1)
    subgradient_tol: float = Field(default=1e-7, gt=0)
    lambda_max: float = Field(default=1e-1, gt=0)
    lambda_min: float = Field(default=1e-6, gt=0)
    lambda_ratio: float = Field(default=0.5, gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered_schedule(self):
        if self.lambda_min >= self.lambda_max:
            raise ValueError(f"lambda_min ({self.lambda_min}) must be below lambda_max ({self.lambda_max})")
        return self

    def lambda_schedule(self) -> Tuple[float, ...]:
        """Geometric decreasing schedule from lambda_max down to lambda_min."""
        count = int(np.floor(np.log(self.lambda_min / self.lambda_max) / np.log(self.lambda_ratio) + 1e-9)) + 1
        return tuple(float(self.lambda_max * self.lambda_ratio ** k) for k in range(count))

    def with_overrides(self, **overrides: Any) -> "SolverSettings":
        """Return validated settings with the non-None overrides applied."""
        values: Dict[str, Any] = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return SolverSettings(**values)
