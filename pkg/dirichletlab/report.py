"""
Report models for the Dirichlet audit and their JSON and text renderings.

JSON output is deterministic: keys are sorted, floats go through the json
module unchanged, and nothing time-dependent is written.
"""
import json
import math
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

REPORT_HEADER = "sampled evidence, not a proof"

CLOSED_FORM_TOL = 1e-8
PROX_MEDIATED_TOL = 1e-5

Kind = Literal["closed-form", "prox-mediated"]


def jsonable(value: Any) -> Any:
    """Convert arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, np.ndarray):
        return [jsonable(x) for x in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [jsonable(x) for x in value]
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class PropertyRecord(BaseModel):
    """Outcome of one sampled inequality or identity."""
    model_config = ConfigDict(extra="forbid")

    name: str
    anchor: str
    kind: Kind
    tolerance: float
    samples: int = 0
    violations: int = 0
    worst_margin: Optional[float] = None
    counterexample: Optional[Dict[str, Any]] = None
    passed: bool = True
    gating: bool = True
    status: Literal["ok", "error"] = "ok"
    notes: List[str] = Field(default_factory=list)


class Finding(BaseModel):
    """A bug-level inconsistency between results that theory ties together."""
    model_config = ConfigDict(extra="forbid")

    severity: Literal["bug"] = "bug"
    rule: str
    message: str


class Verdict(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dirichlet: Literal["dirichlet-consistent", "not-dirichlet", "undetermined"]
    symmetric: Optional[bool] = None
    regular: Optional[bool] = None
    quadratic: Optional[bool] = None
    local: Optional[bool] = None

    def labels(self) -> List[str]:
        labels = [self.dirichlet]
        for name, value in (("symmetric", self.symmetric), ("regular", self.regular),
                            ("quadratic", self.quadratic), ("local", self.local)):
            if value is not None:
                labels.append(name if value else f"non-{name}")
        return labels


class PropertyReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    header: str = REPORT_HEADER
    form: Dict[str, Any]
    space: Dict[str, Any]
    seed: int
    budget: int
    records: List[PropertyRecord] = Field(default_factory=list)
    findings: List[Finding] = Field(default_factory=list)
    verdict: Optional[Verdict] = None

    def record(self, name: str) -> PropertyRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise ValueError(f"Record '{name}' not found. Available records: {[r.name for r in self.records]}")

    def to_json(self) -> str:
        return json.dumps(jsonable(self.model_dump(mode="python")), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"Dirichlet audit ({self.header})",
            f"form: {self.form.get('family', '?')}  points: {len(self.space.get('weights', []))}  seed: {self.seed}  budget: {self.budget}",
        ]
        if self.verdict is not None:
            lines.append(f"verdict: {', '.join(self.verdict.labels())}")
        lines.append("")
        for record in self.records:
            if record.status == "error":
                mark = "ERROR"
            else:
                mark = "pass" if record.passed else "FAIL"
            margin = "n/a" if record.worst_margin is None else f"{record.worst_margin:.3e}"
            suffix = "" if record.gating else " (informational)"
            lines.append(
                f"[{mark:>5}] {record.name:<34} samples={record.samples:<6} violations={record.violations:<5} "
                f"worst={margin} tol={record.tolerance:.0e} {record.kind}{suffix}"
            )
            for note in record.notes:
                lines.append(f"        {note}")
        if self.findings:
            lines.append("")
            for finding in self.findings:
                lines.append(f"[{finding.severity.upper()}] {finding.rule}: {finding.message}")
        return "\n".join(lines) + "\n"


class MarginTracker:
    """
    Accumulates margins of an inequality `lhs - rhs <= 0` over samples.

    A sample violates when its margin exceeds tolerance * scale. The worst
    violating sample keeps its payload so the report can be replayed.
    """

    def __init__(self, name: str, anchor: str, kind: Kind, tolerance: Optional[float] = None, gating: bool = True):
        self.name = name
        self.anchor = anchor
        self.kind = kind
        self.tolerance = tolerance if tolerance is not None else (CLOSED_FORM_TOL if kind == "closed-form" else PROX_MEDIATED_TOL)
        self.gating = gating
        self.samples = 0
        self.violations = 0
        self.worst_margin: Optional[float] = None
        self.worst_excess = -math.inf
        self.counterexample: Optional[Dict[str, Any]] = None
        self.notes: List[str] = []

    def observe(self, margin: float, scale: float = 1.0, payload: Optional[Callable[[], Dict[str, Any]]] = None) -> bool:
        """Record one sample; returns True when it violates."""
        margin = float(margin)
        self.samples += 1
        if self.worst_margin is None or margin > self.worst_margin:
            self.worst_margin = margin
        excess = margin - self.tolerance * scale
        violated = excess > 0
        if violated:
            self.violations += 1
            if excess > self.worst_excess and payload is not None:
                self.worst_excess = excess
                self.counterexample = jsonable(dict(payload(), margin=margin))
        return violated

    def observe_outcome(self, violated: bool, margin: float, payload: Optional[Callable[[], Dict[str, Any]]] = None) -> bool:
        """Record a sample whose pass/fail is decided by the caller."""
        margin = float(margin)
        self.samples += 1
        if self.worst_margin is None or margin > self.worst_margin:
            self.worst_margin = margin
        if violated:
            self.violations += 1
            if self.counterexample is None and payload is not None:
                self.counterexample = jsonable(dict(payload(), margin=margin))
        return violated

    def note(self, text: str) -> None:
        self.notes.append(text)

    def build(self) -> PropertyRecord:
        return PropertyRecord(
            name=self.name,
            anchor=self.anchor,
            kind=self.kind,
            tolerance=self.tolerance,
            samples=self.samples,
            violations=self.violations,
            worst_margin=self.worst_margin,
            counterexample=self.counterexample,
            passed=self.violations == 0,
            gating=self.gating,
            notes=list(self.notes),
        )


def error_record(name: str, anchor: str, kind: Kind, error: Exception) -> PropertyRecord:
    return PropertyRecord(
        name=name,
        anchor=anchor,
        kind=kind,
        tolerance=CLOSED_FORM_TOL if kind == "closed-form" else PROX_MEDIATED_TOL,
        passed=False,
        status="error",
        notes=[f"{type(error).__name__}: {error}"],
    )
