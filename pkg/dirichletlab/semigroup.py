"""
Gradient-flow semigroup of an energy form.

`flow` iterates the resolvent (implicit Euler). Every step is a prox, so a
discrete trajectory inherits the order and contraction properties of the
resolvent at any step size. `exact_quadratic_flow` evaluates the linear
semigroup exp(-2 t M^-1 Q) spectrally and serves as the reference.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh

from .forms.base import EnergyForm
from .prox_engine import ProxFailure, prox
from .report import MarginTracker, PropertyRecord
from .solver_settings import SolverSettings
from .space import Field, MeasureSpace, lp_norm

DEFAULT_P_GRID = (1.0, 2.0, math.inf)
DEFAULT_MAX_STEP = 0.05


@dataclass(frozen=True)
class Trajectory:
    """Discrete flow: states[k] approximates T_{times[k]} states[0]."""
    times: Tuple[float, ...]
    states: Tuple[Field, ...]
    step: float
    energies: Tuple[float, ...]
    residuals: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def final(self) -> Field:
        return self.states[-1]

    def dissipation_defect(self) -> float:
        """Largest energy increase between consecutive states (<= 0 when dissipative)."""
        if len(self.energies) < 2:
            return 0.0
        return float(np.max(np.diff(self.energies)))

    def csv_rows(self) -> List[Tuple[float, int, float]]:
        return [(t, i, float(value)) for t, state in zip(self.times, self.states) for i, value in enumerate(state)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "times": list(self.times),
            "step": self.step,
            "states": [state.tolist() for state in self.states],
            "energies": list(self.energies),
            "residuals": list(self.residuals),
        }


class FlowFailure(RuntimeError):
    """A resolvent step failed; `trajectory` holds the states computed so far."""

    def __init__(self, message: str, trajectory: Trajectory, cause: Optional[ProxFailure] = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


def flow(form: EnergyForm, u0: Field, t_final: float, steps: int, space: MeasureSpace,
         cfg: Optional[SolverSettings] = None) -> Trajectory:
    """
    Implicit Euler with `steps` uniform steps up to t_final.

    t_final = 0 returns the one-state trajectory [u0].
    """
    if not (t_final >= 0 and math.isfinite(t_final)):
        raise ValueError(f"t_final must be a finite nonnegative real, got {t_final}")
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    cfg = cfg or SolverSettings()
    state = space.field(u0)
    times, states, energies, residuals = [0.0], [state], [form.evaluate(state)], []
    if t_final == 0:
        return Trajectory(tuple(times), tuple(states), 0.0, tuple(energies), ())
    tau = t_final / steps
    for k in range(1, int(steps) + 1):
        try:
            result = prox(form, state, tau, space, cfg)
        except ProxFailure as e:
            partial = Trajectory(tuple(times), tuple(states), tau, tuple(energies), tuple(residuals))
            logging.error(f"Flow stopped at step {k}/{steps} (t={times[-1]:.4g}): {e}")
            raise FlowFailure(f"Resolvent step {k} failed: {e}", partial, e) from e
        state = result.minimizer
        times.append(k * tau if k < steps else float(t_final))
        states.append(state)
        energies.append(form.energy(np.asarray(state)))
        residuals.append(result.residual)
    logging.debug(f"Flow of {type(form).__name__}: {steps} steps of {tau:.3e}, final energy {energies[-1]:.6e}")
    return Trajectory(tuple(times), tuple(states), tau, tuple(energies), tuple(residuals))


def exact_quadratic_flow(Q: Any, u0: Field, t: float, space: MeasureSpace) -> Field:
    """Solution at time t of du/dt = -2 M^-1 Q u, by the M-orthonormal eigenbasis of (Q, M)."""
    matrix = np.array(Q, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Q must be a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] != space.size:
        raise ValueError(f"Q is {matrix.shape[0]}x{matrix.shape[0]} but the space has {space.size} points")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * (1.0 + np.max(np.abs(matrix)))):
        raise ValueError("Q must be symmetric")
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    u0 = np.asarray(space.field(u0), dtype=float)
    if t == 0:
        return u0.copy()
    mass = space.mass
    eigenvalues, basis = eigh(matrix, np.diag(mass))
    coefficients = basis.T @ (mass * u0)
    return basis @ (np.exp(-2.0 * np.maximum(eigenvalues, 0.0) * t) * coefficients)


def _norm_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def markov_probe(form: EnergyForm, pairs: Sequence[Tuple[Field, Field]], t_grid: Sequence[float],
                 p_grid: Sequence[float] = DEFAULT_P_GRID, space: Optional[MeasureSpace] = None,
                 cfg: Optional[SolverSettings] = None, tolerance: Optional[float] = None,
                 max_step: float = DEFAULT_MAX_STEP) -> List[PropertyRecord]:
    """
    L^p contraction and order preservation of the discrete flow.

    Each pair is evolved once through the sorted time grid with resolvent
    steps of at most `max_step`. Order preservation is probed only on pairs
    with u >= v pointwise.
    """
    if not pairs or not t_grid or not p_grid:
        raise ValueError("pairs, t_grid and p_grid must be nonempty")
    if space is None:
        raise ValueError("markov_probe needs the measure space")
    if any(t < 0 for t in t_grid):
        raise ValueError("t_grid values must be nonnegative")
    cfg = cfg or SolverSettings()
    times = sorted(set(float(t) for t in t_grid))
    contraction = {
        p: MarginTracker(f"lp_contraction_p{_norm_label(p)}", "L^p contraction of the flow", "prox-mediated", tolerance)
        for p in p_grid
    }
    order = MarginTracker("order_preservation", "order preservation of the flow", "prox-mediated", tolerance)

    for u, v in pairs:
        u = np.asarray(space.field(u), dtype=float)
        v = np.asarray(space.field(v), dtype=float)
        ordered = bool(np.all(u >= v))
        current_u, current_v, clock = u, v, 0.0
        for t in times:
            if t > clock:
                n_steps = max(1, int(math.ceil((t - clock) / max_step - 1e-12)))
                tau = (t - clock) / n_steps
                for _ in range(n_steps):
                    current_u = np.asarray(prox(form, current_u, tau, space, cfg).minimizer)
                    current_v = np.asarray(prox(form, current_v, tau, space, cfg).minimizer)
                clock = t
            for p, tracker in contraction.items():
                initial = lp_norm(u - v, p, space)
                margin = lp_norm(current_u - current_v, p, space) - initial
                tracker.observe(margin, 1.0 + initial, lambda p=p, t=t: {"u": u, "v": v, "t": t, "p": p})
            if ordered:
                margin = float(np.max(current_v - current_u))
                order.observe(margin, 1.0 + float(np.max(u - v)), lambda t=t: {"u": u, "v": v, "t": t})
    records = [tracker.build() for tracker in contraction.values()]
    if order.samples == 0:
        order.note("no ordered pairs were supplied")
    records.append(order.build())
    return records
