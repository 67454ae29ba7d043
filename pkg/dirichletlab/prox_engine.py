"""
Proximal operator, Moreau-Yosida envelope, Yosida operator and minimal
subgradient of an energy form, all in the L^2(m) geometry.

prox(u) minimises E(v) + ||v - u||_m^2 / (2 lambda). Three solvers are
dispatched on the form's declared strategy:

- linear: quadratic forms, solve (M + 2 lambda Q) v = M u directly.
- newton: C^1 forms with a generalized Hessian, damped Newton on the
  Moreau objective with Armijo backtracking.
- split:  squared weighted total variation, reduced to a scalar equation
  for the multiplier c = 2 lambda S(v) whose inner problem is solved
  exactly through its box-constrained dual, certified by a duality gap.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import solve
from scipy.optimize import brentq, lsq_linear

from .forms import analytic_gradient
from .forms.base import EnergyForm
from .solver_settings import SolverSettings
from .space import Field, MeasureSpace, m_norm

EPS = np.finfo(float).eps
GAP_FLOOR = 256 * EPS
MAX_EXTRAPOLATION_ORDER = 3
# relative m-norm distance within which an extrapolant counts as the gradient
SUBGRADIENT_AGREEMENT = 1e-4


class ProxFailure(RuntimeError):
    """A prox solve did not reach its tolerance; carries the best iterate."""

    def __init__(self, message: str, best: np.ndarray, residual: float, iterations: int):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class SubgradientFailure(RuntimeError):
    """The Yosida values did not settle across the lambda schedule."""

    def __init__(self, message: str, estimate: np.ndarray, change: float):
        super().__init__(message)
        self.estimate = estimate
        self.change = change


@dataclass(frozen=True)
class ProxResult:
    minimizer: Field
    envelope: float
    residual: float
    iterations: int
    strategy: str
    gap: Optional[float] = None


def _prepare(form: EnergyForm, u: Field, lam: float, space: MeasureSpace) -> np.ndarray:
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be a finite positive real, got {lam}")
    array = space.field(u)
    form.validate_field(array)
    return np.array(array, dtype=float)


def _relative_residual(form: EnergyForm, u: np.ndarray, v: np.ndarray, lam: float, mass: np.ndarray) -> float:
    """||M^-1 grad E(v) + (v - u)/lambda||_m / (1 + ||M^-1 grad E(v)||_m)."""
    gradient = form.euclidean_gradient(v)
    if gradient is None:
        return math.inf
    scaled = gradient / mass
    stationarity = scaled + (v - u) / lam
    return float(np.sqrt(np.dot(mass, stationarity ** 2)) / (1.0 + np.sqrt(np.dot(mass, scaled ** 2))))


def _moreau_objective(form: EnergyForm, u: np.ndarray, lam: float, mass: np.ndarray) -> Callable[[np.ndarray], float]:
    def objective(v: np.ndarray) -> float:
        difference = v - u
        return form.energy(v) + float(np.dot(mass, difference * difference)) / (2.0 * lam)
    return objective


def _prox_linear(form: EnergyForm, u: np.ndarray, lam: float, mass: np.ndarray, cfg: SolverSettings) -> ProxResult:
    matrix = form.quadratic_matrix(len(u))
    system = np.diag(mass) + 2.0 * lam * matrix
    rhs = mass * u
    v = solve(system, rhs, assume_a="sym")
    # one step of iterative refinement
    v = v + solve(system, rhs - system @ v, assume_a="sym")
    residual = _relative_residual(form, u, v, lam, mass)
    if not residual <= cfg.tol:
        raise ProxFailure(f"Linear prox residual {residual:.3e} exceeds tol {cfg.tol:.1e}", v, residual, 1)
    return _result(form, u, v, lam, mass, residual, 1, "linear")


def _prox_newton(form: EnergyForm, u: np.ndarray, lam: float, mass: np.ndarray, cfg: SolverSettings) -> ProxResult:
    objective = _moreau_objective(form, u, lam, mass)
    v = u.copy()
    value = objective(v)
    residual = _relative_residual(form, u, v, lam, mass)
    for iteration in range(cfg.max_iters):
        if residual <= cfg.tol:
            logging.debug(f"Newton prox converged in {iteration} iterations, residual {residual:.2e}")
            return _result(form, u, v, lam, mass, residual, iteration, "newton")
        gradient = form.euclidean_gradient(v)
        if gradient is None:
            raise ProxFailure(f"{type(form).__name__} has no gradient at the current iterate", v, residual, iteration)
        full_gradient = gradient + mass * (v - u) / lam
        hessian = form.euclidean_hessian(v)
        if hessian is None:
            direction = -lam * full_gradient / mass
        else:
            direction = -solve(hessian + np.diag(mass / lam), full_gradient, assume_a="sym")
        slope = float(np.dot(full_gradient, direction))
        step = 1.0
        for _ in range(cfg.max_backtracks):
            candidate = v + step * direction
            candidate_value = objective(candidate)
            if candidate_value <= value + cfg.armijo * step * slope:
                break
            # objective differences drown in rounding near the minimiser
            candidate_residual = _relative_residual(form, u, candidate, lam, mass)
            if candidate_residual < residual:
                break
            step *= cfg.shrink
        else:
            logging.warning(f"Newton prox line search stalled at iteration {iteration}, residual {residual:.2e}")
            raise ProxFailure("Line search stalled", v, residual, iteration)
        v, value = candidate, candidate_value
        residual = _relative_residual(form, u, v, lam, mass)
    if residual <= cfg.tol:
        return _result(form, u, v, lam, mass, residual, cfg.max_iters, "newton")
    logging.warning(f"Newton prox hit max_iters={cfg.max_iters} with residual {residual:.2e}")
    raise ProxFailure(f"No convergence within {cfg.max_iters} iterations", v, residual, cfg.max_iters)


def _weighted_tv_prox(form: EnergyForm, u: np.ndarray, c: float, mass: np.ndarray):
    """
    argmin_v c S(v) + ||v - u||_m^2 / 2 through its dual.

    With D the edge difference operator, v = u - M^-1 D^T y where y solves
    min ||M^-1/2 D^T y - M^1/2 u|| subject to |y_e| <= c w_e.
    """
    heads, tails, weights = form.edge_arrays()
    if c <= 0.0:
        return u.copy(), np.zeros(len(heads))
    transpose = np.zeros((len(u), len(heads)))
    columns = np.arange(len(heads))
    transpose[tails, columns] = 1.0
    transpose[heads, columns] = -1.0
    root_mass = np.sqrt(mass)
    bound = c * weights[:, 0]
    solution = lsq_linear(transpose / root_mass[:, None], root_mass * u, bounds=(-bound, bound), method="bvls", tol=1e-12)
    dual = np.clip(solution.x, -bound, bound)
    return u - (transpose @ dual) / mass, dual


def _prox_split(form: EnergyForm, u: np.ndarray, lam: float, mass: np.ndarray, cfg: SolverSettings) -> ProxResult:
    total = form.inner_sum(u)
    if total == 0.0:
        return _result(form, u, u.copy(), lam, mass, 0.0, 0, "split", gap=0.0)

    def mismatch(c: float) -> float:
        v, _ = _weighted_tv_prox(form, u, c, mass)
        return c - 2.0 * lam * form.inner_sum(v)

    upper = 2.0 * lam * total
    if mismatch(upper) <= 0.0:
        multiplier, calls = upper, 1
    else:
        multiplier, info = brentq(mismatch, 0.0, upper, xtol=1e-15 * upper, rtol=4 * EPS, full_output=True, disp=False)
        calls = info.function_calls
    v, dual = _weighted_tv_prox(form, u, multiplier, mass)
    _, _, weights = form.edge_arrays()
    differences = form.differences(v)
    primal = form.energy(v) + float(np.dot(mass, (v - u) ** 2)) / (2.0 * lam)
    beta = float(np.max(np.abs(dual) / (lam * weights[:, 0])))
    gap = max(form.energy(v) + 0.25 * beta * beta - float(np.dot(dual, differences)) / lam, 0.0)
    residual = math.sqrt(gap / (1.0 + primal))
    if gap > max(cfg.tol ** 2, GAP_FLOOR) * (1.0 + primal):
        logging.warning(f"Split prox duality gap {gap:.2e} above certificate level")
        raise ProxFailure(f"Duality gap {gap:.3e} not certified", v, residual, calls)
    logging.debug(f"Split prox: multiplier {multiplier:.6e} after {calls} evaluations, gap {gap:.2e}")
    return _result(form, u, v, lam, mass, residual, calls, "split", gap=gap)


def _result(form, u, v, lam, mass, residual, iterations, strategy, gap=None) -> ProxResult:
    envelope = form.energy(v) + float(np.dot(mass, (v - u) ** 2)) / (2.0 * lam)
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return ProxResult(minimizer=v, envelope=envelope, residual=residual, iterations=iterations, strategy=strategy, gap=gap)


PROX_SOLVERS: Dict[str, Callable[..., ProxResult]] = {
    "linear": _prox_linear,
    "newton": _prox_newton,
    "split": _prox_split,
}


def prox(form: EnergyForm, u: Field, lam: float, space: MeasureSpace, cfg: Optional[SolverSettings] = None) -> ProxResult:
    """Minimiser of E(v) + ||v - u||_m^2 / (2 lambda)."""
    cfg = cfg or SolverSettings()
    u = _prepare(form, u, lam, space)
    strategy = form.solver_strategy()
    if strategy not in PROX_SOLVERS:
        raise ValueError(f"No prox solver for {type(form).__name__} (strategy '{strategy}'). Available: {list(PROX_SOLVERS)}")
    return PROX_SOLVERS[strategy](form, u, lam, space.mass, cfg)


def yosida(form: EnergyForm, u: Field, lam: float, space: MeasureSpace, cfg: Optional[SolverSettings] = None) -> Field:
    """A_lambda(u) = (u - prox(u)) / lambda."""
    result = prox(form, u, lam, space, cfg)
    return (np.asarray(u, dtype=float) - result.minimizer) / lam


def envelope(form: EnergyForm, u: Field, lam: float, space: MeasureSpace, cfg: Optional[SolverSettings] = None) -> float:
    return prox(form, u, lam, space, cfg).envelope


def yosida_path(form: EnergyForm, u: Field, space: MeasureSpace, cfg: Optional[SolverSettings] = None,
                lambda_schedule: Optional[Sequence[float]] = None) -> List[Field]:
    """Yosida values A_lambda(u) along a decreasing schedule."""
    cfg = cfg or SolverSettings()
    schedule = _check_schedule(cfg.lambda_schedule() if lambda_schedule is None else lambda_schedule)
    return [yosida(form, u, lam, space, cfg) for lam in schedule]


def _check_schedule(schedule: Sequence[float]) -> List[float]:
    schedule = [float(lam) for lam in schedule]
    if len(schedule) < 2:
        raise ValueError("lambda_schedule needs at least two values")
    if any(not lam > 0 for lam in schedule):
        raise ValueError("lambda_schedule values must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("lambda_schedule must be strictly decreasing")
    return schedule


class NevilleTableau:
    """
    Polynomial extrapolation to lambda = 0 of values sampled along a
    decreasing schedule, with order capped at MAX_EXTRAPOLATION_ORDER.
    """

    def __init__(self, max_order: int = MAX_EXTRAPOLATION_ORDER):
        self.max_order = max_order
        self.lambdas: List[float] = []
        self.rows: List[List[Any]] = []

    def add(self, lam: float, value: Any) -> Any:
        """Append A(lam) and return the current extrapolated A(0)."""
        k = len(self.rows)
        self.lambdas.append(lam)
        row = [value]
        for j in range(1, min(k, self.max_order) + 1):
            ratio = lam / (self.lambdas[k - j] - lam)
            row.append(row[j - 1] + (row[j - 1] - self.rows[k - 1][j - 1]) * ratio)
        self.rows.append(row)
        return row[-1]


def _euclidean(value: Any) -> float:
    return float(np.linalg.norm(np.atleast_1d(value)))


def geometric_limit(values: Sequence[Any], norm: Callable[[Any], float] = _euclidean) -> Optional[Any]:
    """
    Aitken limit of the last three values, assuming the error shrinks by a
    common ratio per level. On a geometric schedule an error C lambda^a is
    such a sequence for any rate a, fractional ones included.
    """
    if len(values) < 3:
        return None
    older, middle, newest = values[-3:]
    before = norm(middle - older)
    after = norm(newest - middle)
    if before <= EPS * (1.0 + norm(newest)):
        return None
    ratio = after / before
    if not 0.0 < ratio < 1.0:
        return None
    return newest + (newest - middle) * (ratio / (1.0 - ratio))


def _frozen(value: np.ndarray) -> np.ndarray:
    value = np.array(value, dtype=float)
    value.setflags(write=False)
    return value


def minimal_subgradient(form: EnergyForm, u: Field, space: MeasureSpace, cfg: Optional[SolverSettings] = None,
                        lambda_schedule: Optional[Sequence[float]] = None) -> Field:
    """
    Element of least m-norm in the subdifferential of E at u.

    A_lambda(u) converges to it as lambda -> 0. Values along the schedule are
    extrapolated to lambda = 0 twice: with a Neville tableau (integer rates)
    and with an Aitken limit (any geometric rate). The loop stops once two
    successive extrapolants of either kind agree to subgradient_tol relative
    to their size.

    Where E is differentiable at u the gradient is the only subgradient. It is
    returned whenever the extrapolant disagrees with it, or nothing settles
    while the Yosida values still move towards it.
    """
    cfg = cfg or SolverSettings()
    schedule = _check_schedule(cfg.lambda_schedule() if lambda_schedule is None else lambda_schedule)
    inner_cfg = cfg.with_overrides(tol=min(cfg.tol, 1e-3 * cfg.subgradient_tol))
    gradient = analytic_gradient(form, u, space)

    def settled(estimate: np.ndarray, previous: Optional[np.ndarray]) -> bool:
        if previous is None:
            return False
        return m_norm(estimate - previous, space) <= cfg.subgradient_tol * (1.0 + m_norm(estimate, space))

    def certified(estimate: np.ndarray) -> np.ndarray:
        if gradient is not None:
            defect = m_norm(estimate - gradient, space)
            if defect > SUBGRADIENT_AGREEMENT * (1.0 + m_norm(gradient, space)):
                logging.warning(f"Extrapolated subgradient is {defect:.2e} away from the gradient; using the gradient")
                return _frozen(gradient)
        return _frozen(estimate)

    tableau = NevilleTableau()
    values: List[np.ndarray] = []
    previous: Optional[np.ndarray] = None
    previous_limit: Optional[np.ndarray] = None
    change = math.inf
    for k, lam in enumerate(schedule):
        value = yosida(form, u, lam, space, inner_cfg)
        values.append(value)
        estimate = tableau.add(lam, value)
        if previous is not None:
            change = m_norm(estimate - previous, space)
        if settled(estimate, previous):
            logging.debug(f"Minimal subgradient settled at lambda={lam:.2e} after {k + 1} levels")
            return certified(estimate)
        limit = geometric_limit(values, lambda x: m_norm(x, space))
        if limit is not None and settled(limit, previous_limit):
            logging.debug(f"Geometric limit of the Yosida values settled at lambda={lam:.2e}")
            return certified(limit)
        previous, previous_limit = estimate, limit

    if gradient is not None:
        first = m_norm(values[0] - gradient, space)
        last = m_norm(values[-1] - gradient, space)
        if last <= first + cfg.subgradient_tol * (1.0 + m_norm(gradient, space)):
            logging.debug(f"Yosida values approach the gradient ({first:.2e} -> {last:.2e}); using the gradient")
            return _frozen(gradient)
    logging.warning(f"Yosida values not Cauchy across the schedule: last change {change:.2e}")
    raise SubgradientFailure(f"Extrapolated Yosida values did not settle (last change {change:.3e})", previous, change)
