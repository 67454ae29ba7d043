"""
First-order calculus of an energy form: certified slope enclosures,
regularity and quadraticity detection, and subdifferential sandwich checks.

For convex E the difference quotient g(s) = (E(u + s v) - E(u)) / s is
nondecreasing in s, so g(-s) <= left slope <= right slope <= g(s) for every
s > 0. Slopes are therefore reported as enclosures, never bare numbers.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .forms.base import EnergyForm
from .prox_engine import NevilleTableau, geometric_limit, minimal_subgradient, yosida
from .solver_settings import SolverSettings
from .space import Field, MeasureSpace, inner, m_norm

EPS = np.finfo(float).eps
SIGMA_START = 1e-1
SIGMA_RATIO = 0.5
SIGMA_FLOOR = 1e-9
DEFAULT_SLOPE_TOL = 1e-7
HOMOGENEITY_FACTORS = (0.5, 2.0, 10.0)


@dataclass(frozen=True)
class SlopeEnclosure:
    """
    lower <= left <= right <= upper, where lower and upper are the difference
    quotients at -sigma and +sigma.

    status is "certified", "irregular" (the extrapolated one-sided limits
    stay apart) or "noisy" (they agree but the brackets never closed).
    """
    lower: float
    upper: float
    left: float
    right: float
    sigma: float
    certified: bool
    status: str
    oracle: Optional[Tuple[float, float]] = None
    ladder: Tuple[Tuple[float, float, float], ...] = field(default=(), repr=False)

    @property
    def gap(self) -> float:
        return self.right - self.left

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.left + self.right)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "left": self.left,
            "right": self.right,
            "gap": self.gap,
            "sigma": self.sigma,
            "certified": self.certified,
            "status": self.status,
            "oracle": None if self.oracle is None else list(self.oracle),
        }


def _norm(u: np.ndarray, space: Optional[MeasureSpace]) -> float:
    if space is None:
        return float(np.linalg.norm(u))
    return m_norm(u, space)


def slope_enclosure(form: EnergyForm, u: Field, v: Field, tol: float = DEFAULT_SLOPE_TOL,
                    space: Optional[MeasureSpace] = None) -> SlopeEnclosure:
    """
    Enclose the one-sided slopes of E at u along v.

    The sigma ladder starts at SIGMA_START * ||u|| / ||v|| and halves down to
    SIGMA_FLOOR times that scale. Each side is extrapolated with
    2 g(s/2) - g(s). Once both extrapolants settle, the ladder continues only
    until the brackets are narrower than tol, and stops early when the
    rounding error of the quotient, about 8 eps E / s, passes tol / 10.
    An analytic oracle (closed-form slopes, or the gradient of a C1 form)
    lying inside the brackets certifies the estimates.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    u = form.validate_field(u)
    v = form.validate_field(v)
    if u.shape != v.shape:
        raise ValueError(f"Dimension mismatch: {u.shape} vs {v.shape}")
    if not np.any(v):
        return SlopeEnclosure(0.0, 0.0, 0.0, 0.0, 0.0, True, "certified", oracle=(0.0, 0.0))

    base = form.energy(u)
    u_norm, v_norm = _norm(u, space), _norm(v, space)
    scale = u_norm / v_norm if u_norm > 0 else 1.0
    sigma = SIGMA_START * scale
    floor = SIGMA_FLOOR * scale

    def quotient(s: float) -> Tuple[float, float]:
        shifted = form.energy(u + s * v)
        noise = 8.0 * EPS * (abs(base) + abs(shifted)) / abs(s)
        return (shifted - base) / s, noise

    oracle = form.one_sided_slopes(u, v)
    if oracle is None:
        gradient = form.euclidean_gradient(u)
        if gradient is not None:
            oracle = (float(np.dot(gradient, v)),) * 2

    ladder: List[Tuple[float, float, float]] = []
    previous: Optional[Tuple[float, float]] = None
    estimates: Optional[Tuple[float, float]] = None
    settled = False
    lower = upper = 0.0
    used_sigma = sigma
    while sigma >= floor:
        g_plus, noise_plus = quotient(sigma)
        g_minus, noise_minus = quotient(-sigma)
        noise = max(noise_plus, noise_minus)
        if ladder and noise > tol / 10.0:
            break
        ladder.append((sigma, g_minus, g_plus))
        lower, upper, used_sigma = g_minus, g_plus, sigma
        if previous is not None and not settled:
            current = (2.0 * g_minus - previous[0], 2.0 * g_plus - previous[1])
            if estimates is not None:
                settle = max(tol / 10.0, 4.0 * noise)
                settled = abs(current[0] - estimates[0]) <= settle and abs(current[1] - estimates[1]) <= settle
            estimates = current
        # settled estimates are kept; the ladder goes on only to narrow the brackets
        if settled and (upper - lower < tol or oracle is not None):
            break
        previous = (g_minus, g_plus)
        sigma *= SIGMA_RATIO
    if estimates is None:
        estimates = (lower, upper)

    left = min(max(estimates[0], lower), upper)
    right = min(max(estimates[1], lower), upper)
    if left > right:
        left = right = 0.5 * (left + right)

    if oracle is not None:
        _, noise = quotient(used_sigma)
        slack = noise + 1e-12 * (1.0 + abs(lower) + abs(upper))
        if lower - slack <= oracle[0] and oracle[1] <= upper + slack and oracle[0] <= oracle[1] + slack:
            return SlopeEnclosure(lower, upper, float(oracle[0]), float(oracle[1]), used_sigma, True,
                                  "certified", oracle=(float(oracle[0]), float(oracle[1])), ladder=tuple(ladder))
        logging.warning(f"Closed-form slopes {oracle} of {type(form).__name__} fall outside [{lower:.6e}, {upper:.6e}]")

    certified = (upper - lower) < tol
    if certified:
        status = "certified"
    elif right - left > tol:
        status = "irregular"
    else:
        status = "noisy"
    return SlopeEnclosure(lower, upper, left, right, used_sigma, certified, status, oracle=oracle, ladder=tuple(ladder))


@dataclass(frozen=True)
class RegularityReport:
    regular: bool
    worst_gap: float
    worst_direction: Optional[Field]
    directions: int
    uncertified: int


def default_directions(size: int, n_random: int = 20, rng: Optional[np.random.Generator] = None) -> List[np.ndarray]:
    """Coordinate fields followed by n_random Gaussian directions."""
    rng = rng if rng is not None else np.random.default_rng(0)
    directions = [np.eye(size)[i] for i in range(size)]
    directions += [rng.standard_normal(size) for _ in range(n_random)]
    return directions


def regularity_probe(form: EnergyForm, u: Field, directions: Optional[Sequence[Field]] = None,
                     tol: float = DEFAULT_SLOPE_TOL, space: Optional[MeasureSpace] = None) -> RegularityReport:
    """Regular at u iff every enclosure certifies a slope gap of at most tol."""
    u = form.validate_field(u)
    directions = default_directions(len(u)) if directions is None else directions
    worst_gap, worst_direction, uncertified = -math.inf, None, 0
    for direction in directions:
        enclosure = slope_enclosure(form, u, direction, tol, space)
        if not enclosure.certified:
            uncertified += 1
        if enclosure.gap > worst_gap:
            worst_gap, worst_direction = enclosure.gap, np.asarray(direction, dtype=float)
    regular = uncertified == 0 and worst_gap <= tol
    return RegularityReport(regular, float(worst_gap), worst_direction, len(directions), uncertified)


@dataclass(frozen=True)
class LinearityReport:
    regular: bool
    linearity_defect: Optional[float]
    convexity_margin: float
    concavity_margin: float
    strict_convexity: bool
    homogeneity_defect: float
    reflection_defect: float
    passed: bool


def second_argument_linearity_check(form: EnergyForm, u: Field, v1: Field, v2: Field, lam: float,
                                    tol: float = 1e-6, space: Optional[MeasureSpace] = None) -> LinearityReport:
    """
    Linearity of the slope in its direction argument at a regular point,
    otherwise convexity of the right slope and concavity of the left slope.
    Positive 1-homogeneity in both arguments and the reflection identity
    right(u, -v) = -left(u, v) are checked in every case.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    u = form.validate_field(u)
    v1 = form.validate_field(v1)
    v2 = form.validate_field(v2)
    mixed = lam * v1 + (1.0 - lam) * v2
    e1, e2, em = (slope_enclosure(form, u, d, DEFAULT_SLOPE_TOL, space) for d in (v1, v2, mixed))
    size = 1.0 + abs(e1.right) + abs(e2.right) + abs(em.right) + abs(e1.left) + abs(e2.left)
    regular = all(e.certified and e.gap <= DEFAULT_SLOPE_TOL for e in (e1, e2, em))

    convexity_margin = em.right - lam * e1.right - (1.0 - lam) * e2.right
    concavity_margin = lam * e1.left + (1.0 - lam) * e2.left - em.left
    linearity_defect = None
    if regular:
        linearity_defect = abs(em.midpoint - lam * e1.midpoint - (1.0 - lam) * e2.midpoint)
        shape_ok = linearity_defect <= tol * size
    else:
        shape_ok = convexity_margin <= tol * size and concavity_margin <= tol * size

    homogeneity_defect = 0.0
    for factor in HOMOGENEITY_FACTORS:
        scaled_point = slope_enclosure(form, factor * u, v1, DEFAULT_SLOPE_TOL, space)
        scaled_direction = slope_enclosure(form, u, factor * v1, DEFAULT_SLOPE_TOL, space)
        for enclosure in (scaled_point, scaled_direction):
            defect = max(abs(enclosure.left - factor * e1.left), abs(enclosure.right - factor * e1.right))
            homogeneity_defect = max(homogeneity_defect, defect / (1.0 + factor * (abs(e1.left) + abs(e1.right))))

    reflected = slope_enclosure(form, u, -v1, DEFAULT_SLOPE_TOL, space)
    reflection_defect = abs(reflected.right + e1.left)
    reflection_ok = reflection_defect <= max(e1.width, reflected.width) + tol * size

    passed = shape_ok and homogeneity_defect <= tol and reflection_ok
    return LinearityReport(
        regular=regular,
        linearity_defect=linearity_defect,
        convexity_margin=float(convexity_margin),
        concavity_margin=float(concavity_margin),
        strict_convexity=bool(convexity_margin < -tol * size),
        homogeneity_defect=float(homogeneity_defect),
        reflection_defect=float(reflection_defect),
        passed=bool(passed),
    )


@dataclass(frozen=True)
class QuadraticityVerdict:
    """
    regular and symmetric together are equivalent to the parallelogram law;
    `consistent` records whether the samples agree with that equivalence.
    """
    regular: bool
    symmetry_defect: float
    parallelogram_defect: float
    symmetric: bool
    parallelogram: bool
    quadratic: bool
    consistent: bool
    witness: Optional[Tuple[Field, Field]] = None


def quadraticity_test(form: EnergyForm, samples: Sequence[Tuple[Field, Field]], tol: float = 1e-7,
                      space: Optional[MeasureSpace] = None) -> QuadraticityVerdict:
    """Regularity, slope symmetry and the parallelogram law over sampled pairs."""
    if not samples:
        raise ValueError("samples must be nonempty")
    regular = True
    symmetric = parallelogram = True
    symmetry_defect = parallelogram_defect = 0.0
    witness = None
    worst_symmetry = -1.0
    for u, v in samples:
        u = form.validate_field(u)
        v = form.validate_field(v)
        energy_u, energy_v = form.energy(u), form.energy(v)
        scale = 1.0 + energy_u + energy_v
        forward = slope_enclosure(form, u, v, DEFAULT_SLOPE_TOL, space)
        backward = slope_enclosure(form, v, u, DEFAULT_SLOPE_TOL, space)
        if not all(e.certified and e.gap <= DEFAULT_SLOPE_TOL * scale for e in (forward, backward)):
            regular = False
        defect = abs(forward.midpoint - backward.midpoint)
        symmetry_defect = max(symmetry_defect, defect)
        if defect > tol * scale:
            symmetric = False
        if defect / scale > worst_symmetry:
            worst_symmetry, witness = defect / scale, (u, v)
        law = abs(form.energy(u + v) + form.energy(u - v) - 2.0 * energy_u - 2.0 * energy_v)
        parallelogram_defect = max(parallelogram_defect, law)
        if law > tol * scale:
            parallelogram = False
    quadratic = regular and symmetric and parallelogram
    return QuadraticityVerdict(
        regular=regular,
        symmetry_defect=float(symmetry_defect),
        parallelogram_defect=float(parallelogram_defect),
        symmetric=symmetric,
        parallelogram=parallelogram,
        quadratic=quadratic,
        consistent=(regular and symmetric) == parallelogram,
        witness=witness,
    )


@dataclass(frozen=True)
class SandwichReport:
    pairing: float
    lower: float
    upper: float
    left: float
    right: float
    margin: float
    passed: bool


def sandwich_check(form: EnergyForm, u: Field, v: Field, space: MeasureSpace, cfg: Optional[SolverSettings] = None,
                   tol: float = 1e-5, xi: Optional[Field] = None) -> SandwichReport:
    """
    g(-sigma) - tol <= (xi, v) <= g(sigma) + tol for the minimal subgradient
    xi at u. Pass a precomputed xi to reuse it across directions.
    """
    if xi is None:
        xi = minimal_subgradient(form, u, space, cfg)
    enclosure = slope_enclosure(form, u, v, DEFAULT_SLOPE_TOL, space)
    pairing = inner(xi, v, space)
    scale = 1.0 + m_norm(np.asarray(xi), space) * m_norm(np.asarray(v, dtype=float), space)
    margin = max(enclosure.lower - pairing, pairing - enclosure.upper)
    return SandwichReport(pairing, enclosure.lower, enclosure.upper, enclosure.left, enclosure.right,
                          float(margin), bool(margin <= tol * scale))


@dataclass(frozen=True)
class YosidaSandwichReport:
    pairings: Tuple[float, ...]
    limit: float
    lower: float
    upper: float
    margin: float
    regular: bool
    convergence_defect: Optional[float]
    passed: bool


def _most_settled(*candidates: List[float]) -> float:
    """Last value of the extrapolant sequence whose final step is smallest."""
    best, best_change = candidates[0][-1], math.inf
    for sequence in candidates:
        if len(sequence) >= 2 and abs(sequence[-1] - sequence[-2]) < best_change:
            best, best_change = sequence[-1], abs(sequence[-1] - sequence[-2])
    return best


def yosida_sandwich_check(form: EnergyForm, u: Field, v: Field, lambda_schedule: Optional[Sequence[float]] = None,
                          space: Optional[MeasureSpace] = None, cfg: Optional[SolverSettings] = None,
                          tol: float = 1e-5) -> YosidaSandwichReport:
    """
    Pairings (A_lambda(u), v) along the schedule and their limit.

    The limit is taken by the same extrapolation as the minimal subgradient.
    It must lie in the slope enclosure, and at regular points match the slope.
    """
    if space is None:
        raise ValueError("yosida_sandwich_check needs the measure space")
    cfg = cfg or SolverSettings()
    schedule = list(cfg.lambda_schedule() if lambda_schedule is None else lambda_schedule)
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or any(lam <= 0 for lam in schedule):
        raise ValueError("lambda_schedule must be positive and strictly decreasing")
    tableau = NevilleTableau()
    pairings: List[float] = []
    polynomial: List[float] = []
    geometric: List[float] = []
    for lam in schedule:
        value = inner(yosida(form, u, lam, space, cfg), v, space)
        pairings.append(value)
        polynomial.append(float(tableau.add(lam, value)))
        aitken = geometric_limit(np.array(pairings))
        if aitken is not None:
            geometric.append(float(aitken))
    limit = _most_settled(polynomial, geometric)
    enclosure = slope_enclosure(form, u, v, DEFAULT_SLOPE_TOL, space)
    scale = 1.0 + abs(enclosure.left) + abs(enclosure.right)
    margin = max(enclosure.lower - limit, limit - enclosure.upper)
    regular = enclosure.certified and enclosure.gap <= DEFAULT_SLOPE_TOL
    convergence_defect = abs(limit - enclosure.midpoint) if regular else None
    passed = margin <= tol * scale and (convergence_defect is None or convergence_defect <= tol * scale)
    return YosidaSandwichReport(tuple(pairings), float(limit), enclosure.lower, enclosure.upper, float(margin),
                                regular, convergence_defect, bool(passed))


@dataclass(frozen=True)
class ExtendedSubdifferentialReport:
    accepted: bool
    worst_margin: float
    witness: Optional[Field]
    directions: int
    scaling_closed: Optional[bool] = None


def extended_subdifferential_check(form: EnergyForm, u: Field, xi: Field, directions: Optional[Sequence[Field]] = None,
                                   space: Optional[MeasureSpace] = None, tol: float = 1e-5,
                                   rng: Optional[np.random.Generator] = None,
                                   check_scaling: bool = True) -> ExtendedSubdifferentialReport:
    """
    Accept xi when left(u, v) - tol <= (xi, v) <= right(u, v) + tol for every
    probed v. An accepted xi is also checked at scaled points: c xi must be
    accepted at c u for c in HOMOGENEITY_FACTORS.
    """
    if space is None:
        raise ValueError("extended_subdifferential_check needs the measure space")
    u = np.asarray(space.field(u), dtype=float)
    xi = np.asarray(space.field(xi), dtype=float)
    if directions is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        basis = [np.eye(space.size)[i] for i in range(space.size)]
        directions = basis + [-e for e in basis] + [rng.standard_normal(space.size) for _ in range(50)]
    if not directions:
        raise ValueError("directions must be nonempty")
    accepted, worst_margin, witness = _sandwiched(form, u, xi, directions, space, tol)
    scaling_closed = None
    if accepted and check_scaling:
        scaling_closed = all(
            _sandwiched(form, factor * u, factor * xi, directions, space, tol)[0] for factor in HOMOGENEITY_FACTORS
        )
    return ExtendedSubdifferentialReport(accepted, worst_margin, witness, len(directions), scaling_closed)


def _sandwiched(form, u, xi, directions, space, tol):
    worst_margin, witness = -math.inf, None
    xi_norm = m_norm(xi, space)
    for direction in directions:
        direction = np.asarray(direction, dtype=float)
        enclosure = slope_enclosure(form, u, direction, DEFAULT_SLOPE_TOL, space)
        pairing = inner(xi, direction, space)
        scale = 1.0 + abs(enclosure.left) + abs(enclosure.right) + xi_norm * m_norm(direction, space)
        margin = max(enclosure.left - pairing, pairing - enclosure.right) / scale
        if margin > worst_margin:
            worst_margin, witness = margin, direction
    accepted = worst_margin <= tol
    return accepted, float(worst_margin), (None if accepted else witness)


def subdifferential_closure_check(form: EnergyForm, u: Field, candidates: Sequence[Field], space: MeasureSpace,
                                  directions: Optional[Sequence[Field]] = None, tol: float = 1e-5) -> bool:
    """Midpoints of accepted candidates are accepted again."""
    u = np.asarray(space.field(u), dtype=float)
    if directions is None:
        directions = default_directions(space.size)
    accepted = [np.asarray(c, dtype=float) for c in candidates
                if _sandwiched(form, u, np.asarray(c, dtype=float), directions, space, tol)[0]]
    for i in range(len(accepted)):
        for j in range(i + 1, len(accepted)):
            midpoint = 0.5 * (accepted[i] + accepted[j])
            if not _sandwiched(form, u, midpoint, directions, space, tol)[0]:
                return False
    return True


def energy_bound_check(form: EnergyForm, u: Field, space: MeasureSpace, cfg: Optional[SolverSettings] = None,
                       tol: float = 1e-5, xi: Optional[Field] = None) -> Tuple[bool, float]:
    """E(u) <= 1/2 ||xi||_m ||u||_m for the minimal subgradient xi; returns (passed, margin)."""
    if xi is None:
        xi = minimal_subgradient(form, u, space, cfg)
    margin = form.evaluate(u) - 0.5 * m_norm(np.asarray(xi), space) * m_norm(np.asarray(u, dtype=float), space)
    return bool(margin <= tol), float(margin)


def subgradient_distance(form: EnergyForm, u: Field, v: Field, space: MeasureSpace,
                         cfg: Optional[SolverSettings] = None) -> float:
    """sqrt(||u - v||_m^2 + ||xi(u) - xi(v)||_m^2) with minimal subgradients xi."""
    xi_u = minimal_subgradient(form, u, space, cfg)
    xi_v = minimal_subgradient(form, v, space, cfg)
    difference = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return math.hypot(m_norm(difference, space), m_norm(np.asarray(xi_u) - np.asarray(xi_v), space))
