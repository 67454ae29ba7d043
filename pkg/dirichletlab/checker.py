"""
The Dirichlet audit.

Each check samples fields with a seeded FieldSampler, measures the margin
lhs - rhs of an inequality, and returns PropertyRecords. Margins are judged
against tolerance * (1 + energies involved). Closed-form checks keep a
replayable counterexample payload; `replay_counterexample` recomputes its
margin from the stored fields.

full_audit runs every check as a section through AuditRunner, derives the
verdict and cross-checks results that theory ties together.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .audit_runner import AuditRunner, AuditSection
from .calculus import (DEFAULT_SLOPE_TOL, extended_subdifferential_check, regularity_probe, quadraticity_test,
                       sandwich_check, slope_enclosure, yosida_sandwich_check)
from .contractions import LipschitzMap, NormalContraction, apply_contraction
from .forms import analytic_gradient
from .forms.base import EnergyForm
from .prox_engine import ProxFailure, SubgradientFailure, envelope, minimal_subgradient, prox
from .report import PROX_MEDIATED_TOL, Finding, MarginTracker, PropertyRecord, PropertyReport, Verdict
from .sampling import FieldSampler, section_rng
from .semigroup import DEFAULT_P_GRID, DEFAULT_MAX_STEP, markov_probe
from .solver_settings import SolverSettings
from .space import MeasureSpace, h_alpha, inner, m_norm, meet_join

DEFAULT_T_GRID = (0.01, 0.1, 1.0)
HOMOGENEITY_NUS = (-2.0, -1.0, 0.0, 0.5, 3.0)
LIPSCHITZ_CONSTANTS = (0.5, 2.0, 7.0)
ENVELOPE_LAMBDAS = (1e-1, 1e-2, 1e-3)
CDC2_TOL = 1e-4
ENVELOPE_TOL = 1e-6
SLOPE_TOL = 1e-7
SLOPE_LOCALITY_TOL = 1e-9

# records whose failure makes the form not Dirichlet, plus the sections producing them
DIRICHLET_RECORDS = ("convexity", "minmax", "h_alpha_symmetric", "order_preservation")
DIRICHLET_SECTIONS = ("h_alpha", "markov")
MARKOV_PREFIX = "lp_contraction_p"


def _setup(form: EnergyForm, space: Optional[MeasureSpace], rng: Optional[np.random.Generator]):
    space = space or MeasureSpace.uniform(max(form.min_size(), 1))
    if space.size < form.min_size():
        raise ValueError(f"{type(form).__name__} reads {form.min_size()} points but the space has {space.size}")
    return space, FieldSampler(space.size, rng if rng is not None else np.random.default_rng(0))


def _check_count(n: int, name: str = "n_samples") -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n}")


# ---------------------------------------------------------------------------
# margins shared by the checks and by replay

def minmax_margin(form: EnergyForm, u, v) -> Tuple[float, float]:
    low, high = meet_join(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    eu, ev = form.evaluate(u), form.evaluate(v)
    return form.evaluate(high) + form.evaluate(low) - eu - ev, 1.0 + eu + ev


def h_alpha_margins(form: EnergyForm, u, v, alpha: float) -> Tuple[float, float, float]:
    """(symmetric margin, literal margin, scale) of the truncation inequality."""
    eu, ev = form.evaluate(u), form.evaluate(v)
    towards = form.evaluate(h_alpha(u, v, alpha))
    backwards = form.evaluate(h_alpha(v, u, alpha))
    return towards + backwards - eu - ev, 2.0 * towards - eu - ev, 1.0 + eu + ev


def contraction_margin(form: EnergyForm, phi: LipschitzMap, u) -> Tuple[float, float]:
    eu = form.evaluate(u)
    return form.evaluate(apply_contraction(phi, u)) - eu, 1.0 + eu


def homogeneity_margin(form: EnergyForm, u, nu: float) -> Tuple[float, float]:
    """E(nu u) against nu^2 E(sign(nu) u); E(-u) = E(u) is the symmetry record's concern."""
    u = np.asarray(u, dtype=float)
    reference = form.evaluate(u if nu >= 0 else -u)
    return abs(form.evaluate(nu * u) - nu * nu * reference), 1.0 + nu * nu * reference


def slope_bound_margin(form: EnergyForm, u, v, left: float, right: float) -> Tuple[float, float]:
    """
    sqrt(E) is sublinear, so right(u, v) <= 2 sqrt(E(u) E(v)) and
    left(u, v) = -right(u, -v) >= -2 sqrt(E(u) E(-v)). Without symmetry the
    two sides differ and |slope| <= 2 sqrt(E(u) E(v)) does not hold.
    """
    v = np.asarray(v, dtype=float)
    root_u = math.sqrt(form.evaluate(u))
    upper = 2.0 * root_u * math.sqrt(form.evaluate(v))
    lower = -2.0 * root_u * math.sqrt(form.evaluate(-v))
    return max(right - upper, lower - left), 1.0 + max(upper, -lower)


def locality_margin(form: EnergyForm, u, v) -> Tuple[float, float]:
    eu, ev = form.evaluate(u), form.evaluate(v)
    return abs(form.evaluate(np.asarray(u, dtype=float) + np.asarray(v, dtype=float)) - eu - ev), 1.0 + eu + ev


def convexity_margin(form: EnergyForm, u, v, t: float) -> Tuple[float, float]:
    eu, ev = form.evaluate(u), form.evaluate(v)
    mixed = t * np.asarray(u, dtype=float) + (1.0 - t) * np.asarray(v, dtype=float)
    return form.evaluate(mixed) - t * eu - (1.0 - t) * ev, 1.0 + eu + ev


REPLAYERS: Dict[str, Callable[[EnergyForm, Dict[str, Any]], float]] = {
    "minmax": lambda form, p: minmax_margin(form, p["u"], p["v"])[0],
    "h_alpha_symmetric": lambda form, p: h_alpha_margins(form, p["u"], p["v"], float(p["alpha"]))[0],
    "h_alpha_literal": lambda form, p: h_alpha_margins(form, p["u"], p["v"], float(p["alpha"]))[1],
    "contraction": lambda form, p: contraction_margin(
        form, LipschitzMap(tuple(p["phi"]["breakpoints"]), tuple(p["phi"]["slopes"]), p["phi"]["label"]), p["u"])[0],
    "homogeneity": lambda form, p: homogeneity_margin(form, p["u"], p["nu"])[0],
    "locality": lambda form, p: locality_margin(form, p["u"], p["v"])[0],
    "convexity": lambda form, p: convexity_margin(form, p["u"], p["v"], p["t"])[0],
}


def replay_counterexample(form: EnergyForm, payload: Dict[str, Any]) -> float:
    """Recompute the margin stored in a closed-form counterexample payload."""
    check = payload.get("check")
    if check not in REPLAYERS:
        raise ValueError(f"Payload check '{check}' is not replayable. Replayable checks: {list(REPLAYERS)}")
    fields = {key: np.asarray(value, dtype=float) if key in ("u", "v") else value for key, value in payload.items()}
    return float(REPLAYERS[check](form, fields))


# ---------------------------------------------------------------------------
# closed-form checks

def check_minmax(form: EnergyForm, n_samples: int, tol: Optional[float] = None, space: Optional[MeasureSpace] = None,
                 rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """E(u max v) + E(u min v) <= E(u) + E(v) over mixed random pairs."""
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    structure = form.locality(space.size)
    tracker = MarginTracker("minmax", "lattice inequality E(u max v) + E(u min v) <= E(u) + E(v)", "closed-form", tol)
    for k in range(n_samples):
        pair = sampler.disjoint_pair(structure) if k % 10 == 9 else None
        u, v = pair or sampler.pair()
        margin, scale = minmax_margin(form, u, v)
        tracker.observe(margin, scale, lambda: {"check": "minmax", "u": u, "v": v})
    return [tracker.build()]


def check_h_alpha(form: EnergyForm, n_samples: int, alpha_grid: Optional[Sequence[float]] = None,
                  tol: Optional[float] = None, space: Optional[MeasureSpace] = None,
                  rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """
    Truncation inequality in two readings:
    symmetric E(H(u,v)) + E(H(v,u)) <= E(u) + E(v) and literal 2 E(H(u,v)) <= E(u) + E(v).
    """
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    pairs = sampler.pairs(n_samples)
    widest = max(float(np.max(np.abs(u - v))) for u, v in pairs)
    grid = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0] if alpha_grid is None else [float(a) for a in alpha_grid]
    if 0.0 not in grid:
        raise ValueError("alpha_grid must contain 0")
    if any(a < 0 for a in grid):
        raise ValueError("alpha_grid values must be nonnegative")
    symmetric = MarginTracker("h_alpha_symmetric", "truncation E(H_a(u,v)) + E(H_a(v,u)) <= E(u) + E(v)", "closed-form", tol)
    literal = MarginTracker("h_alpha_literal", "truncation read as 2 E(H_a(u,v)) <= E(u) + E(v)", "closed-form", tol,
                            gating=False)
    if max(grid) < widest:
        grid.append(widest)
        symmetric.note(f"alpha grid extended by the widest sampled gap {widest:.6g}")
    literal.note("fails at alpha >= ||u - v||_inf whenever E(u) > E(v); reported, not used for the verdict")
    for u, v in pairs:
        for alpha in grid:
            sym, lit, scale = h_alpha_margins(form, u, v, alpha)
            symmetric.observe(sym, scale, lambda: {"check": "h_alpha_symmetric", "u": u, "v": v, "alpha": alpha})
            literal.observe(lit, scale, lambda: {"check": "h_alpha_literal", "u": u, "v": v, "alpha": alpha})
    return [symmetric.build(), literal.build()]


def _adversarial_fields(size: int, limit: int = 12) -> List[np.ndarray]:
    fields = []
    for i in range(size):
        for j in range(i + 1, size):
            if len(fields) >= limit:
                return fields
            field = np.zeros(size)
            field[i], field[j] = 2.0, -2.0
            fields.append(field)
    return fields


def check_normal_contraction(form: EnergyForm, n_samples: int, n_phi: int = 100, tol: Optional[float] = None,
                             space: Optional[MeasureSpace] = None,
                             rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """
    E(phi(u)) <= E(u) for the canonical normal contractions and n_phi random
    ones, plus the symmetry E(-u) <= E(u). Symmetry decides; the sampled
    contractions corroborate.
    """
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    fields = [sampler.field() for _ in range(n_samples)] + _adversarial_fields(space.size)
    records = []
    symmetry = MarginTracker("symmetry", "symmetry E(-u) <= E(u)", "closed-form", tol, gating=False)
    negation = NormalContraction.negation()
    for u in fields:
        margin, scale = contraction_margin(form, negation, u)
        symmetry.observe(margin, scale, lambda: {"check": "contraction", "phi": negation.describe(), "u": u})
    records.append(symmetry.build())

    for phi in NormalContraction.canonical():
        if phi.label == "negation":
            continue
        tracker = MarginTracker(f"contraction_{phi.label}", f"normal contraction E(phi(u)) <= E(u), phi={phi.label}",
                                "closed-form", tol, gating=False)
        for u in fields:
            margin, scale = contraction_margin(form, phi, u)
            tracker.observe(margin, scale, lambda: {"check": "contraction", "phi": phi.describe(), "u": u})
        records.append(tracker.build())

    if n_phi > 0:
        random_tracker = MarginTracker("contraction_random", "normal contraction E(phi(u)) <= E(u), random phi",
                                       "closed-form", tol, gating=False)
        subset = fields[: min(len(fields), 50)]
        excess = 0.0
        for _ in range(n_phi):
            phi = NormalContraction.random(sampler.rng)
            excess = max(excess, phi.lipschitz_excess(sampler.rng, n_samples=200))
            for u in subset:
                margin, scale = contraction_margin(form, phi, u)
                random_tracker.observe(margin, scale, lambda: {"check": "contraction", "phi": phi.describe(), "u": u})
        random_tracker.note(f"{n_phi} random maps, largest sampled Lipschitz excess {excess:.1e}")
        records.append(random_tracker.build())
    return records


def check_homogeneity_and_locality(form: EnergyForm, n_samples: int, tol: Optional[float] = None,
                                   space: Optional[MeasureSpace] = None,
                                   rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """2-homogeneity over HOMOGENEITY_NUS and additivity on decoupled pairs."""
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    homogeneity = MarginTracker("homogeneity", "2-homogeneity E(nu u) = nu^2 E(sign(nu) u)", "closed-form", tol,
                                gating=False)
    homogeneity.note("negative nu is compared with E(-u); E(-u) = E(u) is checked by the symmetry record")
    for _ in range(n_samples):
        u = sampler.field()
        for nu in HOMOGENEITY_NUS:
            margin, scale = homogeneity_margin(form, u, nu)
            homogeneity.observe(margin, scale, lambda: {"check": "homogeneity", "u": u, "nu": nu})

    structure = form.locality(space.size)
    locality = MarginTracker("locality", "locality E(u + v) = E(u) + E(v), u constant on supp v", "closed-form", tol,
                             gating=False)
    if not structure.local:
        locality.note("terms are coupled; additivity is expected to fail")
    for _ in range(n_samples):
        pair = sampler.disjoint_pair(structure)
        if pair is None:
            continue
        u, v = pair
        margin, scale = locality_margin(form, u, v)
        locality.observe(margin, scale, lambda: {"check": "locality", "u": u, "v": v})
    if locality.samples == 0:
        locality.note("no decoupled pairs exist on this space")
    return [homogeneity.build(), locality.build()]


def check_convexity(form: EnergyForm, n_samples: int, tol: Optional[float] = None,
                    space: Optional[MeasureSpace] = None,
                    rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Convexity along segments and the triangle inequality of sqrt(E)."""
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    convexity = MarginTracker("convexity", "convexity along segments", "closed-form", tol)
    seminorm = MarginTracker("seminorm", "sqrt(E) is a seminorm", "closed-form", tol, gating=False)
    for _ in range(n_samples):
        u, v = sampler.pair()
        t = sampler.scalar(0.0, 1.0)
        margin, scale = convexity_margin(form, u, v, t)
        convexity.observe(margin, scale, lambda: {"check": "convexity", "u": u, "v": v, "t": t})
        root_sum = math.sqrt(form.evaluate(u + v))
        bound = math.sqrt(form.evaluate(u)) + math.sqrt(form.evaluate(v))
        seminorm.observe(root_sum - bound, 1.0 + bound, lambda: {"u": u, "v": v})
    return [convexity.build(), seminorm.build()]


def check_energy_norm(form: EnergyForm, n_samples: int, tol: Optional[float] = None,
                      space: Optional[MeasureSpace] = None,
                      rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """
    The energy norm ||u||_E = sqrt(||u||_m^2 + E(u)): triangle inequality,
    absolute homogeneity, Lipschitz action, the product identity behind the
    algebra property, and whether the norm is Hilbertian.
    """
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)

    def energy_norm(u: np.ndarray) -> float:
        return math.sqrt(m_norm(u, space) ** 2 + form.evaluate(u))

    triangle = MarginTracker("energy_norm_triangle", "triangle inequality of the energy norm", "closed-form", tol,
                             gating=False)
    absolute = MarginTracker("energy_norm_homogeneity", "||c u||_E = |c| ||sign(c) u||_E", "closed-form", tol,
                             gating=False)
    absolute.note("absolute homogeneity for negative c also needs symmetry")
    action = MarginTracker("lipschitz_action", "E(phi(u)) <= L^2 E(u) for L-Lipschitz phi, phi(0) = 0",
                           "closed-form", tol, gating=False)
    algebra = MarginTracker("algebra_identity", "uv = ((u+v)^2 - u^2 - v^2)/2 with E(uv) finite", "closed-form", tol,
                            gating=False)
    hilbertian = MarginTracker("hilbertian", "parallelogram law of the energy norm", "closed-form", tol, gating=False)
    hilbertian.note("holds exactly for quadratic forms")
    action.note("guaranteed for symmetric Dirichlet forms; informational otherwise")
    for _ in range(n_samples):
        u, v = sampler.pair()
        nu, nv, nuv = energy_norm(u), energy_norm(v), energy_norm(u + v)
        triangle.observe(nuv - nu - nv, 1.0 + nu + nv, lambda: {"u": u, "v": v})
        for c in (-2.0, 0.5, 3.0):
            reference = nu if c >= 0 else energy_norm(-u)
            absolute.observe(abs(energy_norm(c * u) - abs(c) * reference), 1.0 + abs(c) * reference,
                             lambda: {"u": u, "c": c})
        for lipschitz in LIPSCHITZ_CONSTANTS:
            phi = NormalContraction.random(sampler.rng).scaled(lipschitz)
            eu = form.evaluate(u)
            action.observe(form.evaluate(phi(u)) - lipschitz ** 2 * eu, 1.0 + lipschitz ** 2 * eu,
                           lambda: {"u": u, "phi": phi.describe()})
        product = u * v
        identity = float(np.max(np.abs(product - 0.5 * ((u + v) ** 2 - u * u - v * v))))
        finite = math.isfinite(form.evaluate(product))
        algebra.observe(identity if finite else math.inf, 1.0 + float(np.max(np.abs(u)) * np.max(np.abs(v))),
                        lambda: {"u": u, "v": v})
        law = abs(energy_norm(u + v) ** 2 + energy_norm(u - v) ** 2 - 2.0 * nu ** 2 - 2.0 * nv ** 2)
        hilbertian.observe(law, 1.0 + nu ** 2 + nv ** 2, lambda: {"u": u, "v": v})
    return [triangle.build(), absolute.build(), action.build(), algebra.build(), hilbertian.build()]


# ---------------------------------------------------------------------------
# calculus at sampled points

def check_slopes(form: EnergyForm, n_samples: int, space: Optional[MeasureSpace] = None,
                 rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """One-sided slope bounds through sqrt(E(u) E(+-v)), slopes along u itself, reflection, and locality of slopes."""
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    bound = MarginTracker("slope_bound", "-2 sqrt(E(u) E(-v)) <= left <= right <= 2 sqrt(E(u) E(v))", "closed-form",
                          SLOPE_TOL, gating=False)
    itself = MarginTracker("slope_at_self", "slope(u, u) = 2 E(u)", "closed-form", SLOPE_TOL, gating=False)
    reflection = MarginTracker("slope_reflection", "right slope(u, -v) = -left slope(u, v)", "closed-form", SLOPE_TOL,
                               gating=False)
    for _ in range(n_samples):
        u, v = sampler.pair()
        eu = form.evaluate(u)
        enclosure = slope_enclosure(form, u, v, DEFAULT_SLOPE_TOL, space)
        margin, scale = slope_bound_margin(form, u, v, enclosure.left, enclosure.right)
        bound.observe(margin, scale, lambda: {"u": u, "v": v})
        own = slope_enclosure(form, u, u, DEFAULT_SLOPE_TOL, space)
        itself.observe_outcome(
            not own.certified or max(abs(own.left - 2 * eu), abs(own.right - 2 * eu)) > SLOPE_TOL * (1.0 + 2 * eu),
            max(abs(own.left - 2 * eu), abs(own.right - 2 * eu)), lambda: {"u": u})
        reflected = slope_enclosure(form, u, -v, DEFAULT_SLOPE_TOL, space)
        defect = abs(reflected.right + enclosure.left)
        reflection.observe(defect - max(enclosure.width, reflected.width), 1.0 + abs(enclosure.left),
                           lambda: {"u": u, "v": v})
    records = [bound.build(), itself.build(), reflection.build()]

    structure = form.locality(space.size)
    local = MarginTracker("slope_locality", "slope(u, v) = 0 for decoupled u, v", "closed-form", SLOPE_LOCALITY_TOL,
                          gating=False)
    if structure.local:
        for _ in range(max(1, n_samples // 10)):
            pair = sampler.disjoint_pair(structure)
            if pair is None:
                continue
            u, v = pair
            enclosure = slope_enclosure(form, u, v, DEFAULT_SLOPE_TOL, space)
            local.observe(max(abs(enclosure.left), abs(enclosure.right)), 1.0, lambda: {"u": u, "v": v})
    else:
        local.note("form is not local; skipped")
    records.append(local.build())
    return records


def check_regularity(form: EnergyForm, n_points: int, space: Optional[MeasureSpace] = None,
                     rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Largest gap between right and left slopes at sampled points."""
    _check_count(n_points, "n_points")
    space, sampler = _setup(form, space, rng)
    tracker = MarginTracker("regularity", "left slope = right slope in every direction", "closed-form", SLOPE_TOL,
                            gating=False)
    noisy = 0
    for _ in range(n_points):
        u = sampler.field()
        directions = [np.eye(space.size)[i] for i in range(space.size)]
        directions += [sampler.rng.standard_normal(space.size) for _ in range(5)]
        report = regularity_probe(form, u, directions, DEFAULT_SLOPE_TOL, space)
        noisy += report.uncertified
        direction = report.worst_direction
        tracker.observe(report.worst_gap, 1.0 + form.evaluate(u), lambda: {"u": u, "v": direction})
    if noisy:
        tracker.note(f"{noisy} enclosures did not certify")
    return [tracker.build()]


def check_quadraticity(form: EnergyForm, n_samples: int, space: Optional[MeasureSpace] = None,
                       rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Quadratic iff regular with symmetric slopes; cross-checked against the parallelogram law."""
    _check_count(n_samples)
    space, sampler = _setup(form, space, rng)
    samples = [sampler.pair() for _ in range(n_samples)]
    verdict = quadraticity_test(form, samples, SLOPE_TOL, space)
    witness = None
    if verdict.witness is not None and not verdict.quadratic:
        witness = {"u": verdict.witness[0].tolist(), "v": verdict.witness[1].tolist()}
    quadratic = PropertyRecord(
        name="quadraticity",
        anchor="quadratic iff regular and slope(u, v) = slope(v, u)",
        kind="closed-form",
        tolerance=SLOPE_TOL,
        samples=len(samples),
        violations=0 if verdict.quadratic else 1,
        worst_margin=max(verdict.symmetry_defect, verdict.parallelogram_defect),
        counterexample=witness,
        passed=verdict.quadratic,
        gating=False,
        notes=[
            f"regular={verdict.regular} symmetric={verdict.symmetric} parallelogram={verdict.parallelogram}",
            f"symmetry_defect={verdict.symmetry_defect:.3e} parallelogram_defect={verdict.parallelogram_defect:.3e}",
        ],
    )
    consistency = PropertyRecord(
        name="quadraticity_consistency",
        anchor="regular and symmetric iff parallelogram law",
        kind="closed-form",
        tolerance=SLOPE_TOL,
        samples=len(samples),
        violations=0 if verdict.consistent else 1,
        passed=verdict.consistent,
        gating=False,
    )
    return [quadratic, consistency]


# ---------------------------------------------------------------------------
# prox-mediated checks

def check_subgradients(form: EnergyForm, n_points: int, space: Optional[MeasureSpace] = None,
                       cfg: Optional[SolverSettings] = None,
                       rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Identities and sandwiches of the minimal subgradient at sampled points."""
    _check_count(n_points, "n_points")
    space, sampler = _setup(form, space, rng)
    cfg = cfg or SolverSettings()
    cdc2 = MarginTracker("cdc2", "(xi, u) = 2 E(u) for the minimal subgradient", "prox-mediated", CDC2_TOL,
                         gating=False)
    energy_bound = MarginTracker("energy_bound", "E(u) <= ||xi||_m ||u||_m / 2", "prox-mediated", gating=False)
    homogeneity = MarginTracker("subdifferential_homogeneity", "xi(c u) = c xi(u)", "prox-mediated", gating=False)
    sandwich = MarginTracker("sandwich", "left slope <= (xi, v) <= right slope", "prox-mediated", gating=False)
    yosida_limit = MarginTracker("yosida_sandwich", "lim (A_lambda u, v) between the slopes", "prox-mediated",
                                 gating=False)
    extended = MarginTracker("extended_subdifferential", "minimal subgradient is sandwiched in every direction",
                             "prox-mediated", gating=False)
    rejection = MarginTracker("extended_subdifferential_rejection", "perturbed candidates are rejected",
                              "prox-mediated", gating=False)
    uniqueness = MarginTracker("subgradient_uniqueness", "accepted candidates agree at regular points",
                               "prox-mediated", gating=False)
    failures = MarginTracker("subgradient_extraction", "Yosida values settle at every sampled point", "prox-mediated",
                             gating=False)
    for _ in range(n_points):
        u = sampler.field()
        try:
            eu = form.evaluate(u)
            xi = np.asarray(minimal_subgradient(form, u, space, cfg))
            cdc2.observe(abs(inner(xi, u, space) - 2.0 * eu), 1.0 + 2.0 * eu, lambda: {"u": u, "xi": xi})
            xi_norm = m_norm(xi, space)
            energy_bound.observe(eu - 0.5 * xi_norm * m_norm(u, space), 1.0, lambda: {"u": u, "xi": xi})
            scaled = np.asarray(minimal_subgradient(form, 2.0 * u, space, cfg))
            homogeneity.observe(m_norm(scaled - 2.0 * xi, space), 1.0 + 2.0 * xi_norm, lambda: {"u": u, "c": 2.0})

            for _ in range(3):
                v = sampler.field()
                report = sandwich_check(form, u, v, space, cfg, xi=xi)
                sandwich.observe(report.margin, 1.0 + xi_norm * m_norm(v, space), lambda: {"u": u, "v": v, "xi": xi})
            v = sampler.field()
            limit = yosida_sandwich_check(form, u, v, space=space, cfg=cfg)
            defect = limit.margin if limit.convergence_defect is None else max(limit.margin, limit.convergence_defect)
            yosida_limit.observe(defect,
                                 1.0 + abs(limit.lower) + abs(limit.upper), lambda: {"u": u, "v": v})

            basis = [np.eye(space.size)[i] for i in range(space.size)]
            directions = basis + [-e for e in basis] + [sampler.rng.standard_normal(space.size) for _ in range(10)]
            accepted = extended_subdifferential_check(form, u, xi, directions, space, PROX_MEDIATED_TOL)
            extended.observe_outcome(not accepted.accepted or accepted.scaling_closed is False, accepted.worst_margin,
                                     lambda: {"u": u, "xi": xi})
            point = int(sampler.rng.integers(space.size))
            axis = basis[point]
            enclosure = slope_enclosure(form, u, axis, DEFAULT_SLOPE_TOL, space)
            shift = 10.0 * (1.0 + abs(enclosure.left) + abs(enclosure.right) + xi_norm * math.sqrt(space.weights[point]))
            perturbed = xi + shift * axis / space.weights[point]
            rejected = extended_subdifferential_check(form, u, perturbed, directions, space, PROX_MEDIATED_TOL,
                                                      check_scaling=False)
            rejection.observe_outcome(rejected.accepted, -rejected.worst_margin, lambda: {"u": u, "xi": perturbed})

            gradient = analytic_gradient(form, u, space)
            if gradient is not None and regularity_probe(form, u, basis, DEFAULT_SLOPE_TOL, space).regular:
                other = extended_subdifferential_check(form, u, gradient, directions, space, PROX_MEDIATED_TOL,
                                                       check_scaling=False)
                if other.accepted:
                    uniqueness.observe(m_norm(gradient - xi, space), 1.0 + xi_norm, lambda: {"u": u, "xi": xi})
        except (SubgradientFailure, ProxFailure) as e:
            logging.warning(f"Subgradient checks skipped a point: {e}")
            failures.observe_outcome(True, 1.0, lambda: {"u": u, "error": f"{type(e).__name__}: {e}"})
            continue
        failures.observe_outcome(False, 0.0)
    if failures.violations:
        failures.note(f"{failures.violations} of {failures.samples} points skipped by the other subgradient records")
    return [tracker.build() for tracker in
            (cdc2, energy_bound, homogeneity, sandwich, yosida_limit, extended, rejection, uniqueness, failures)]


def check_envelopes(form: EnergyForm, n_points: int, space: Optional[MeasureSpace] = None,
                    cfg: Optional[SolverSettings] = None,
                    rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Envelope identity E_lambda(u) = (A_lambda u, u) / 2, monotonicity in lambda, 2-homogeneity."""
    _check_count(n_points, "n_points")
    space, sampler = _setup(form, space, rng)
    cfg = cfg or SolverSettings()
    identity = MarginTracker("envelope_identity", "E_lambda(u) = (A_lambda u, u) / 2", "prox-mediated", ENVELOPE_TOL,
                             gating=False)
    monotone = MarginTracker("envelope_monotone", "E_lambda(u) increases to E(u) as lambda decreases",
                             "prox-mediated", gating=False)
    homogeneity = MarginTracker("envelope_homogeneity", "E_lambda(2u) = 4 E_lambda(u)", "prox-mediated",
                                ENVELOPE_TOL, gating=False)
    for _ in range(n_points):
        u = sampler.field()
        eu = form.evaluate(u)
        values = []
        for lam in ENVELOPE_LAMBDAS:
            result = prox(form, u, lam, space, cfg)
            values.append(result.envelope)
            pairing = 0.5 * inner((u - np.asarray(result.minimizer)) / lam, u, space)
            identity.observe(abs(result.envelope - pairing), 1.0 + eu, lambda: {"u": u, "lambda": lam})
            doubled = envelope(form, 2.0 * u, lam, space, cfg)
            homogeneity.observe(abs(doubled - 4.0 * result.envelope), 1.0 + 4.0 * eu, lambda: {"u": u, "lambda": lam})
        steps = [values[k] - values[k + 1] for k in range(len(values) - 1)]
        monotone.observe(max(steps + [values[-1] - eu]), 1.0 + eu, lambda: {"u": u, "envelopes": values})
    return [identity.build(), monotone.build(), homogeneity.build()]


def check_prox(form: EnergyForm, n_pairs: int, space: Optional[MeasureSpace] = None,
               cfg: Optional[SolverSettings] = None,
               rng: Optional[np.random.Generator] = None) -> List[PropertyRecord]:
    """Nonexpansiveness of the resolvent in L^2(m)."""
    _check_count(n_pairs, "n_pairs")
    space, sampler = _setup(form, space, rng)
    cfg = cfg or SolverSettings()
    tracker = MarginTracker("prox_nonexpansive", "||prox u - prox v||_m <= ||u - v||_m", "prox-mediated", gating=False)
    for _ in range(n_pairs):
        u, v = sampler.pair()
        lam = float(10.0 ** sampler.rng.integers(-2, 1))
        pu = np.asarray(prox(form, u, lam, space, cfg).minimizer)
        pv = np.asarray(prox(form, v, lam, space, cfg).minimizer)
        distance = m_norm(u - v, space)
        tracker.observe(m_norm(pu - pv, space) - distance, 1.0 + distance, lambda: {"u": u, "v": v, "lambda": lam})
    return [tracker.build()]


def check_markov(form: EnergyForm, n_pairs: int, space: Optional[MeasureSpace] = None,
                 cfg: Optional[SolverSettings] = None, rng: Optional[np.random.Generator] = None,
                 t_grid: Sequence[float] = DEFAULT_T_GRID, p_grid: Sequence[float] = DEFAULT_P_GRID,
                 max_step: float = DEFAULT_MAX_STEP) -> List[PropertyRecord]:
    """Markov probes of the flow on pairs of which half are ordered."""
    _check_count(n_pairs, "n_pairs")
    space, sampler = _setup(form, space, rng)
    pairs = [sampler.ordered_pair() if k % 2 == 0 else sampler.pair() for k in range(n_pairs)]
    return markov_probe(form, pairs, t_grid, p_grid, space, cfg, max_step=max_step)


# ---------------------------------------------------------------------------
# the full audit

@dataclass(frozen=True)
class AuditBudget:
    """How a total sample budget is spread over closed-form and prox-mediated checks."""
    closed_form: int
    slope_pairs: int
    prox_points: int
    markov_pairs: int
    random_maps: int

    @classmethod
    def from_total(cls, budget: int) -> "AuditBudget":
        _check_count(budget, "budget")
        return cls(
            closed_form=budget,
            slope_pairs=max(1, budget // 2),
            prox_points=max(2, budget // 50),
            markov_pairs=max(2, budget // 50),
            random_maps=min(100, max(5, budget // 5)),
        )


def full_audit(form: EnergyForm, budget: int = 500, space: Optional[MeasureSpace] = None,
               cfg: Optional[SolverSettings] = None, seed: int = 0, t_grid: Sequence[float] = DEFAULT_T_GRID,
               max_step: float = DEFAULT_MAX_STEP) -> PropertyReport:
    """
    Run every check and aggregate the records into a PropertyReport.

    Sections draw from independent seeded streams, so the same seed gives a
    byte-identical report.
    """
    space, _ = _setup(form, space, None)
    cfg = cfg or SolverSettings()
    plan = AuditBudget.from_total(budget)
    n = plan.closed_form

    def stream(index: int) -> np.random.Generator:
        return section_rng(seed, index)

    sections = [
        AuditSection("convexity", "convexity along segments", "closed-form",
                     lambda: check_convexity(form, n, space=space, rng=stream(0))),
        AuditSection("minmax", "lattice inequality", "closed-form",
                     lambda: check_minmax(form, n, space=space, rng=stream(1))),
        AuditSection("h_alpha", "truncation inequality", "closed-form",
                     lambda: check_h_alpha(form, n, space=space, rng=stream(2))),
        AuditSection("normal_contraction", "normal contractions", "closed-form",
                     lambda: check_normal_contraction(form, n, plan.random_maps, space=space, rng=stream(3))),
        AuditSection("homogeneity_locality", "homogeneity and locality", "closed-form",
                     lambda: check_homogeneity_and_locality(form, n, space=space, rng=stream(4))),
        AuditSection("energy_norm", "energy norm", "closed-form",
                     lambda: check_energy_norm(form, n, space=space, rng=stream(5))),
        AuditSection("slopes", "one-sided slopes", "closed-form",
                     lambda: check_slopes(form, plan.slope_pairs, space=space, rng=stream(6))),
        AuditSection("regularity", "regularity", "closed-form",
                     lambda: check_regularity(form, plan.prox_points, space=space, rng=stream(7))),
        AuditSection("quadraticity", "quadraticity", "closed-form",
                     lambda: check_quadraticity(form, plan.prox_points, space=space, rng=stream(8))),
        AuditSection("prox", "resolvent", "prox-mediated",
                     lambda: check_prox(form, plan.prox_points, space=space, cfg=cfg, rng=stream(9))),
        AuditSection("envelopes", "Moreau-Yosida envelope", "prox-mediated",
                     lambda: check_envelopes(form, plan.prox_points, space=space, cfg=cfg, rng=stream(10))),
        AuditSection("subgradients", "minimal subgradient", "prox-mediated",
                     lambda: check_subgradients(form, plan.prox_points, space=space, cfg=cfg, rng=stream(11))),
        AuditSection("markov", "Markov property of the flow", "prox-mediated",
                     lambda: check_markov(form, plan.markov_pairs, space=space, cfg=cfg, rng=stream(12),
                                          t_grid=t_grid, max_step=max_step)),
    ]
    outcomes = AuditRunner().run_sections(sections)
    records = [record for outcome in outcomes for record in outcome.records]
    report = PropertyReport(
        form=form.descriptor(),
        space={"weights": list(space.weights)},
        seed=seed,
        budget=budget,
        records=records,
    )
    report.verdict = derive_verdict(form, space, records)
    report.findings = cross_validate(report)
    failed = [r.name for r in records if r.status == "error"]
    if failed:
        logging.warning(f"Audit sections ended in error: {failed}")
    logging.info(f"Audit of {type(form).__name__}: {', '.join(report.verdict.labels())}")
    return report


def _find(records: List[PropertyRecord], name: str) -> Optional[PropertyRecord]:
    return next((r for r in records if r.name == name), None)


def _label(record: Optional[PropertyRecord]) -> Optional[bool]:
    if record is None or record.status == "error":
        return None
    return record.passed


def _markov_records(records: List[PropertyRecord]) -> List[PropertyRecord]:
    return [r for r in records if r.name.startswith(MARKOV_PREFIX) or r.name == "order_preservation"]


def _is_dirichlet_record(record: PropertyRecord) -> bool:
    return (record.name in DIRICHLET_RECORDS or record.name in DIRICHLET_SECTIONS
            or record.name.startswith(MARKOV_PREFIX))


def derive_verdict(form: EnergyForm, space: MeasureSpace, records: List[PropertyRecord]) -> Verdict:
    """
    dirichlet-consistent needs convexity, the lattice inequality, the
    symmetric truncation inequality and every Markov record to pass.
    """
    deciding = [r for r in records if _is_dirichlet_record(r)]
    if any(r.status == "ok" and not r.passed for r in deciding):
        dirichlet = "not-dirichlet"
    elif any(r.status == "error" for r in deciding) or not deciding:
        dirichlet = "undetermined"
    else:
        dirichlet = "dirichlet-consistent"
    local = _label(_find(records, "locality"))
    if local is not None:
        local = local and form.locality(space.size).local
    return Verdict(
        dirichlet=dirichlet,
        symmetric=_label(_find(records, "symmetry")),
        regular=_label(_find(records, "regularity")),
        quadratic=_label(_find(records, "quadraticity")),
        local=local,
    )


def cross_validate(report: PropertyReport) -> List[Finding]:
    """Bug-level findings where results that theory ties together disagree."""
    findings = []
    records = report.records
    minmax, truncation = _find(records, "minmax"), _find(records, "h_alpha_symmetric")
    markov = _markov_records(records)
    if minmax and truncation and markov and all(r.status == "ok" for r in [minmax, truncation] + markov):
        lattice_ok = minmax.passed and truncation.passed
        markov_ok = all(r.passed for r in markov)
        if lattice_ok != markov_ok:
            findings.append(Finding(
                rule="lattice-vs-markov",
                message=(f"lattice and truncation inequalities {'pass' if lattice_ok else 'fail'} "
                         f"but Markov probes {'pass' if markov_ok else 'fail'}"),
            ))
    symmetry = _find(records, "symmetry")
    contractions = [r for r in records if r.name.startswith("contraction_") and r.status == "ok"]
    if report.verdict and report.verdict.dirichlet == "dirichlet-consistent" and symmetry and symmetry.status == "ok":
        failed = [r.name for r in contractions if not r.passed]
        if symmetry.passed and failed:
            findings.append(Finding(
                rule="symmetry-vs-contractions",
                message=f"symmetry passes but normal contractions fail: {failed}",
            ))
    consistency = _find(records, "quadraticity_consistency")
    if consistency and consistency.status == "ok" and not consistency.passed:
        findings.append(Finding(
            rule="quadraticity",
            message="regularity with symmetric slopes disagrees with the parallelogram law",
        ))
    return findings
