"""
dirichletlab

A finite-dimensional laboratory for 2-homogeneous nonlinear Dirichlet forms:
energies on weighted point sets, their resolvents and gradient flows,
one-sided slopes, and a sampled audit of the Dirichlet inequalities.
"""

from ._version import __version__

# Core classes
from .space import MeasureSpace, as_field, inner, lp_norm, m_norm, meet_join, unit_contraction, h_alpha
from .contractions import LipschitzMap, NormalContraction, apply_contraction
from .forms import (EnergyForm, QuadraticGraph, AnisotropicGraph, PowerSumSquared, QuadraticMatrix, CustomForm,
                    evaluate, analytic_gradient, analytic_slopes, locality_of, bilinear)
from .form_registry import FormRegistry, form_registry, register_form, create_form
from .solver_settings import SolverSettings
from .prox_engine import (ProxFailure, SubgradientFailure, ProxResult, prox, yosida, envelope, yosida_path,
                          minimal_subgradient, geometric_limit)
from .semigroup import Trajectory, FlowFailure, flow, exact_quadratic_flow, markov_probe
from .calculus import (SlopeEnclosure, slope_enclosure, regularity_probe, second_argument_linearity_check,
                       quadraticity_test, sandwich_check, yosida_sandwich_check, extended_subdifferential_check,
                       subdifferential_closure_check, energy_bound_check, subgradient_distance)
from .report import PropertyRecord, PropertyReport, Verdict, Finding
from .checker import (check_minmax, check_h_alpha, check_normal_contraction, check_homogeneity_and_locality,
                      check_energy_norm, check_convexity, full_audit, replay_counterexample)

# Configuration and storage
from .experiment import ExperimentConfig
from .experiment_loader import ExperimentLoader, ConfigError
from .storage_providers import StorageProviderBase, MemoryProvider, FileSystemProvider

__all__ = [
    '__version__',
    'MeasureSpace',
    'as_field',
    'inner',
    'lp_norm',
    'm_norm',
    'meet_join',
    'unit_contraction',
    'h_alpha',
    'LipschitzMap',
    'NormalContraction',
    'apply_contraction',
    # Forms
    'EnergyForm',
    'QuadraticGraph',
    'AnisotropicGraph',
    'PowerSumSquared',
    'QuadraticMatrix',
    'CustomForm',
    'evaluate',
    'analytic_gradient',
    'analytic_slopes',
    'locality_of',
    'bilinear',
    'FormRegistry',
    'form_registry',
    'register_form',
    'create_form',
    # Solvers
    'SolverSettings',
    'ProxFailure',
    'SubgradientFailure',
    'ProxResult',
    'prox',
    'yosida',
    'envelope',
    'yosida_path',
    'minimal_subgradient',
    'geometric_limit',
    'Trajectory',
    'FlowFailure',
    'flow',
    'exact_quadratic_flow',
    'markov_probe',
    # Calculus
    'SlopeEnclosure',
    'slope_enclosure',
    'regularity_probe',
    'second_argument_linearity_check',
    'quadraticity_test',
    'sandwich_check',
    'yosida_sandwich_check',
    'extended_subdifferential_check',
    'subdifferential_closure_check',
    'energy_bound_check',
    'subgradient_distance',
    # Audit
    'PropertyRecord',
    'PropertyReport',
    'Verdict',
    'Finding',
    'check_minmax',
    'check_h_alpha',
    'check_normal_contraction',
    'check_homogeneity_and_locality',
    'check_energy_norm',
    'check_convexity',
    'full_audit',
    'replay_counterexample',
    # Configuration
    'ExperimentConfig',
    'ExperimentLoader',
    'ConfigError',
    'StorageProviderBase',
    'MemoryProvider',
    'FileSystemProvider',
]
