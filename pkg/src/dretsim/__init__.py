"""Exciton transport with shared phonons: closed polaron dynamics,
phase-space resonance analysis, and hierarchy-based open dynamics."""

from .model import (BathSpec, MoleculeChain, SharedMode, UnitSystem,
                    DIMENSIONLESS, ValidationReport,
                    build_effective_electronic_hamiltonian,
                    build_polaron_hamiltonian, electronic_hamiltonian,
                    lamb_shift, spectral_density, bath_response_highT,
                    validate_bath, validate_chain, validate_mode)
from .closed import (FockTruncation, NumericalFailure, PolaronState,
                     TrajectoryResult, evolve_closed, initial_state,
                     output_times, reduced_electronic_state,
                     reduced_phonon_state, rms_displacement, simulate_closed,
                     site_populations, total_energy_expectation)
from .phasespace import (ContourPair, ContourRelation, NearResonanceBand,
                         PhaseContour, ResonanceReport, energy_surface,
                         near_resonance_band, pair_geometry, phase_contour,
                         resonance_intersections)
from .wigner import (GridTooSmall, WignerGrid, grid_normalization,
                     wigner_function, wigner_on_grid)
from .heom import (AdoSet, ConvergenceReport, HeomGenerator, HeomResult,
                   HierarchyIndex, build_generator, convergence_scan,
                   enumerate_hierarchy, heom_evolve, heom_rhs,
                   hierarchy_count)
from .scenarios import (KNOWN_CHECKS, ConfigError, RunConfig, ScenarioPreset,
                        config_from_dict, config_schema, load_config, preset,
                        preset_names, serialize)

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "MoleculeChain", "SharedMode", "UnitSystem", "DIMENSIONLESS",
    "ValidationReport", "build_effective_electronic_hamiltonian",
    "build_polaron_hamiltonian", "electronic_hamiltonian", "lamb_shift",
    "spectral_density", "bath_response_highT", "validate_bath",
    "validate_chain", "validate_mode",
    "FockTruncation", "NumericalFailure", "PolaronState", "TrajectoryResult",
    "evolve_closed", "initial_state", "output_times",
    "reduced_electronic_state", "reduced_phonon_state", "rms_displacement",
    "simulate_closed", "site_populations", "total_energy_expectation",
    "ContourPair", "ContourRelation", "NearResonanceBand", "PhaseContour",
    "ResonanceReport", "energy_surface", "near_resonance_band",
    "pair_geometry", "phase_contour", "resonance_intersections",
    "GridTooSmall", "WignerGrid", "grid_normalization", "wigner_function",
    "wigner_on_grid",
    "AdoSet", "ConvergenceReport", "HeomGenerator", "HeomResult",
    "HierarchyIndex", "build_generator", "convergence_scan",
    "enumerate_hierarchy", "heom_evolve", "heom_rhs", "hierarchy_count",
    "KNOWN_CHECKS", "ConfigError", "RunConfig", "ScenarioPreset",
    "config_from_dict", "config_schema", "load_config", "preset",
    "preset_names", "serialize",
    "__version__",
]
