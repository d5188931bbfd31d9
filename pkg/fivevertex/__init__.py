"""fivevertex - Thermodynamics, limit shapes and sampling for the staggered genus-zero five-vertex model"""

__version__ = "0.1.0"
__author__ = "fivevertex developers"

# Core functionality
from .special_functions import bfunc, dilog
from .model_core import build_domain, config_weight, height_function, read_domain_config
from .conformal import coords_from_u, fields_from_u, slopes_from_u, u_from_fields, u_from_slopes
from .thermodynamics import coexistence_boundary, free_energy, surface_tension
from .phase_diagram import amoeba_boundary, classify_phase
from .limit_shape import builtin_G, frozen_boundary, limit_shape_mesh
from .lattice_verification import enumerate_torus, finite_size_free_energy, transfer_partition_function
from .sampler import empirical_height_profile, mcmc_sample, run_chains
from .invariants import run_invariants

# Expose main functionality
__all__ = [
    "amoeba_boundary",
    "bfunc",
    "build_domain",
    "builtin_G",
    "classify_phase",
    "coexistence_boundary",
    "config_weight",
    "coords_from_u",
    "dilog",
    "empirical_height_profile",
    "enumerate_torus",
    "fields_from_u",
    "finite_size_free_energy",
    "free_energy",
    "frozen_boundary",
    "height_function",
    "limit_shape_mesh",
    "mcmc_sample",
    "read_domain_config",
    "run_chains",
    "run_invariants",
    "slopes_from_u",
    "surface_tension",
    "transfer_partition_function",
    "u_from_fields",
    "u_from_slopes",
]
