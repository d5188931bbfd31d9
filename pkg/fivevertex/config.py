"""
Configuration module for fivevertex.

Centralizes numerical tolerances, sampling schedules, size guards and output
settings. Most values can be overridden through FIVEVERTEX_* environment
variables (or a .env file when python-dotenv is installed).
"""

import os
from pathlib import Path

# Try to load .env file if python-dotenv is available
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


# =============================================================================
# Special Functions
# =============================================================================

# Number of Bernoulli terms in the dilogarithm series
DILOG_SERIES_TERMS = 40

# Quadrature oracle tolerances
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-13
QUAD_LIMIT = 400


# =============================================================================
# Conformal Inversion
# =============================================================================

# Initial-guess grid for the u <- (s,t) and u <- (X,Y) solvers
INVERSION_GRID_SIZE = 64

# Logistic angle chart: phi = pi / (1 + exp(-eta)), eta in [-ETA_MAX, ETA_MAX]
ETA_MAX = 18.0
# Log-radius chart: u = exp(rho + i phi), rho in [-RHO_MAX, RHO_MAX]
RHO_MAX = 18.0

NEWTON_TOLERANCE = 1e-13
NEWTON_MAX_ITERATIONS = 100
# Number of extra grid starts tried before giving up
NEWTON_FALLBACK_STARTS = 8

# Warn when the inverse lands this close to the real axis (in angle)
BOUNDARY_ANGLE_TOLERANCE = 1e-5

# Finite-difference step (relative) for Wirtinger / Jacobian estimates
FD_STEP = 1e-5
# Hessian step in slope space
HESSIAN_STEP = 1e-4


# =============================================================================
# Phase Diagram
# =============================================================================

# Fields beyond this magnitude are truncated and marked as tentacles
FIELD_CAP = _env_float("FIVEVERTEX_FIELD_CAP", 30.0)

# CLI epsilon schedule for amoeba tracing (library extrapolates eps and eps/10)
AMOEBA_EPSILON = 1e-2

# Tentacle detection: a boundary point diverges if fields move by more than
# this between the two probe heights
TENTACLE_JUMP = 0.5

# Relative gap for declaring a tie between two frozen candidates
PHASE_TIE_TOLERANCE = 1e-9


# =============================================================================
# Limit Shapes
# =============================================================================

# Relative determinant threshold for the envelope linear system
ENVELOPE_DEGENERACY = 1e-12

# Offset from the real axis used for tangency points
TANGENCY_OFFSET = 1e-8


# =============================================================================
# Lattice Oracles
# =============================================================================

# Enumeration guard: total number of edges 2*N*N on the torus
MAX_ENUMERATION_EDGES = _env_int("FIVEVERTEX_MAX_ENUMERATION_EDGES", 32)

# Largest sector dimension handled by a dense exact trace
MAX_SECTOR_DIM = _env_int("FIVEVERTEX_MAX_SECTOR_DIM", 1000)

# Region enumeration guard (number of height functions visited)
MAX_REGION_STATES = 2_000_000


# =============================================================================
# Monte Carlo
# =============================================================================

DEFAULT_SEED = _env_int("FIVEVERTEX_SEED", 20240101)
DEFAULT_CHAINS = 10
DEFAULT_WORKERS = _env_int("FIVEVERTEX_WORKERS", 1)

# Burn-in sweeps = ceil(BURN_IN_FACTOR * log(area))
BURN_IN_FACTOR = 50.0


# =============================================================================
# Output Settings
# =============================================================================

DEFAULT_OUTPUT_DIR = Path(os.getenv("FIVEVERTEX_OUTPUT_DIR", "fivevertex_out"))

# Default grid resolution for CLI batch commands
DEFAULT_GRID = 41
DEFAULT_SAMPLES = 400

VERIFY_REPORT_FILENAME = "verify_report.json"


def get_field_cap() -> float:
    """Get the field magnitude above which amoeba points are capped."""
    return FIELD_CAP


def get_default_seed() -> int:
    """Get the default RNG seed for sampling commands."""
    return DEFAULT_SEED


def get_output_dir() -> Path:
    """Get the default output directory."""
    return DEFAULT_OUTPUT_DIR


def get_max_enumeration_edges() -> int:
    """Get the size guard for exhaustive torus enumeration."""
    return MAX_ENUMERATION_EDGES


def get_max_sector_dim() -> int:
    """Get the largest transfer-matrix sector handled by a dense trace."""
    return MAX_SECTOR_DIM
