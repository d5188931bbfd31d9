"""
Model definition: periodic weights, vertex weights with fields, configuration
weights and the height function.

Vertex weights: a corner turn has weight r, an empty vertex |1 - r^2|, a
pass-through 1. Each occupied vertical edge carries e^X and each occupied
horizontal edge e^Y.
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConfigParseError,
    CriticalWeightError,
    InvalidArgumentError,
    InvalidConfigurationError,
    RegimeError,
)
from .models import (
    DomainFile,
    FieldPoint,
    FundamentalDomain,
    HeightMap,
    MNLPConfig,
    Regime,
    Topology,
    VertexType,
)

logger = logging.getLogger(__name__)

# (S, E, N, W) -> pattern
_PATTERNS: Dict[Tuple[int, int, int, int], VertexType] = {
    (0, 0, 0, 0): VertexType.EMPTY,
    (1, 0, 1, 0): VertexType.VERTICAL,
    (0, 1, 0, 1): VertexType.HORIZONTAL,
    (1, 0, 0, 1): VertexType.CORNER_SW,
    (0, 1, 1, 0): VertexType.CORNER_EN,
}

_CRITICAL_RTOL = 1e-12


def build_domain(alphas: Sequence[float], betas: Sequence[float]) -> FundamentalDomain:
    """
    Build a fundamental domain and classify its regime.

    Args:
        alphas: Column weights (length m1), all positive.
        betas: Row weights (length m2), all positive.

    Raises:
        InvalidArgumentError: Empty or non-positive weights.
        CriticalWeightError: Some alpha_i * beta_j equals 1.
        RegimeError: Products on both sides of 1.
    """
    a = tuple(float(x) for x in alphas)
    b = tuple(float(x) for x in betas)
    if not a or not b:
        raise InvalidArgumentError("alphas and betas must be non-empty")
    if not all(np.isfinite(x) and x > 0 for x in a + b):
        raise InvalidArgumentError(f"weights must be positive and finite: {a}, {b}")

    products = np.outer(a, b)
    if np.any(np.isclose(products, 1.0, rtol=_CRITICAL_RTOL, atol=0.0)):
        raise CriticalWeightError(f"critical product alpha*beta = 1 in {products.tolist()}")
    if np.all(products < 1.0):
        regime = Regime.SMALL_R
    elif np.all(products > 1.0):
        regime = Regime.LARGE_R
    else:
        raise RegimeError(
            f"mixed products: min {products.min():.6g} < 1 < max {products.max():.6g}"
        )
    logger.debug("domain alphas=%s betas=%s regime=%s", a, b, regime.value)
    return FundamentalDomain(alphas=a, betas=b, regime=regime)


def vertex_type(S: int, E: int, N: int, W: int) -> VertexType:
    """Classify the local pattern at a vertex; the crossing and unbalanced patterns are rejected."""
    try:
        return _PATTERNS[(int(S), int(E), int(N), int(W))]
    except KeyError:
        raise InvalidConfigurationError(f"invalid local pattern S={S} E={E} N={N} W={W}") from None


def _vertex_edges(config: MNLPConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Arrays S, E, N, W of shape (width, height), one entry per vertex."""
    v = config.vertical.astype(np.int64)
    h = config.horizontal.astype(np.int64)
    if config.topology is Topology.TORUS:
        return v, np.roll(h, -1, axis=0), np.roll(v, -1, axis=1), h
    return v[:, :-1], h[1:, :], v[:, 1:], h[:-1, :]


def validate_config(config: MNLPConfig) -> None:
    """Raise InvalidConfigurationError unless every vertex has one of the five patterns."""
    v, h = config.vertical, config.horizontal
    if np.any((v < 0) | (v > 1)) or np.any((h < 0) | (h > 1)):
        raise InvalidConfigurationError("edge occupations must be 0 or 1")
    S, E, N, W = _vertex_edges(config)
    bad = (S + E != N + W) | (S + E > 1)
    if np.any(bad):
        x, y = np.argwhere(bad)[0]
        raise InvalidConfigurationError(
            f"invalid local pattern at vertex ({x}, {y}): "
            f"S={S[x, y]} E={E[x, y]} N={N[x, y]} W={W[x, y]}"
        )


def weight_grid(domain: FundamentalDomain, width: int, height: int) -> np.ndarray:
    """r at every vertex of a width x height patch, shape (width, height)."""
    a = domain.alpha_array[np.arange(width) % domain.m1]
    b = domain.beta_array[np.arange(height) % domain.m2]
    return np.outer(a, b)


def vertex_log_weights(config: MNLPConfig, domain: FundamentalDomain) -> np.ndarray:
    """Log vertex weight at every vertex, without field factors."""
    validate_config(config)
    S, E, N, W = _vertex_edges(config)
    r = weight_grid(domain, config.width, config.height)
    corner = S != N
    empty = (S + E) == 0
    out = np.zeros(r.shape)
    out[corner] = np.log(r[corner])
    out[empty] = np.log(np.abs(1.0 - r[empty] ** 2))
    return out


def edge_counts(config: MNLPConfig) -> Tuple[int, int]:
    """Numbers (h1, h2) of occupied vertical and horizontal edges."""
    return int(config.vertical.sum()), int(config.horizontal.sum())


def log_config_weight(config: MNLPConfig, domain: FundamentalDomain,
                      fields: Optional[FieldPoint] = None) -> float:
    """Natural log of config_weight."""
    fields = fields or FieldPoint(0.0, 0.0)
    h1, h2 = edge_counts(config)
    return float(vertex_log_weights(config, domain).sum() + fields.X * h1 + fields.Y * h2)


def config_weight(config: MNLPConfig, domain: FundamentalDomain,
                  fields: Optional[FieldPoint] = None) -> float:
    """
    Unnormalized Boltzmann weight e^{X h1 + Y h2} prod_corner r prod_empty |1 - r^2|.

    Raises:
        InvalidConfigurationError: If some vertex has an inadmissible pattern.
    """
    return float(np.exp(log_config_weight(config, domain, fields)))


def winding_numbers(config: MNLPConfig) -> Tuple[int, int]:
    """
    Height changes (H_x, H_y) along one horizontal and one vertical cycle of a torus.

    H_x counts paths crossing a horizontal cycle, H_y those crossing a vertical one.
    """
    if config.topology is not Topology.TORUS:
        raise InvalidArgumentError("winding numbers are defined on a torus only")
    return int(config.vertical[:, 0].sum()), int(config.horizontal[0, :].sum())


def height_function(config: MNLPConfig) -> HeightMap:
    """
    Face heights anchored at face (0, 0) = 0.

    The height increases by 1 when crossing a path rightwards or upwards. On a
    bounded region the result has shape (width+1, height+1). On a torus it has
    shape (width, height) and lives on the universal cover restricted to one
    period; the winding pair (H_x, H_y) is returned alongside.

    Raises:
        InvalidConfigurationError: If the configuration is invalid.
    """
    validate_config(config)
    v = config.vertical.astype(np.int64)
    h = config.horizontal.astype(np.int64)
    if config.topology is Topology.TORUS:
        first_column = np.concatenate([[0], np.cumsum(h[0, :-1])])
        steps = np.vstack([np.zeros((1, config.height), dtype=np.int64), v[:-1, :]])
        heights = first_column[None, :] + np.cumsum(steps, axis=0)
        return HeightMap(heights=heights, winding=winding_numbers(config))

    first_column = np.concatenate([[0], np.cumsum(h[0, :])])
    steps = np.vstack([np.zeros((1, config.height + 1), dtype=np.int64), v])
    heights = first_column[None, :] + np.cumsum(steps, axis=0)
    return HeightMap(heights=heights)


def config_from_heights(heights: np.ndarray) -> MNLPConfig:
    """
    Bounded-region configuration whose height function is `heights` (up to a constant).

    Raises:
        InvalidConfigurationError: If increments leave {0, 1} or a vertex would
            carry two incoming paths.
    """
    heights = np.asarray(heights, dtype=np.int64)
    v = np.diff(heights, axis=0)
    h = np.diff(heights, axis=1)
    if np.any((v < 0) | (v > 1)) or np.any((h < 0) | (h > 1)):
        raise InvalidConfigurationError("height increments must be 0 or 1")
    config = MNLPConfig(heights.shape[0] - 1, heights.shape[1] - 1, v, h, Topology.BOUNDED)
    validate_config(config)
    return config


# =============================================================================
# Config files
# =============================================================================

_KNOWN_KEYS = ("alphas", "betas", "X", "Y", "name")


def _parse_number(token: str, line: int) -> float:
    try:
        return float(Fraction(token.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigParseError(f"not a number: {token.strip()!r}", line) from None


def parse_domain_config(text: str) -> DomainFile:
    """
    Parse the `key = value` domain format.

    Keys: `alphas`, `betas` (comma separated, fractions like 5/4 allowed),
    optional `X`, `Y` (fields) and `name`. `#` starts a comment.

    Raises:
        ConfigParseError: With the 1-based line number of the offending line.
    """
    values: Dict[str, Tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigParseError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigParseError(f"empty value for {key!r}", lineno)
        values[key] = (value, lineno)

    for key in ("alphas", "betas"):
        if key not in values:
            raise ConfigParseError(f"missing required key {key!r}")

    weights = {}
    for key in ("alphas", "betas"):
        value, lineno = values[key]
        weights[key] = [_parse_number(tok, lineno) for tok in value.split(",")]

    fields = None
    if "X" in values or "Y" in values:
        X = _parse_number(values["X"][0], values["X"][1]) if "X" in values else 0.0
        Y = _parse_number(values["Y"][0], values["Y"][1]) if "Y" in values else 0.0
        fields = FieldPoint(X, Y)

    domain = build_domain(weights["alphas"], weights["betas"])
    name = values["name"][0] if "name" in values else ""
    return DomainFile(domain=domain, fields=fields, name=name, source_text=text)


def read_domain_config(path: Union[str, Path]) -> DomainFile:
    """Read and parse a domain config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read {path}: {e}") from e
    logger.info("loaded domain config %s", path)
    return parse_domain_config(text)
