"""
Data classes for the five-vertex lab.

These models carry the model definition (periodic weights, fields), lattice
configurations, conformal data at a point of the upper half-plane, limit-shape
data and the results of the oracle suites.

Lattice conventions used everywhere in the package:

- Vertex (x, y) has edges S = v[x, y], N = v[x, y+1], W = h[x, y],
  E = h[x+1, y]. Paths enter through S or E and leave through N or W.
- On a W x H torus both edge arrays have shape (W, H) and indices wrap.
- On a bounded W x H region v has shape (W, H+1) and h has shape (W+1, H).
- Face (a, b), 0 <= a <= W, 0 <= b <= H, has vertex (a, b) at its upper-right
  corner. Stepping right from face (a, b) adds v[a, b]; stepping up adds h[a, b].
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import List, Optional, Tuple

import numpy as np


class Regime(Enum):
    """Weight regime of a fundamental domain."""
    SMALL_R = "small_r"
    LARGE_R = "large_r"


class Topology(Enum):
    """Lattice on which a configuration lives."""
    TORUS = "torus"
    BOUNDED = "bounded"


class VertexType(Enum):
    """The five admissible local patterns."""
    EMPTY = "empty"
    VERTICAL = "vertical"        # S -> N
    HORIZONTAL = "horizontal"    # E -> W
    CORNER_SW = "corner_sw"      # S -> W
    CORNER_EN = "corner_en"      # E -> N

    @property
    def is_corner(self) -> bool:
        return self in (VertexType.CORNER_SW, VertexType.CORNER_EN)


class Phase(Enum):
    """Phase of the model at given fields."""
    DISORDERED = "disordered"
    FROZEN = "frozen"
    BOUNDARY = "boundary"


class AmoebaFlag(IntEnum):
    """Per-sample flag on an amoeba trace."""
    REGULAR = 0
    PINCH = 1
    CAPPED = 2


class MeshFlag(IntEnum):
    """Per-point flag on a limit-shape mesh."""
    OK = 0
    DEGENERATE = 1
    GAP = 2


@dataclass(frozen=True)
class FundamentalDomain:
    """Periodic weight data: r at vertex (x, y) is alphas[x % m1] * betas[y % m2]."""
    alphas: Tuple[float, ...]
    betas: Tuple[float, ...]
    regime: Regime

    @property
    def m1(self) -> int:
        return len(self.alphas)

    @property
    def m2(self) -> int:
        return len(self.betas)

    @property
    def alpha_array(self) -> np.ndarray:
        return np.asarray(self.alphas, dtype=float)

    @property
    def beta_array(self) -> np.ndarray:
        return np.asarray(self.betas, dtype=float)

    @property
    def products(self) -> np.ndarray:
        """Matrix r_ij = alpha_i * beta_j of shape (m1, m2)."""
        return np.outer(self.alpha_array, self.beta_array)

    @property
    def is_small_r(self) -> bool:
        return self.regime is Regime.SMALL_R

    def r(self, x: int, y: int) -> float:
        return self.alphas[x % self.m1] * self.betas[y % self.m2]

    def swapped(self) -> "FundamentalDomain":
        """Domain with the roles of rows and columns exchanged."""
        return FundamentalDomain(alphas=self.betas, betas=self.alphas, regime=self.regime)

    def as_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "betas": list(self.betas),
            "regime": self.regime.value,
        }


@dataclass(frozen=True)
class FieldPoint:
    """Magnetic field: e^X per occupied vertical edge, e^Y per occupied horizontal edge."""
    X: float
    Y: float

    def as_tuple(self) -> Tuple[float, float]:
        return (self.X, self.Y)


@dataclass(frozen=True)
class SlopePoint:
    """Slope (s, t) in the triangle s, t >= 0, s + t <= 1."""
    s: float
    t: float

    def in_triangle(self, tol: float = 0.0) -> bool:
        return self.s >= -tol and self.t >= -tol and self.s + self.t <= 1.0 + tol

    def as_tuple(self) -> Tuple[float, float]:
        return (self.s, self.t)

    @classmethod
    def from_tuple(cls, st: Tuple[float, float]) -> "SlopePoint":
        return cls(s=float(st[0]), t=float(st[1]))


@dataclass
class MNLPConfig:
    """Edge occupations of a monotone nonintersecting lattice path configuration."""
    width: int
    height: int
    vertical: np.ndarray
    horizontal: np.ndarray
    topology: Topology = Topology.TORUS

    def __post_init__(self):
        self.vertical = np.asarray(self.vertical, dtype=np.int8)
        self.horizontal = np.asarray(self.horizontal, dtype=np.int8)
        if self.vertical.shape != self.vertical_shape or self.horizontal.shape != self.horizontal_shape:
            raise ValueError(
                f"edge arrays have shapes {self.vertical.shape}, {self.horizontal.shape}; "
                f"expected {self.vertical_shape}, {self.horizontal_shape}"
            )

    @property
    def vertical_shape(self) -> Tuple[int, int]:
        if self.topology is Topology.TORUS:
            return (self.width, self.height)
        return (self.width, self.height + 1)

    @property
    def horizontal_shape(self) -> Tuple[int, int]:
        if self.topology is Topology.TORUS:
            return (self.width, self.height)
        return (self.width + 1, self.height)

    def vertex_edges(self, x: int, y: int) -> Tuple[int, int, int, int]:
        """Occupations (S, E, N, W) around vertex (x, y)."""
        if self.topology is Topology.TORUS:
            W, H = self.width, self.height
            return (
                int(self.vertical[x % W, y % H]),
                int(self.horizontal[(x + 1) % W, y % H]),
                int(self.vertical[x % W, (y + 1) % H]),
                int(self.horizontal[x % W, y % H]),
            )
        return (
            int(self.vertical[x, y]),
            int(self.horizontal[x + 1, y]),
            int(self.vertical[x, y + 1]),
            int(self.horizontal[x, y]),
        )

    def copy(self) -> "MNLPConfig":
        return MNLPConfig(self.width, self.height, self.vertical.copy(),
                          self.horizontal.copy(), self.topology)

    @classmethod
    def empty(cls, width: int, height: int, topology: Topology = Topology.TORUS) -> "MNLPConfig":
        if topology is Topology.TORUS:
            v_shape, h_shape = (width, height), (width, height)
        else:
            v_shape, h_shape = (width, height + 1), (width + 1, height)
        return cls(width, height, np.zeros(v_shape, dtype=np.int8),
                   np.zeros(h_shape, dtype=np.int8), topology)


@dataclass
class HeightMap:
    """Face heights; on a torus also the winding numbers (H_x, H_y)."""
    heights: np.ndarray
    winding: Optional[Tuple[int, int]] = None


@dataclass
class ConformalState:
    """Everything the conformal coordinate u determines."""
    u: complex
    w: np.ndarray
    z: np.ndarray
    one_minus_w: np.ndarray
    one_minus_z: np.ndarray
    theta: float
    s: float
    t: float
    X: float
    Y: float

    @property
    def slope(self) -> SlopePoint:
        return SlopePoint(self.s, self.t)

    @property
    def fields(self) -> FieldPoint:
        return FieldPoint(self.X, self.Y)


@dataclass(frozen=True)
class HarmonicBoundaryData:
    """
    Piecewise-constant boundary values on the real axis.

    The function equals left_value on (-inf, p_0) and values[k] on
    (p_k, p_{k+1}). Its bounded harmonic extension to the upper half-plane is
    values[-1] + sum_k kappa_k * arg(u - p_k) with kappa_k the jump
    (previous value minus next value) divided by pi.
    """
    left_value: float
    breakpoints: Tuple[float, ...]
    values: Tuple[float, ...]
    name: Optional[str] = None

    def __post_init__(self):
        if len(self.breakpoints) != len(self.values):
            raise ValueError("breakpoints and values must have equal length")
        if any(b >= a for a, b in zip(self.breakpoints[1:], self.breakpoints[:-1])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def kappas(self) -> np.ndarray:
        previous = np.concatenate([[self.left_value], self.values[:-1]])
        return (previous - np.asarray(self.values, dtype=float)) / np.pi

    @property
    def right_value(self) -> float:
        return self.values[-1] if self.values else self.left_value

    def value(self, u: complex) -> float:
        """Harmonic extension G(u) for Im u > 0."""
        p = np.asarray(self.breakpoints, dtype=float)
        return float(self.right_value + np.sum(self.kappas * np.angle(u - p)))

    def derivative(self, u: complex) -> complex:
        """Holomorphic derivative dG/du = sum_k kappa_k / (2i (u - p_k))."""
        p = np.asarray(self.breakpoints, dtype=float)
        return complex(np.sum(self.kappas / (2j * (u - p))))

    def step_value(self, x: float) -> float:
        """Boundary value at a real point that is not a breakpoint."""
        idx = int(np.searchsorted(self.breakpoints, x, side="right"))
        return self.left_value if idx == 0 else self.values[idx - 1]


@dataclass
class EnvelopePoint:
    """A point of the limit shape with the parameter u that produced it."""
    u: complex
    x: float
    y: float
    h: float
    s: float
    t: float
    theta: float
    flag: MeshFlag = MeshFlag.OK


@dataclass
class TransferMatrix:
    """Row transfer matrix restricted to the n-particle sector."""
    N: int
    n: int
    beta: float
    fields: FieldPoint
    basis: List[Tuple[int, ...]]
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass
class PhaseClassification:
    """Phase at given fields, with the maximizing slope and free energy."""
    phase: Phase
    slope: SlopePoint
    free_energy: float
    u: Optional[complex] = None
    tied: List[SlopePoint] = field(default_factory=list)


@dataclass
class AmoebaSample:
    u: complex
    X: float
    Y: float
    flag: AmoebaFlag = AmoebaFlag.REGULAR


@dataclass
class Tentacle:
    """A boundary point of the u half-plane at which the fields diverge."""
    point: float                      # real breakpoint, or inf
    direction: Tuple[float, float]    # asymptotic (dX, dY), normalized
    label: str = ""


@dataclass
class AmoebaTrace:
    samples: List[AmoebaSample]
    tentacles: List[Tentacle]
    epsilon: float
    cap: float


@dataclass
class TangencyPoint:
    """Where the frozen boundary touches a side of the region."""
    u: float
    x: float
    y: float
    line: str


@dataclass
class FrozenBoundary:
    """Frozen boundary polyline; None entries mark gaps at breakpoints."""
    points: List[Optional[Tuple[float, float]]]
    u_values: List[float]
    tangencies: List[TangencyPoint] = field(default_factory=list)

    def segments(self) -> List[np.ndarray]:
        """Split the polyline at gaps."""
        result, current = [], []
        for p in self.points:
            if p is None:
                if len(current) > 1:
                    result.append(np.asarray(current))
                current = []
            else:
                current.append(p)
        if len(current) > 1:
            result.append(np.asarray(current))
        return result


@dataclass
class Region:
    """
    Bounded region for Monte Carlo: a rectangle of faces, some held fixed.

    heights has shape (W+1, H+1); entries at faces with free[a, b] == False
    are boundary values, the rest are ignored on input.
    """
    heights: np.ndarray
    free: np.ndarray

    @property
    def width(self) -> int:
        return self.heights.shape[0] - 1

    @property
    def height(self) -> int:
        return self.heights.shape[1] - 1

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(self.free))


@dataclass
class HeightProfile:
    """Pointwise mean face height with standard errors."""
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int

    @property
    def variance(self) -> np.ndarray:
        return (self.stderr ** 2) * self.n_samples


@dataclass
class SampleRun:
    """Outcome of a batch of Metropolis chains on one region."""
    profile: HeightProfile
    final: np.ndarray
    burn_in: int
    sweeps: int
    seed: int
    acceptance: float = 0.0

    @property
    def n_chains(self) -> int:
        return self.final.shape[0]


@dataclass
class InvariantResult:
    """Outcome of one invariant check in the verification suite."""
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class DomainFile:
    """A parsed domain config file."""
    domain: FundamentalDomain
    fields: Optional[FieldPoint] = None
    name: str = ""
    source_text: str = ""
