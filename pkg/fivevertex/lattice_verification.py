"""
Discrete oracles on small tori.

Exhaustive enumeration, row and column transfer matrices, the commutation
check, the polynomial coefficient identity and finite-size free energies.
Everything here is computed from the local vertex rules only and serves as an
independent check on the closed forms in thermodynamics.
"""

import logging
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigs
from scipy.special import logsumexp

from .config import get_max_enumeration_edges, get_max_sector_dim
from .errors import InvalidArgumentError, SizeLimitError
from .model_core import build_domain, log_config_weight, winding_numbers
from .models import FieldPoint, FundamentalDomain, MNLPConfig, Topology, TransferMatrix

logger = logging.getLogger(__name__)

_CHUNK = 256  # basis vectors pushed through a row sweep at once


def _check_size(N: int, domain: FundamentalDomain) -> None:
    if N < 1 or N % domain.m1 or N % domain.m2:
        raise InvalidArgumentError(f"N={N} must be a positive multiple of m1={domain.m1} and m2={domain.m2}")


def _fields(fields: Optional[FieldPoint]) -> FieldPoint:
    return fields if fields is not None else FieldPoint(0.0, 0.0)


# =============================================================================
# Enumeration
# =============================================================================

# (S, W) -> [(N, E), ...] for paths running north and west: S + E = N + W, S + E <= 1
_TRANSITIONS = {
    (0, 0): ((0, 0), (1, 1)),
    (0, 1): ((0, 1),),
    (1, 0): ((1, 0),),
    (1, 1): ((0, 0),),
}


def _row_configs(N: int, bottom: Tuple[int, ...]):
    """
    All rows over a given bottom occupation.

    Yields (top, west) where west[x] is the horizontal edge on the left of
    vertex x; the row is periodic, so the edge right of vertex N-1 is west[0].
    """
    for c0 in (0, 1):
        top, west = [0] * N, [0] * N

        def walk(x, c):
            if x == N:
                if c == c0:
                    yield tuple(top), tuple(west)
                return
            west[x] = c
            for n_out, e_out in _TRANSITIONS[(bottom[x], c)]:
                top[x] = n_out
                yield from walk(x + 1, e_out)

        yield from walk(0, c0)


def enumerate_torus(N: int, domain: FundamentalDomain,
                    fields: Optional[FieldPoint] = None) -> List[Tuple[MNLPConfig, float, Tuple[int, int]]]:
    """
    Every configuration of the N x N torus with its weight and winding pair.

    Raises:
        InvalidArgumentError: If N is not a multiple of m1 and m2.
        SizeLimitError: If the torus has more edges than the enumeration guard.
    """
    _check_size(N, domain)
    if 2 * N * N > get_max_enumeration_edges():
        raise SizeLimitError(f"torus with {2 * N * N} edges exceeds the enumeration limit "
                             f"of {get_max_enumeration_edges()}")
    fields = _fields(fields)
    cache: Dict[Tuple[int, ...], list] = {}

    def rows(bottom):
        if bottom not in cache:
            cache[bottom] = list(_row_configs(N, bottom))
        return cache[bottom]

    results = []
    v = np.zeros((N, N), dtype=np.int8)
    h = np.zeros((N, N), dtype=np.int8)

    def fill(y, bottom, first):
        if y == N:
            if bottom != first:
                return
            config = MNLPConfig(N, N, v.copy(), h.copy(), Topology.TORUS)
            logw = log_config_weight(config, domain, fields)
            results.append((config, float(np.exp(logw)), winding_numbers(config)))
            return
        v[:, y] = bottom
        for top, west in rows(bottom):
            h[:, y] = west
            fill(y + 1, top, first)

    for bits in range(2 ** N):
        first = tuple((bits >> x) & 1 for x in range(N))
        fill(0, first, first)

    logger.info("enumerated %d configurations on the %dx%d torus", len(results), N, N)
    return results


def sector_sums(enumeration: Sequence[Tuple[MNLPConfig, float, Tuple[int, int]]]) -> Dict[Tuple[int, int], float]:
    """Total weight per winding sector (H_x, H_y)."""
    sums: Dict[Tuple[int, int], float] = {}
    for _, weight, winding in enumeration:
        sums[winding] = sums.get(winding, 0.0) + weight
    return dict(sorted(sums.items()))


# =============================================================================
# Row sweep
# =============================================================================

def _vertex_factors(r: float, fields: FieldPoint):
    """Weights of (empty, vertical, horizontal, S-W corner, E-N corner) with field factors on N and E."""
    eX, eY = np.exp(fields.X), np.exp(fields.Y)
    return abs(1.0 - r * r), eX, eY, r, r * eX * eY


def _row_sweep(psi: np.ndarray, N: int, rs: np.ndarray, fields: FieldPoint,
               scale: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Push a batch of occupation vectors through one row.

    psi has shape (2**N, k); index bit x is the vertical edge below vertex x.
    Returns psi' with psi'[top, j] = sum_bottom psi[bottom, j] T[bottom, top].
    Each vertex step is divided by scale[x] when given.
    """
    k = psi.shape[1]
    out = np.zeros_like(psi)
    for c0 in (0, 1):
        cur = [psi.copy(), np.zeros_like(psi)]
        if c0 == 1:
            cur = [np.zeros_like(psi), psi.copy()]
        for x in range(N):
            factors = np.array(_vertex_factors(rs[x], fields))
            if scale is not None:
                factors /= scale[x]
            empty, vert, horiz, corner_sw, corner_en = factors
            shape = (2 ** (N - x - 1), 2, 2 ** x, k)
            p0 = cur[0].reshape(shape)
            p1 = cur[1].reshape(shape)
            n0 = np.empty_like(p0)
            n1 = np.empty_like(p1)
            # E = 0
            n0[:, 0] = empty * p0[:, 0] + corner_sw * p1[:, 1]
            n0[:, 1] = vert * p0[:, 1]
            # E = 1
            n1[:, 0] = horiz * p1[:, 0]
            n1[:, 1] = corner_en * p0[:, 0]
            cur = [n0.reshape(psi.shape), n1.reshape(psi.shape)]
        out += cur[c0]
    return out


def _row_weights(N: int, beta: float, domain: FundamentalDomain) -> np.ndarray:
    return domain.alpha_array[np.arange(N) % domain.m1] * beta


def sector_basis(N: int, n: int) -> List[Tuple[int, ...]]:
    """n-subsets of {0..N-1} in lexicographic order."""
    return list(combinations(range(N), n))


def build_transfer_matrix(N: int, n: int, beta: float, domain: FundamentalDomain,
                          fields: Optional[FieldPoint] = None) -> TransferMatrix:
    """
    Row transfer matrix in the n-particle sector.

    Entry (x, z) is the total weight of rows whose occupied vertical edges are
    x below and z above, including e^X per occupied upper edge and e^Y per
    occupied horizontal edge.

    Raises:
        InvalidArgumentError: If n is outside [0, N].
        SizeLimitError: If the sector is larger than the dense limit.
    """
    if not (0 <= n <= N):
        raise InvalidArgumentError(f"particle number n={n} outside [0, {N}]")
    fields = _fields(fields)
    basis = sector_basis(N, n)
    dim = len(basis)
    if dim > get_max_sector_dim():
        raise SizeLimitError(f"sector N={N}, n={n} has dimension {dim} > {get_max_sector_dim()}")

    masks = np.array([sum(1 << x for x in b) for b in basis], dtype=np.int64)
    rs = _row_weights(N, beta, domain)
    entries = np.empty((dim, dim))
    for start in range(0, dim, _CHUNK):
        cols = masks[start:start + _CHUNK]
        psi = np.zeros((2 ** N, len(cols)))
        psi[cols, np.arange(len(cols))] = 1.0
        pushed = _row_sweep(psi, N, rs, fields)
        entries[start:start + len(cols), :] = pushed[masks, :].T
    return TransferMatrix(N=N, n=n, beta=float(beta), fields=fields, basis=basis, entries=entries)


def check_commutation(N: int, n: int, beta1: float, beta2: float, domain: FundamentalDomain,
                      fields: Optional[FieldPoint] = None) -> float:
    """
    Relative commutator max|T1 T2 - T2 T1| / max|T1 T2| in the n-particle sector.
    """
    T1 = build_transfer_matrix(N, n, beta1, domain, fields).entries
    T2 = build_transfer_matrix(N, n, beta2, domain, fields).entries
    P = T1 @ T2
    scale = max(float(np.abs(P).max()), np.finfo(float).tiny)
    return float(np.abs(P - T2 @ T1).max() / scale)


def _log_sector_trace(N: int, n: int, domain: FundamentalDomain, fields: FieldPoint) -> float:
    """log Tr(T_{beta_0} ... T_{beta_{N-1}}) with renormalized products."""
    mats = {j: build_transfer_matrix(N, n, b, domain, fields).entries
            for j, b in enumerate(domain.betas)}
    M = np.eye(len(sector_basis(N, n)))
    log_scale = 0.0
    for y in range(N):
        M = M @ mats[y % domain.m2]
        norm = float(np.abs(M).max())
        if norm == 0.0:
            return -np.inf
        M /= norm
        log_scale += np.log(norm)
    tr = float(np.trace(M))
    return log_scale + np.log(tr) if tr > 0 else -np.inf


def transfer_partition_function(N: int, domain: FundamentalDomain, fields: Optional[FieldPoint] = None,
                                by_sector: bool = False):
    """
    Z_N = sum_n Tr(prod_y T_{beta_y}) on the N x N torus.

    Returns Z, or {n: Z_n} when by_sector is set. Z_n collects the
    configurations with H_x = n.
    """
    _check_size(N, domain)
    fields = _fields(fields)
    logs = {n: _log_sector_trace(N, n, domain, fields) for n in range(N + 1)}
    if by_sector:
        return {n: float(np.exp(v)) for n, v in logs.items()}
    return float(np.exp(logsumexp(list(logs.values()))))


def reflected_domain(domain: FundamentalDomain) -> FundamentalDomain:
    """
    Weights after the reflection (x, y) -> (-y, -x).

    Vertical and horizontal edges trade places, so the row parameters become
    the reversed column parameters and vice versa.
    """
    a, b = domain.alphas, domain.betas
    return build_domain([b[(-k) % len(b)] for k in range(len(b))],
                        [a[(-k) % len(a)] for k in range(len(a))])


def column_transfer_partition_function(N: int, domain: FundamentalDomain,
                                       fields: Optional[FieldPoint] = None) -> float:
    """Z_N from column transfer matrices, i.e. row transfer on the reflected lattice."""
    fields = _fields(fields)
    return transfer_partition_function(N, reflected_domain(domain), FieldPoint(fields.Y, fields.X))


# =============================================================================
# Free energy
# =============================================================================

def _strip_log_eigenvalue(N: int, domain: FundamentalDomain, fields: FieldPoint) -> float:
    """log of the spectral radius of one vertical period of row transfer matrices."""
    rows = [_row_weights(N, b, domain) for b in domain.betas]
    scales = [np.array([max(_vertex_factors(r, fields)) for r in rs]) for rs in rows]
    log_shift = float(sum(np.log(s).sum() for s in scales))

    def matvec(vec):
        psi = np.asarray(vec, dtype=float).reshape(-1, 1)
        for rs, sc in zip(rows, scales):
            psi = _row_sweep(psi, N, rs, fields, scale=sc)
        return psi.ravel()

    op = LinearOperator((2 ** N, 2 ** N), matvec=matvec, dtype=float)
    start = np.ones(2 ** N)
    vals = eigs(op, k=1, which="LM", v0=start, return_eigenvectors=False)
    return float(np.log(np.abs(vals[0])) + log_shift)


def finite_size_free_energy(N: int, domain: FundamentalDomain, fields: Optional[FieldPoint] = None,
                            method: str = "dense") -> float:
    """
    Finite-size free energy at width N.

    method="dense" is the torus value (1/N^2) log Z_N, summed exactly over
    the particle sectors; it needs every sector under the dense size limit.
    method="strip" is the cylinder value (1/(m2 N)) log lambda_N, with
    lambda_N the leading eigenvalue of one vertical period of width-N row
    transfer operators, found matrix-free. Both tend to F(X, Y), but they are
    different sequences and are never mixed.

    Raises:
        SizeLimitError: For method="dense" when a sector exceeds the limit.
        InvalidArgumentError: For an unknown method.
    """
    _check_size(N, domain)
    fields = _fields(fields)
    if method == "dense":
        largest = len(sector_basis(N, N // 2))
        if largest > get_max_sector_dim():
            raise SizeLimitError(f"torus N={N} has a sector of dimension {largest} > "
                                 f"{get_max_sector_dim()}; use method='strip' for the cylinder value")
        logs = [_log_sector_trace(N, n, domain, fields) for n in range(N + 1)]
        return float(logsumexp(logs)) / N ** 2
    if method == "strip":
        return _strip_log_eigenvalue(N, domain, fields) / (domain.m2 * N)
    raise InvalidArgumentError(f"unknown method {method!r}")


# =============================================================================
# Polynomial identity
# =============================================================================

Poly = Dict[Tuple[int, int], Fraction]


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, Fraction(0)) + c1 * c2
    return {k: v for k, v in out.items() if v != 0}


def elementary_symmetric(values: Sequence[Fraction]) -> List[Fraction]:
    """e_0..e_n of the given values."""
    e = [Fraction(1)] + [Fraction(0)] * len(values)
    for v in values:
        for k in range(len(values), 0, -1):
            e[k] += e[k - 1] * v
    return e


def apoly_expand(A: Sequence[float]) -> Poly:
    """Coefficients of sum_k A_k prod_{i<k}(1 - A_i x) prod_{i>k}(1 - A_i y), exactly."""
    if len(A) < 1:
        raise InvalidArgumentError("A must have at least one entry")
    A = [Fraction(a) for a in A]
    total: Poly = {}
    for k, ak in enumerate(A):
        term: Poly = {(0, 0): ak}
        for i, ai in enumerate(A):
            if i < k:
                term = _poly_mul(term, {(0, 0): Fraction(1), (1, 0): -ai})
            elif i > k:
                term = _poly_mul(term, {(0, 0): Fraction(1), (0, 1): -ai})
        for key, c in term.items():
            total[key] = total.get(key, Fraction(0)) + c
    return {k: v for k, v in sorted(total.items()) if v != 0}


def apoly_check(A: Sequence[float]) -> Tuple[Fraction, Poly]:
    """
    Compare the expansion with (-1)^(i+j) e_{i+j+1}(A) coefficient by coefficient.

    Floats are converted to fractions exactly, so the residual is an exact
    rational and vanishes when the identity holds.

    Returns:
        (largest absolute coefficient mismatch, coefficient table)
    """
    coeffs = apoly_expand(A)
    e = elementary_symmetric([Fraction(a) for a in A])
    n = len(A) - 1
    residual = Fraction(0)
    for i in range(n + 1):
        for j in range(n + 1 - i):
            expected = (-1) ** (i + j) * e[i + j + 1]
            residual = max(residual, abs(coeffs.get((i, j), Fraction(0)) - expected))
    for (i, j) in coeffs:
        if i + j > n:
            residual = max(residual, abs(coeffs[(i, j)]))
    return residual, coeffs
