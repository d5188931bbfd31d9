"""
Metropolis sampling of height functions on bounded regions.

A region is a rectangle of faces with some heights held fixed. The chain moves
one face at a time by +1 or -1 and accepts with the ratio of the products of
the (at most four) vertex weights touching that face. A sweep visits the four
face sublattices in turn; faces of one sublattice share no vertex, so each
sublattice is updated in one vectorized step, and a batch of chains is
advanced together with one random stream per chain.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from tqdm import tqdm

from .config import BURN_IN_FACTOR, DEFAULT_CHAINS, MAX_REGION_STATES, get_default_seed
from .errors import FeasibilityError, InvalidArgumentError, SizeLimitError
from .limit_shape import analytic_heights
from .model_core import config_from_heights, height_function, weight_grid
from .models import (
    EnvelopePoint,
    FundamentalDomain,
    HeightProfile,
    MNLPConfig,
    Region,
    SampleRun,
)

logger = logging.getLogger(__name__)

# Added to every constraint edge so zero-length edges survive sparse storage
_EDGE_EPS = 1e-6


# =============================================================================
# Heights and weights
# =============================================================================

def staircase_region(width: int, height: int) -> Region:
    """Rectangle of faces with boundary heights floor((a + b)/2) and a free interior."""
    if width < 2 or height < 2:
        raise InvalidArgumentError(f"region needs at least 2x2 vertices, got {width}x{height}")
    a, b = np.meshgrid(np.arange(width + 1), np.arange(height + 1), indexing="ij")
    heights = (a + b) // 2
    free = (a > 0) & (a < width) & (b > 0) & (b < height)
    return Region(heights=heights.astype(np.int64), free=free)


def log_weight_tables(domain: FundamentalDomain, width: int, height: int) -> Tuple[np.ndarray, np.ndarray]:
    """log r and log|1 - r^2| at every vertex of a width x height region."""
    r = weight_grid(domain, width, height)
    return np.log(r), np.log(np.abs(1.0 - r ** 2))


def height_log_weights(heights: np.ndarray, log_r: np.ndarray, log_empty: np.ndarray) -> np.ndarray:
    """
    Log vertex weights read off face heights.

    heights has shape (..., W+1, H+1); vertex (x, y) sits between faces
    (x, y), (x+1, y), (x, y+1) and (x+1, y+1).
    """
    p = heights[..., :-1, :-1]
    q = heights[..., 1:, :-1]
    s = heights[..., :-1, 1:]
    t = heights[..., 1:, 1:]
    empty = t == p
    corner = (q - p) != (t - s)
    return np.where(empty, log_empty, np.where(corner, log_r, 0.0))


def region_log_weight(heights: np.ndarray, domain: FundamentalDomain) -> np.ndarray:
    """Total log weight of one or more height functions on a region."""
    heights = np.asarray(heights)
    log_r, log_empty = log_weight_tables(domain, heights.shape[-2] - 1, heights.shape[-1] - 1)
    return height_log_weights(heights, log_r, log_empty).sum(axis=(-2, -1))


def invalid_faces(heights: np.ndarray) -> np.ndarray:
    """Faces touching a violated step: unit steps and the diagonal step must lie in {0, 1}."""
    bad = np.zeros(heights.shape, dtype=bool)
    dx = np.diff(heights, axis=-2)
    dy = np.diff(heights, axis=-1)
    dd = heights[..., 1:, 1:] - heights[..., :-1, :-1]
    bx = (dx < 0) | (dx > 1)
    by = (dy < 0) | (dy > 1)
    bd = (dd < 0) | (dd > 1)
    bad[..., :-1, :] |= bx
    bad[..., 1:, :] |= bx
    bad[..., :, :-1] |= by
    bad[..., :, 1:] |= by
    bad[..., :-1, :-1] |= bd
    bad[..., 1:, 1:] |= bd
    return bad


def _face_sums(vertex_values: np.ndarray) -> np.ndarray:
    """Sum of per-vertex values over the vertices around each face."""
    shape = vertex_values.shape[:-2] + (vertex_values.shape[-2] + 1, vertex_values.shape[-1] + 1)
    out = np.zeros(shape)
    out[..., :-1, :-1] += vertex_values
    out[..., 1:, :-1] += vertex_values
    out[..., :-1, 1:] += vertex_values
    out[..., 1:, 1:] += vertex_values
    return out


# =============================================================================
# Feasibility
# =============================================================================

def _constraint_edges(shape: Tuple[int, int]):
    """Edges u -> v with weight c encoding h(v) <= h(u) + c."""
    idx = np.arange(shape[0] * shape[1]).reshape(shape)
    pairs = [
        (idx[:-1, :], idx[1:, :]),
        (idx[:, :-1], idx[:, 1:]),
        (idx[:-1, :-1], idx[1:, 1:]),
    ]
    src, dst, weight = [], [], []
    for low, high in pairs:
        src += [low.ravel(), high.ravel()]
        dst += [high.ravel(), low.ravel()]
        weight += [np.ones(low.size), np.zeros(low.size)]
    return np.concatenate(src), np.concatenate(dst), np.concatenate(weight)


def _distances_from_fixed(n: int, src, dst, weight, fixed: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    source = n
    rows = np.concatenate([src, np.full(fixed.size, source)])
    cols = np.concatenate([dst, fixed])
    data = np.concatenate([weight, offsets]) + _EDGE_EPS
    graph = coo_matrix((data, (rows, cols)), shape=(n + 1, n + 1)).tocsr()
    return dijkstra(graph, directed=True, indices=source)[:n]


def height_bounds(region: Region) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pointwise lowest and highest height functions extending the fixed faces.

    Both are valid height functions; every extension lies between them.

    Raises:
        FeasibilityError: If no extension exists or some free face is unconstrained.
    """
    heights = np.asarray(region.heights, dtype=np.int64)
    shape = heights.shape
    n = heights.size
    fixed = np.flatnonzero(~region.free.ravel())
    if fixed.size == 0:
        raise FeasibilityError("region has no fixed faces")
    values = heights.ravel()[fixed]
    lo, hi = int(values.min()), int(values.max())

    src, dst, weight = _constraint_edges(shape)
    upper = _distances_from_fixed(n, src, dst, weight, fixed, (values - lo).astype(float))
    lower = _distances_from_fixed(n, dst, src, weight, fixed, (hi - values).astype(float))
    if not (np.all(np.isfinite(upper)) and np.all(np.isfinite(lower))):
        raise FeasibilityError("some faces are not tied to the fixed boundary")

    h_max = np.rint(upper + lo).astype(np.int64).reshape(shape)
    h_min = np.rint(hi - lower).astype(np.int64).reshape(shape)
    fixed_mask = ~region.free
    if np.any(h_max[fixed_mask] != heights[fixed_mask]) or np.any(h_min[fixed_mask] != heights[fixed_mask]):
        raise FeasibilityError("fixed heights violate the step constraints")
    if np.any(h_min > h_max):
        raise FeasibilityError("no height function extends the fixed faces")
    logger.debug("height bounds: %d free faces, spread up to %d",
                 region.n_free, int((h_max - h_min).max()))
    return h_min, h_max


# =============================================================================
# Dynamics
# =============================================================================

def sublattice_masks(region: Region) -> List[np.ndarray]:
    """Free faces split by (a mod 2, b mod 2); faces of one class share no vertex."""
    a, b = np.meshgrid(np.arange(region.width + 1), np.arange(region.height + 1), indexing="ij")
    classes = [region.free & (a % 2 == i) & (b % 2 == j) for i in (0, 1) for j in (0, 1)]
    return [mask for mask in classes if mask.any()]


def move_acceptance(states: np.ndarray, step: np.ndarray, log_r: np.ndarray,
                    log_empty: np.ndarray) -> np.ndarray:
    """
    Metropolis acceptance probability of each face of a simultaneous move.

    step holds -1, 0 or +1 per face, nonzero only on faces sharing no vertex,
    so every face's gain and validity depend on that face alone. Faces with
    step 0 or an invalid result get probability 0.
    """
    proposal = states + step
    gain = _face_sums(height_log_weights(proposal, log_r, log_empty)
                      - height_log_weights(states, log_r, log_empty))
    ok = (step != 0) & ~invalid_faces(proposal)
    return np.where(ok, np.exp(np.minimum(gain, 0.0)), 0.0)


class MetropolisSampler:
    """Single-face Metropolis dynamics for a batch of chains on one region."""

    def __init__(self, region: Region, domain: FundamentalDomain):
        self.region = region
        self.domain = domain
        self.log_r, self.log_empty = log_weight_tables(domain, region.width, region.height)
        self.classes = sublattice_masks(region)
        self.proposed = 0
        self.accepted = 0

    def update(self, states: np.ndarray, generators: Sequence[np.random.Generator],
               mask: np.ndarray) -> None:
        """
        One sublattice update in place: each face of mask proposes +1 or -1
        with probability 1/2 and is accepted independently.
        """
        draws = np.stack([g.random((2,) + mask.shape) for g in generators])
        step = np.where(draws[:, 0] < 0.5, -1, 1) * mask
        accept = draws[:, 1] < move_acceptance(states, step, self.log_r, self.log_empty)
        states[...] = np.where(accept, states + step, states)
        self.proposed += int(mask.sum()) * len(generators)
        self.accepted += int(accept.sum())

    def sweep(self, states: np.ndarray, generators: Sequence[np.random.Generator]) -> None:
        """Update every free face once, in place. states has shape (chains, W+1, H+1)."""
        for mask in self.classes:
            self.update(states, generators, mask)

    @property
    def acceptance(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


def burn_in_sweeps(region: Region) -> int:
    """Default burn-in: ceil(BURN_IN_FACTOR * log(area)) sweeps."""
    area = max(region.n_free, 2)
    return int(math.ceil(BURN_IN_FACTOR * math.log(area)))


def chain_generators(seed: int, n_chains: int) -> List[np.random.Generator]:
    """One Philox stream per chain, independent of how chains are grouped."""
    return [np.random.Generator(np.random.Philox(child))
            for child in np.random.SeedSequence(seed).spawn(n_chains)]


def _run_group(region: Region, domain: FundamentalDomain, chain_ids: Sequence[int], n_chains: int,
               seed: int, burn_in: int, sweeps: int, thin: int, start: np.ndarray,
               progress: bool = False):
    generators = [chain_generators(seed, n_chains)[i] for i in chain_ids]
    sampler = MetropolisSampler(region, domain)
    states = start[list(chain_ids)].copy()
    sums = np.zeros(states.shape)
    count = 0
    with tqdm(total=burn_in + sweeps, desc="Sampling", unit=" sweeps", disable=not progress) as bar:
        for k in range(burn_in + sweeps):
            sampler.sweep(states, generators)
            if k >= burn_in and (k - burn_in) % thin == 0:
                sums += states
                count += 1
            bar.update(1)
    return states, sums, count, sampler.accepted, sampler.proposed


def run_chains(region: Region, domain: FundamentalDomain, n_chains: int = DEFAULT_CHAINS,
               sweeps: Optional[int] = None, burn_in: Optional[int] = None, thin: int = 1,
               seed: Optional[int] = None, workers: int = 1, progress: bool = False) -> SampleRun:
    """
    Run independent chains and average their heights.

    Even-numbered chains start from the lowest extension, odd ones from the
    highest. After burn_in sweeps, every thin-th state of the next `sweeps`
    sweeps is recorded. The profile mean is the average of per-chain means;
    its standard error comes from the spread of those means.

    Raises:
        FeasibilityError: If the fixed faces admit no extension.
        InvalidArgumentError: On non-positive chain counts or thinning.
    """
    if n_chains < 1 or thin < 1 or workers < 1:
        raise InvalidArgumentError("n_chains, thin and workers must be positive")
    seed = get_default_seed() if seed is None else int(seed)
    burn_in = burn_in_sweeps(region) if burn_in is None else int(burn_in)
    sweeps = burn_in if sweeps is None else int(sweeps)

    h_min, h_max = height_bounds(region)
    start = np.stack([h_min if i % 2 == 0 else h_max for i in range(n_chains)])
    groups = [g.tolist() for g in np.array_split(np.arange(n_chains), min(workers, n_chains))]
    logger.info("running %d chains (%d burn-in + %d sweeps, %d free faces, %d workers)",
                n_chains, burn_in, sweeps, region.n_free, len(groups))

    args = (region, domain)
    tail = (n_chains, seed, burn_in, sweeps, thin, start)
    if len(groups) == 1:
        results = [_run_group(*args, groups[0], *tail, progress=progress)]
    else:
        with ProcessPoolExecutor(max_workers=len(groups)) as pool:
            futures = [pool.submit(_run_group, *args, g, *tail) for g in groups]
            results = [f.result() for f in tqdm(futures, desc="Chain groups", disable=not progress)]

    final = np.concatenate([r[0] for r in results])
    count = results[0][2]
    accepted = sum(r[3] for r in results)
    proposed = sum(r[4] for r in results)
    if count:
        chain_means = np.concatenate([r[1] for r in results]) / count
    else:
        chain_means = final.astype(float)
    mean = chain_means.mean(axis=0)
    if n_chains > 1:
        stderr = chain_means.std(axis=0, ddof=1) / np.sqrt(n_chains)
    else:
        stderr = np.zeros(mean.shape)
    acceptance = accepted / proposed if proposed else 0.0
    logger.info("sampling done, acceptance %.3f", acceptance)
    return SampleRun(profile=HeightProfile(mean=mean, stderr=stderr, n_samples=n_chains),
                     final=final, burn_in=burn_in, sweeps=sweeps, seed=seed, acceptance=acceptance)


def mcmc_sample(region: Region, domain: FundamentalDomain, sweeps: int,
                seed: Optional[int] = None) -> MNLPConfig:
    """
    One chain started from the lowest extension, after `sweeps` sweeps.

    Raises:
        FeasibilityError: If the fixed faces admit no extension.
    """
    seed = get_default_seed() if seed is None else int(seed)
    h_min, _ = height_bounds(region)
    states = h_min[None].copy()
    sampler = MetropolisSampler(region, domain)
    generators = chain_generators(seed, 1)
    for _ in range(int(sweeps)):
        sampler.sweep(states, generators)
    return config_from_heights(states[0])


def transition_log_probability(before: np.ndarray, after: np.ndarray, region: Region,
                               domain: FundamentalDomain, mask: np.ndarray) -> float:
    """
    log P(before -> after) for one sublattice update of the sweep.

    Every face of mask (one of sublattice_masks(region)) moves by +1 or -1
    with probability 1/2 times its acceptance, or stays; the faces act
    independently, so P is the product of the per-face factors. Returns -inf
    when after is not reachable in one such update.
    """
    before = np.asarray(before, dtype=np.int64)
    after = np.asarray(after, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    diff = after - before
    if np.any(diff[~mask] != 0) or np.any(np.abs(diff) > 1) or invalid_faces(after).any():
        return -np.inf
    log_r, log_empty = log_weight_tables(domain, region.width, region.height)
    up = move_acceptance(before, mask.astype(np.int64), log_r, log_empty)
    down = move_acceptance(before, -mask.astype(np.int64), log_r, log_empty)
    factors = np.where(diff > 0, 0.5 * up, np.where(diff < 0, 0.5 * down, 1.0 - 0.5 * (up + down)))[mask]
    if np.any(factors <= 0):
        return -np.inf
    return float(np.log(factors).sum())


# =============================================================================
# Exact oracle and profiles
# =============================================================================

_NEIGHBOURS = ((1, 0), (0, 1), (1, 1))


def enumerate_region(region: Region, domain: FundamentalDomain) -> Tuple[np.ndarray, np.ndarray]:
    """
    Every height function on the region with its log weight.

    Returns:
        (states of shape (K, W+1, H+1), log weights of shape (K,))

    Raises:
        FeasibilityError: If no extension exists.
        SizeLimitError: If more than MAX_REGION_STATES states are found.
    """
    h_min, h_max = height_bounds(region)
    work = np.asarray(region.heights, dtype=np.int64).copy()
    assigned = ~region.free.copy()
    faces = sorted(map(tuple, np.argwhere(region.free)), key=lambda f: (f[0] + f[1], f[0]))
    shape = work.shape
    states: List[np.ndarray] = []

    def fits(a, b, value):
        for da, db in _NEIGHBOURS:
            for sign in (1, -1):
                na, nb = a + sign * da, b + sign * db
                if 0 <= na < shape[0] and 0 <= nb < shape[1] and assigned[na, nb]:
                    step = sign * (work[na, nb] - value)
                    if step < 0 or step > 1:
                        return False
        return True

    def fill(k):
        if k == len(faces):
            if len(states) >= MAX_REGION_STATES:
                raise SizeLimitError(f"region has more than {MAX_REGION_STATES} height functions")
            states.append(work.copy())
            return
        a, b = faces[k]
        for value in range(h_min[a, b], h_max[a, b] + 1):
            if fits(a, b, value):
                work[a, b] = value
                assigned[a, b] = True
                fill(k + 1)
                assigned[a, b] = False

    fill(0)
    stacked = np.stack(states)
    logger.info("enumerated %d height functions on %d free faces", len(states), len(faces))
    return stacked, region_log_weight(stacked, domain)


def exact_height_mean(states: np.ndarray, log_weights: np.ndarray) -> np.ndarray:
    """Boltzmann mean of the face heights over an enumerated ensemble."""
    p = np.exp(log_weights - log_weights.max())
    p /= p.sum()
    return np.tensordot(p, states, axes=1)


def empirical_height_profile(samples: Sequence[Union[MNLPConfig, np.ndarray]]) -> HeightProfile:
    """
    Pointwise mean face height and standard error over independent samples.

    Configurations are converted with height_function (face (0, 0) at 0);
    arrays are taken as face heights.

    Raises:
        InvalidArgumentError: If there are no samples.
    """
    if len(samples) == 0:
        raise InvalidArgumentError("empty sample")
    arrays = np.stack([height_function(s).heights if isinstance(s, MNLPConfig) else np.asarray(s)
                       for s in samples]).astype(float)
    n = arrays.shape[0]
    mean = arrays.mean(axis=0)
    stderr = arrays.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(mean.shape)
    return HeightProfile(mean=mean, stderr=stderr, n_samples=n)


def limit_shape_discrepancy(profile: HeightProfile, mesh: Sequence[EnvelopePoint], L: int,
                            window: Tuple[float, float, float, float]) -> float:
    """
    sup |mean/L - h(a/L, b/L)| over faces inside window = (x0, x1, y0, y1).

    Faces where the analytic surface is undefined (outside the liquid region)
    are skipped.

    Raises:
        InvalidArgumentError: If no face in the window has an analytic value.
    """
    x0, x1, y0, y1 = window
    a, b = np.meshgrid(np.arange(profile.mean.shape[0]), np.arange(profile.mean.shape[1]), indexing="ij")
    xs, ys = a / L, b / L
    inside = (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
    analytic = analytic_heights(mesh, xs[inside], ys[inside])
    finite = np.isfinite(analytic)
    if not finite.any():
        raise InvalidArgumentError(f"no analytic heights inside window {window}")
    return float(np.max(np.abs(profile.mean[inside][finite] / L - analytic[finite])))
