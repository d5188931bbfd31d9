"""CLI: batch computations and the verification suite for staggered five-vertex models"""

import argparse
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import (
    AMOEBA_EPSILON,
    DEFAULT_CHAINS,
    DEFAULT_GRID,
    DEFAULT_SAMPLES,
    DEFAULT_WORKERS,
    VERIFY_REPORT_FILENAME,
    get_default_seed,
    get_output_dir,
)
from .conformal import in_coexistence
from .errors import BoundaryProximityWarning, FiveVertexError
from .invariants import LEVELS, run_invariants, write_report
from .limit_shape import BUILTIN_EXAMPLES, builtin_G, frozen_boundary, limit_shape_mesh, polar_grid, semi_boxed_large_r_heights
from .model_core import config_from_heights, read_domain_config
from .models import AmoebaFlag, DomainFile, FieldPoint, FundamentalDomain, MeshFlag, SlopePoint
from .phase_diagram import amoeba_boundary, classify_phase
from .sampler import run_chains, staircase_region
from .thermodynamics import coexistence_boundary, surface_tension
from .utils import config_hash, write_csv, write_snapshot, write_svg_polylines

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _parallel_map(fn: Callable, items: Sequence, workers: int) -> List:
    """Map in order, in worker processes when workers > 1."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# =============================================================================
# Per-point workers
# =============================================================================

def _sigma_row(domain: FundamentalDomain, row):
    grid, i = row
    s = i / (grid - 1)
    out = []
    for j in range(grid - i):
        t = j / (grid - 1)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundaryProximityWarning)
                sigma = surface_tension(SlopePoint(s, t), domain)
        except FiveVertexError as e:
            logger.warning("sigma(%g, %g) failed: %s", s, t, e)
            sigma = float("nan")
        region = "coexistence" if in_coexistence(s, t, domain) else "pure"
        out.append((s, t, sigma, region))
    return out


def _free_energy_row(domain: FundamentalDomain, row):
    X, Ys = row
    out = []
    for Y in Ys:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundaryProximityWarning)
                c = classify_phase(FieldPoint(float(X), float(Y)), domain)
            out.append((float(X), float(Y), c.free_energy, c.phase.value, c.slope.s, c.slope.t))
        except FiveVertexError as e:
            logger.warning("F(%g, %g) failed: %s", X, Y, e)
            nan = float("nan")
            out.append((float(X), float(Y), nan, "error", nan, nan))
    return out


# =============================================================================
# Commands
# =============================================================================

def cmd_surface_tension(args, cfg: DomainFile, params: Dict) -> int:
    grid = args.grid
    if grid < 2:
        raise argparse.ArgumentTypeError("--grid must be at least 2")
    rows = _parallel_map(partial(_sigma_row, cfg.domain), [(grid, i) for i in range(grid)], args.workers)
    path = write_csv(args.out / "surface_tension.csv", ["s", "t", "sigma", "region"],
                     [r for row in rows for r in row], params, cfg.source_text)
    print(f"OK - wrote {path}")
    return EXIT_OK


def cmd_free_energy(args, cfg: DomainFile, params: Dict) -> int:
    axis = np.linspace(-args.window, args.window, args.grid)
    rows = _parallel_map(partial(_free_energy_row, cfg.domain), [(X, axis) for X in axis], args.workers)
    path = write_csv(args.out / "free_energy.csv", ["X", "Y", "F", "phase", "s", "t"],
                     [r for row in rows for r in row], params, cfg.source_text)
    print(f"OK - wrote {path}")
    return EXIT_OK


def cmd_amoeba(args, cfg: DomainFile, params: Dict) -> int:
    trace = amoeba_boundary(cfg.domain, epsilon=args.epsilon, n_samples=args.samples)
    out = args.out
    write_csv(out / "amoeba.csv", ["u_re", "u_im", "X", "Y", "branch_flag"],
              [(s.u.real, s.u.imag, s.X, s.Y, s.flag.name.lower()) for s in trace.samples],
              params, cfg.source_text)
    write_csv(out / "tentacles.csv", ["point", "dX", "dY", "label"],
              [(t.point, t.direction[0], t.direction[1], t.label) for t in trace.tentacles],
              params, cfg.source_text)

    segments, current = [], []
    for s in trace.samples:
        if s.flag is AmoebaFlag.REGULAR:
            current.append((s.X, s.Y))
        elif current:
            segments.append(np.asarray(current))
            current = []
    if current:
        segments.append(np.asarray(current))
    write_svg_polylines(out / "amoeba.svg", segments, title="amoeba boundary", xlabel="X", ylabel="Y")
    print(f"Tentacles: {len(trace.tentacles)}")
    print(f"OK - wrote amoeba.csv, tentacles.csv, amoeba.svg to {out}")
    return EXIT_OK


def cmd_coexistence(args, cfg: DomainFile, params: Dict) -> int:
    if args.samples < 3:
        raise argparse.ArgumentTypeError("--samples must be at least 3")
    R = np.geomspace(1e-6, 1e6, args.samples - 2)
    points = [(0.0, 1.0, 0.0)]
    for Rk in R:
        p = coexistence_boundary(cfg.domain, float(Rk))
        points.append((float(Rk), p.s, p.t))
    points.append((float("inf"), 0.0, 1.0))

    out = args.out
    path = write_csv(out / "coexistence.csv", ["R", "s", "t"], points, params, cfg.source_text)
    curve = np.array([(s, t) for _, s, t in points])
    triangle = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)])
    write_svg_polylines(out / "coexistence.svg", [triangle, curve], title="coexistence boundary",
                        xlabel="s", ylabel="t", labels=["triangle", "coexistence"])
    print(f"OK - wrote {path}")
    return EXIT_OK


def cmd_limit_shape(args, cfg: DomainFile, params: Dict) -> int:
    domain = cfg.domain
    G = builtin_G(args.example, domain, args.a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryProximityWarning)
        mesh = limit_shape_mesh(G, domain, polar_grid(args.grid, args.grid))
        boundary = frozen_boundary(G, domain, n_samples=args.samples)

    out = args.out
    write_csv(out / "limit_shape.csv", ["u_re", "u_im", "x", "y", "h", "s", "t", "flag"],
              [(p.u.real, p.u.imag, p.x, p.y, p.h, p.s, p.t, p.flag.name.lower()) for p in mesh],
              params, cfg.source_text)
    rows = []
    for segment_id, segment in enumerate(boundary.segments()):
        rows.extend((segment_id, x, y) for x, y in segment)
    write_csv(out / "frozen_boundary.csv", ["segment", "x", "y"], rows, params, cfg.source_text)
    write_csv(out / "tangency.csv", ["u", "x", "y", "line"],
              [(p.u, p.x, p.y, p.line) for p in boundary.tangencies], params, cfg.source_text)

    touch = np.array([(p.x, p.y) for p in boundary.tangencies]) if boundary.tangencies else None
    write_svg_polylines(out / "frozen_boundary.svg", boundary.segments(),
                        title=f"frozen boundary ({args.example})", xlabel="x", ylabel="y", points=touch)
    n_bad = sum(1 for p in mesh if p.flag is not MeshFlag.OK)
    print(f"Mesh points: {len(mesh)} ({n_bad} degenerate)")
    print(f"Tangency points: {len(boundary.tangencies)}")
    print(f"OK - wrote limit_shape.csv, frozen_boundary.csv, tangency.csv, frozen_boundary.svg to {out}")
    return EXIT_OK


def cmd_sample(args, cfg: DomainFile, params: Dict) -> int:
    if args.region == "semi-boxed":
        region = semi_boxed_large_r_heights(args.size)
    else:
        region = staircase_region(args.size, args.size)
    print(f"Region: {region.width} x {region.height} vertices, {region.n_free} free faces")

    run = run_chains(region, cfg.domain, n_chains=args.chains, sweeps=args.sweeps, burn_in=args.burn_in,
                     thin=args.thin, seed=args.seed, workers=args.workers, progress=True)
    out = args.out
    profile = run.profile
    rows = [(a, b, profile.mean[a, b], profile.stderr[a, b])
            for a in range(profile.mean.shape[0]) for b in range(profile.mean.shape[1])]
    params = dict(params, burn_in=run.burn_in, sweeps=run.sweeps)
    write_csv(out / "heights.csv", ["face_x", "face_y", "mean_h", "stderr"], rows, params, cfg.source_text)
    write_snapshot(out / "snapshot.rle", config_from_heights(run.final[0]))
    print(f"Burn-in: {run.burn_in} sweeps, sampling: {run.sweeps} sweeps, acceptance {run.acceptance:.3f}")
    print(f"OK - wrote heights.csv, snapshot.rle to {out}")
    return EXIT_OK


def cmd_verify(args, cfg: DomainFile, params: Dict) -> int:
    results = run_invariants(cfg.domain, level=args.level, seed=args.seed)
    path = write_report(results, args.out / VERIFY_REPORT_FILENAME, cfg.domain, args.level)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "ok" if r.passed else "FAILED"
        print(f"  {r.name:<{width}}  residual {r.residual:.3e}  tolerance {r.tolerance:.1e}  {status}")
    failed = [r.name for r in results if not r.passed]
    print(f"Report: {path}")
    if failed:
        print(f"ERROR - {len(failed)} invariant(s) failed: {', '.join(failed)}")
        return EXIT_VERIFY_FAILED
    print(f"OK - all {len(results)} invariants passed")
    return EXIT_OK


COMMANDS = {
    "surface-tension": (cmd_surface_tension, "Surface tension on a grid over the slope triangle"),
    "free-energy": (cmd_free_energy, "Free energy and phase on a grid over a field window"),
    "amoeba": (cmd_amoeba, "Amoeba boundary and tentacles"),
    "coexistence": (cmd_coexistence, "Coexistence curve (small r only)"),
    "limit-shape": (cmd_limit_shape, "Limit-shape mesh and frozen boundary of a built-in example"),
    "sample": (cmd_sample, "Metropolis sampling of a bounded region"),
    "verify": (cmd_verify, "Run the invariant suite and write a JSON report"),
}

# parameters recorded in the CSV metadata line, per command
_PARAMS = {
    "surface-tension": ("grid",),
    "free-energy": ("grid", "window"),
    "amoeba": ("epsilon", "samples"),
    "coexistence": ("samples",),
    "limit-shape": ("example", "a", "grid", "samples"),
    "sample": ("region", "size", "chains", "thin", "seed"),
    "verify": ("level", "seed"),
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, metavar='PATH',
                        help='Domain config file with alphas, betas and optional X, Y')
    common.add_argument('--out', type=Path, default=None, metavar='DIR',
                        help=f'Output directory (default: {get_output_dir()})')
    common.add_argument('--seed', type=int, default=None, metavar='U64',
                        help=f'Random seed (default: {get_default_seed()})')
    common.add_argument('--workers', type=_positive_int, default=DEFAULT_WORKERS, metavar='N',
                        help=f'Worker processes for grids and chains (default: {DEFAULT_WORKERS})')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    parser = argparse.ArgumentParser(
        prog='fivevertex',
        description='fivevertex - staggered five-vertex model: thermodynamics, limit shapes, sampling',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  fivevertex verify --config configs/smallr_2x2.cfg
  fivevertex coexistence --config configs/smallr_2x2.cfg --samples 200
  fivevertex limit-shape --example semi_boxed_large_r --config configs/larger_2x2.cfg
  fivevertex sample --config configs/larger_2x2.cfg --region semi-boxed --size 32 --workers 4
        """
    )
    sub = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')
    parsers = {name: sub.add_parser(name, parents=[common], help=text)
               for name, (_, text) in COMMANDS.items()}

    for name in ("surface-tension", "free-energy", "limit-shape"):
        parsers[name].add_argument('--grid', type=_positive_int, default=DEFAULT_GRID, metavar='N',
                                   help=f'Grid points per axis (default: {DEFAULT_GRID})')
    parsers["free-energy"].add_argument('--window', type=float, default=5.0, metavar='F',
                                        help='Field window [-F, F]^2 (default: 5.0)')
    for name in ("amoeba", "coexistence", "limit-shape"):
        parsers[name].add_argument('--samples', type=_positive_int, default=DEFAULT_SAMPLES, metavar='N',
                                   help=f'Boundary samples (default: {DEFAULT_SAMPLES})')
    parsers["amoeba"].add_argument('--epsilon', type=float, default=AMOEBA_EPSILON, metavar='F',
                                   help=f'Offset from the real axis (default: {AMOEBA_EPSILON})')

    ls = parsers["limit-shape"]
    ls.add_argument('--example', required=True, choices=BUILTIN_EXAMPLES, help='Built-in boundary data')
    ls.add_argument('--a', type=float, default=None, metavar='F',
                    help='Point at infinity of the small-r example (default: geometric midpoint)')

    sp = parsers["sample"]
    sp.add_argument('--region', choices=("staircase", "semi-boxed"), default="staircase",
                    help='Region shape (default: staircase)')
    sp.add_argument('--size', type=_positive_int, default=16, metavar='L', help='Region size (default: 16)')
    sp.add_argument('--chains', type=_positive_int, default=DEFAULT_CHAINS, metavar='N',
                    help=f'Independent chains (default: {DEFAULT_CHAINS})')
    sp.add_argument('--sweeps', type=int, default=None, metavar='N',
                    help='Sampling sweeps per chain (default: same as burn-in)')
    sp.add_argument('--burn-in', type=int, default=None, metavar='N',
                    help='Burn-in sweeps (default: ceil(50 log(free faces)))')
    sp.add_argument('--thin', type=_positive_int, default=1, metavar='N',
                    help='Record every N-th sweep (default: 1)')

    parsers["verify"].add_argument('--level', choices=LEVELS, default="quick",
                                   help='quick or full (default: quick)')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None:
        args.seed = get_default_seed()
    args.out = Path(args.out) if args.out is not None else get_output_dir()

    fn, title = COMMANDS[args.command]
    _banner(f"fivevertex {args.command}: {title}")
    try:
        cfg = read_domain_config(args.config)
        label = f" ({cfg.name})" if cfg.name else ""
        print(f"Domain{label}: alphas={list(cfg.domain.alphas)} betas={list(cfg.domain.betas)} "
              f"regime={cfg.domain.regime.value}")
        print(f"Config hash: {config_hash(cfg.source_text)}")
        print(f"Output directory: {args.out}")
        params = {k: getattr(args, k.replace("-", "_")) for k in _PARAMS[args.command]}
        return fn(args, cfg, params)
    except (FiveVertexError, argparse.ArgumentTypeError) as e:
        print(f"ERROR - {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
