"""
Output helpers: CSV tables, SVG polylines and run-length encoded snapshots.

Every CSV starts with one metadata comment line

    # fivevertex <version> config=<sha256 of the config text, 12 hex> params=<k=v;...>

followed by a header row. Numbers are written with repr-precision so that a
run with the same config and seed reproduces the file byte for byte.
"""

import csv
import hashlib
import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import InvalidArgumentError  # noqa: E402
from ..models import MNLPConfig, Topology  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def config_hash(config_text: str) -> str:
    """First 12 hex digits of the SHA-256 of the config text."""
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()[:12]


def _format_value(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value))
    return str(value)


def metadata_line(params: Dict[str, object], config_text: str = "") -> str:
    """The leading comment line of every CSV."""
    from .. import __version__

    pairs = ";".join(f"{k}={_format_value(params[k])}" for k in sorted(params))
    return f"# fivevertex {__version__} config={config_hash(config_text)} params={pairs}"


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[object]],
              params: Optional[Dict[str, object]] = None, config_text: str = "") -> Path:
    """
    Write a CSV table with the metadata line and a header row.

    Returns:
        The path written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(metadata_line(params or {}, config_text) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return path


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    """Rows of a CSV written by write_csv, skipping the metadata line."""
    with open(path, newline="", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_svg_polylines(path: PathLike, polylines: Sequence[np.ndarray], title: str = "",
                        xlabel: str = "", ylabel: str = "",
                        labels: Optional[Sequence[str]] = None,
                        points: Optional[np.ndarray] = None) -> Path:
    """
    Draw polylines (and optional marker points) to an SVG file.

    The SVG carries no date and a fixed hash salt, so equal input gives equal bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "fivevertex", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        for k, line in enumerate(polylines):
            line = np.asarray(line, dtype=float)
            if line.ndim != 2 or len(line) < 2:
                continue
            label = labels[k] if labels is not None and k < len(labels) else None
            ax.plot(line[:, 0], line[:, 1], linewidth=1.0, color="C0" if labels is None else None,
                    label=label)
        if points is not None and len(points):
            pts = np.asarray(points, dtype=float)
            ax.plot(pts[:, 0], pts[:, 1], "o", markersize=3, color="C3")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if labels is not None:
            ax.legend(loc="best", fontsize="small")
        ax.set_aspect("auto")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("wrote %s", path)
    return path


# =============================================================================
# Run-length encoded snapshots
# =============================================================================

def _encode_bits(bits: np.ndarray) -> str:
    flat = np.asarray(bits, dtype=np.int8).ravel()
    if flat.size == 0:
        return ""
    runs = []
    start = 0
    for k in range(1, flat.size + 1):
        if k == flat.size or flat[k] != flat[start]:
            runs.append(f"{k - start}x{flat[start]}")
            start = k
    return " ".join(runs)


def _decode_bits(text: str, shape) -> np.ndarray:
    values: List[int] = []
    for token in text.split():
        m = re.fullmatch(r"(\d+)x([01])", token)
        if not m:
            raise InvalidArgumentError(f"bad run {token!r}")
        values.extend([int(m.group(2))] * int(m.group(1)))
    if len(values) != shape[0] * shape[1]:
        raise InvalidArgumentError(f"runs cover {len(values)} edges, expected {shape[0] * shape[1]}")
    return np.array(values, dtype=np.int8).reshape(shape)


def encode_rle(config: MNLPConfig) -> str:
    """
    Snapshot text of a configuration.

    Two blocks, one per edge family:

        v <rows> <cols>
        <count>x<bit> <count>x<bit> ...
        h <rows> <cols>
        <count>x<bit> ...

    rows and cols are the shape of the occupation array; runs follow its
    row-major order.
    """
    lines = []
    for tag, arr in (("v", config.vertical), ("h", config.horizontal)):
        lines.append(f"{tag} {arr.shape[0]} {arr.shape[1]}")
        lines.append(_encode_bits(arr))
    return "\n".join(lines) + "\n"


def decode_rle(text: str) -> MNLPConfig:
    """
    Parse a snapshot. Equal vertical and horizontal shapes mean a torus.

    Raises:
        InvalidArgumentError: On malformed headers or runs.
    """
    lines = text.splitlines()
    blocks = {}
    k = 0
    while k < len(lines):
        header = lines[k].split()
        if not header:
            k += 1
            continue
        if len(header) != 3 or header[0] not in ("v", "h"):
            raise InvalidArgumentError(f"bad snapshot header {lines[k]!r}")
        shape = (int(header[1]), int(header[2]))
        body = lines[k + 1] if k + 1 < len(lines) else ""
        blocks[header[0]] = _decode_bits(body, shape)
        k += 2
    if set(blocks) != {"v", "h"}:
        raise InvalidArgumentError("snapshot needs both a v and an h block")
    v, h = blocks["v"], blocks["h"]
    if v.shape == h.shape:
        return MNLPConfig(v.shape[0], v.shape[1], v, h, Topology.TORUS)
    return MNLPConfig(v.shape[0], h.shape[1], v, h, Topology.BOUNDED)


def write_snapshot(path: PathLike, config: MNLPConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(encode_rle(config), encoding="utf-8")
    return path
