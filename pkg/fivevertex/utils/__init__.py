"""Utility functions module"""

from .output import (
    config_hash,
    decode_rle,
    encode_rle,
    metadata_line,
    read_csv,
    write_csv,
    write_snapshot,
    write_svg_polylines,
)

__all__ = [
    'config_hash',
    'decode_rle',
    'encode_rle',
    'metadata_line',
    'read_csv',
    'write_csv',
    'write_snapshot',
    'write_svg_polylines',
]
