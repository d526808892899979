"""GridField files: a JSON header next to raw little-endian float64 or CSV.

``write_field(u, "out/sol")`` produces ``out/sol.json`` and ``out/sol.bin``
(or ``out/sol.csv``).  Values are stored in row-major (C) order.  Both
formats round-trip exactly; CSV uses ``repr`` of each float.
"""
import json
from pathlib import Path

import numpy as np

from .geometry import GridField, TorusGrid

FORMATS = {"bin": ".bin", "csv": ".csv"}


def _stem(path):
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".json", ".bin", ".csv") else path


def write_field(u, path, fmt="bin"):
    """Write ``u`` and return the header path."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown field format {fmt!r}")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data_path = stem.with_suffix(FORMATS[fmt])
    flat = np.ascontiguousarray(u.values, dtype="<f8").ravel()
    if fmt == "bin":
        data_path.write_bytes(flat.tobytes())
    else:
        data_path.write_text("".join(repr(float(x)) + "\n" for x in flat))
    header = dict(u.grid.header(), format=fmt, data=data_path.name)
    header_path = stem.with_suffix(".json")
    header_path.write_text(json.dumps(header, indent=1) + "\n")
    return header_path


def read_field(path):
    header_path = _stem(path).with_suffix(".json")
    header = json.loads(header_path.read_text())
    grid = TorusGrid(tuple(header["sizes"]), tuple(header["lengths"]))
    if header.get("dim", grid.dim) != grid.dim:
        raise ValueError(f"{header_path}: dim does not match sizes")
    data_path = header_path.parent / header["data"]
    if header["format"] == "bin":
        flat = np.frombuffer(data_path.read_bytes(), dtype="<f8")
    elif header["format"] == "csv":
        flat = np.array([float(line) for line in data_path.read_text().split()])
    else:
        raise ValueError(f"{header_path}: unknown format {header['format']!r}")
    if flat.size != grid.npoints:
        raise ValueError(f"{data_path}: {flat.size} values for {grid.npoints} points")
    return GridField(grid, flat.reshape(grid.shape))
