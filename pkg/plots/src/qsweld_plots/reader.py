"""Standalone readers for the documented bundle formats.

Only the published interchange formats are consumed here (manifest JSON,
'#'-headed CSV polylines, and the QWGR binary grid container); nothing is
imported from the solver package.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np


class MissingData(Exception):
    """Bundle lacks a file or field a figure needs."""


class UnknownFigure(Exception):
    """Requested figure type does not exist."""


_HEADER = struct.Struct("<4sIId B")


def read_grid_container(path):
    """(n, half_width, kind, complex values[n, n]) from a QWGR file."""
    p = Path(path)
    if not p.exists():
        raise MissingData(f"grid container not found: {p}")
    raw = p.read_bytes()
    magic, version, n, half_width, kind = _HEADER.unpack(
        raw[:_HEADER.size])
    if magic != b"QWGR":
        raise MissingData(f"{p}: not a grid container")
    data = np.frombuffer(raw[_HEADER.size:], dtype="<f8")
    pairs = data.reshape(n, n, 2)
    return int(n), float(half_width), int(kind), \
        pairs[..., 0] + 1j * pairs[..., 1]


def read_polyline(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise MissingData(f"polyline CSV not found: {p}")
    data = np.loadtxt(p, delimiter=",", comments="#")
    data = np.atleast_2d(data)
    return data[:, 1] + 1j * data[:, 2]


def read_json(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise MissingData(f"JSON file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise MissingData(f"{p}: invalid JSON ({exc})") from exc


def find_manifests(bundle: Path):
    """manifest.json files directly under the bundle's subdirectories."""
    found = sorted(bundle.glob("*/manifest.json"))
    if (bundle / "manifest.json").exists():
        found.insert(0, bundle / "manifest.json")
    return found
