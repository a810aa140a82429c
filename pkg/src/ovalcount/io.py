"""Text formats: curve descriptions, lattice dumps and JSON-lines streams.

Floats are written with ``repr`` so that every value round-trips exactly.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import DomainError
from .geometry import OvalCurve
from .lattice import UnimodularLattice

_ELLIPSE = re.compile(r"^ellipse\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)$")


def curve_to_spec(curve: OvalCurve) -> dict:
    """Serialisable description {preset, coeffs, grid_resolution}."""
    preset = curve.name if (curve.name == "disk" or _ELLIPSE.match(curve.name)) else "custom"
    return {"preset": preset, "coeffs": [repr(float(c)) for c in curve.coeffs()],
            "grid_resolution": int(curve.grid_resolution)}


def curve_from_spec(spec: dict) -> OvalCurve:
    preset = spec.get("preset", "custom")
    grid = int(spec.get("grid_resolution", 4096))
    if preset == "disk":
        return OvalCurve.disk(grid_resolution=grid)
    m = _ELLIPSE.match(preset)
    if m:
        return OvalCurve.ellipse(float(m.group(1)), float(m.group(2)), grid_resolution=grid)
    if preset != "custom":
        raise DomainError(f"unknown curve preset {preset!r}")
    if "coeffs" not in spec:
        raise DomainError("custom curves need a coeffs list")
    return OvalCurve.from_coeffs([float(c) for c in spec["coeffs"]], grid_resolution=grid)


def parse_curve(text: str) -> OvalCurve:
    """A preset name (``disk``, ``ellipse(a,b)``) or the path of a JSON curve file."""
    text = text.strip()
    if text == "disk" or _ELLIPSE.match(text):
        return curve_from_spec({"preset": text})
    path = Path(text)
    if not path.exists():
        raise DomainError(f"{text!r} is neither a curve preset nor an existing file")
    return curve_from_spec(json.loads(path.read_text()))


def write_curve(path, curve: OvalCurve) -> None:
    Path(path).write_text(json.dumps(curve_to_spec(curve), indent=1) + "\n")


def lattice_to_text(L: UnimodularLattice) -> str:
    """Four decimal strings, row-major."""
    return " ".join(repr(float(v)) for v in L.basis.ravel()) + "\n"


def lattice_from_text(text: str) -> UnimodularLattice:
    parts = text.split()
    if len(parts) != 4:
        raise DomainError("a lattice dump holds exactly four numbers")
    return UnimodularLattice(np.array([float(p) for p in parts]).reshape(2, 2))


def write_lattice(path, L: UnimodularLattice) -> None:
    Path(path).write_text(lattice_to_text(L))


def read_lattice(path) -> UnimodularLattice:
    return lattice_from_text(Path(path).read_text())


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
