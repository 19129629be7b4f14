"""Self-describing CSV dumps for fields: grid header plus one value per line."""

from __future__ import annotations

import numpy as np

from .spectral import Grid, RealField


def save_field(f: RealField, path, time: float | None = None, **extra) -> None:
    """Write a field with its grid header; extra keys land in the header."""
    with open(path, "w") as fh:
        fh.write(f"# num_points={f.grid.num_points}\n")
        fh.write(f"# length={f.grid.length!r}\n")
        if time is not None:
            fh.write(f"# time={time!r}\n")
        for key, val in extra.items():
            fh.write(f"# {key}={val!r}\n")
        np.savetxt(fh, f.values, fmt="%.17g")


def load_field(path):
    """Read a field dump; returns (RealField, header dict)."""
    meta = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            else:
                values.append(float(line))
    grid = Grid(int(meta["num_points"]), float(meta["length"]))
    return RealField(grid, np.array(values)), meta
