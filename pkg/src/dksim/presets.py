"""Closed-form initial data: constants, periodic bumps, and bump mixtures."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, RealField

__all__ = ["constant", "bump", "mixture", "parse_initial"]


def constant(grid: GridSpec, value: float) -> RealField:
    return RealField.constant(grid, value)


def _bump_profile(grid: GridSpec, center, width: float) -> np.ndarray:
    coords = grid.coordinates()
    if np.isscalar(center):
        center = (center,) * grid.dimension
    out = np.ones(grid.shape)
    for x, c in zip(coords, center):
        out = out * np.exp(-np.sin(np.pi * (x - c)) ** 2 / (2.0 * width**2))
    return out


def bump(
    grid: GridSpec, center=0.5, width: float = 0.1, mass: float = 1.0, background: float = 0.0
) -> RealField:
    """Smooth periodic bump carrying `mass`, on top of a constant background.

    Total mass on the volume-1 torus is background + mass.
    """
    profile = _bump_profile(grid, center, width)
    profile /= profile.mean()
    return RealField(grid, background + mass * profile)


def mixture(grid: GridSpec, centers, widths, masses, background: float = 0.0) -> RealField:
    vals = np.full(grid.shape, float(background))
    for c, w, m in zip(centers, widths, masses):
        profile = _bump_profile(grid, c, w)
        vals += m * profile / profile.mean()
    return RealField(grid, vals)


def parse_initial(grid: GridSpec, text: str) -> RealField:
    """Parse 'name: key=value ...' initial-data descriptions.

    Supported: constant: value=..., bump: center=.. width=.. mass=.. background=..,
    mixture: centers=a,b widths=a,b masses=a,b background=.., file: path=...
    Multi-axis bump centers use '/' between axes, e.g. center=0.25/0.75.
    """
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    kv = {}
    for token in rest.split():
        key, _, value = token.partition("=")
        if not value:
            raise ValueError(f"bad initial-data token {token!r}")
        kv[key.strip()] = value.strip()

    def _point(s: str):
        parts = [float(v) for v in s.split("/")]
        return parts[0] if len(parts) == 1 else tuple(parts)

    if name == "constant":
        return constant(grid, float(kv.get("value", 1.0)))
    if name == "bump":
        return bump(
            grid,
            center=_point(kv.get("center", "0.5")),
            width=float(kv.get("width", 0.1)),
            mass=float(kv.get("mass", 1.0)),
            background=float(kv.get("background", 0.0)),
        )
    if name == "mixture":
        centers = [_point(v) for v in kv["centers"].split(",")]
        widths = [float(v) for v in kv["widths"].split(",")]
        masses = [float(v) for v in kv["masses"].split(",")]
        return mixture(grid, centers, widths, masses, float(kv.get("background", 0.0)))
    if name == "file":
        from .records import load_snapshots

        fgrid, fields = load_snapshots(kv["path"])
        if fgrid != grid:
            raise ValueError("initial-data file grid does not match the configured grid")
        return RealField(grid, fields[0])
    raise ValueError(f"unknown initial-data preset {name!r}")
