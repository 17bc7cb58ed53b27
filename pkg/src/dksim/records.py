"""
Trajectory records and their on-disk forms: manifest + CSV time series +
optional binary snapshots.

Binary snapshot format: 16-byte header (magic b"DKS1", then uint32 n, d,
count, little-endian) followed by count row-major float64 fields of n^d
values each. Snapshot times are reconstructed from the manifest (start, dt,
stride), so the payload is pure field data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec

__all__ = [
    "TrajectoryRecord",
    "NumericalBlowupError",
    "write_csv_series",
    "SNAPSHOT_MAGIC",
    "save_snapshots",
    "load_snapshots",
]

SNAPSHOT_MAGIC = b"DKS1"
CSV_HEADER = "t,mass,entropy,dissipation,min_rho,l2,l4"


class NumericalBlowupError(RuntimeError):
    """State became non-finite (or was annihilated by clamping) mid-run."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-step diagnostics plus strided snapshots of one run."""

    grid: GridSpec
    times: np.ndarray
    mass: np.ndarray
    entropy: np.ndarray
    dissipation: np.ndarray
    min_rho: np.ndarray
    l2: np.ndarray
    l4: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    seed: int
    config_digest: str
    snapshot_stride: int
    dt: float
    clamp_events: int = 0
    unreliable: bool = False
    entropy_enabled: bool = True
    label: str = ""

    def __post_init__(self) -> None:
        if np.any(np.diff(self.snapshot_times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def final_field(self) -> np.ndarray:
        return self.snapshots[-1]

    def csv_text(self) -> str:
        lines = [CSV_HEADER]
        for i in range(len(self.times)):
            lines.append(
                ",".join(
                    _fmt(v)
                    for v in (
                        self.times[i],
                        self.mass[i],
                        self.entropy[i],
                        self.dissipation[i],
                        self.min_rho[i],
                        self.l2[i],
                        self.l4[i],
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())

    def manifest_text(self, config_echo: str = "", schema: str = "dksim-1") -> str:
        lines = [
            "[manifest]",
            f"schema = {schema}",
            f"seed = {self.seed}",
            f"config_digest = {self.config_digest}",
            f"grid_dimension = {self.grid.dimension}",
            f"grid_points = {self.grid.points}",
            f"t_start = {_fmt(self.times[0])}",
            f"t_end = {_fmt(self.times[-1])}",
            f"dt = {_fmt(self.dt)}",
            f"snapshot_stride = {self.snapshot_stride}",
            f"clamp_events = {self.clamp_events}",
            f"unreliable = {str(self.unreliable).lower()}",
            f"entropy_enabled = {str(self.entropy_enabled).lower()}",
        ]
        if self.label:
            lines.append(f"label = {self.label}")
        text = "\n".join(lines) + "\n"
        if config_echo:
            text += "--- config ---\n" + config_echo
            if not config_echo.endswith("\n"):
                text += "\n"
        return text

    def write_manifest(self, path, config_echo: str = "") -> None:
        Path(path).write_text(self.manifest_text(config_echo))

    def write_snapshots(self, path) -> None:
        save_snapshots(path, self.grid, self.snapshots)


def write_csv_series(path, header: str, rows) -> None:
    """Plain delimited output with full-precision floats (byte-reproducible)."""
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def save_snapshots(path, grid: GridSpec, fields: np.ndarray) -> None:
    fields = np.asarray(fields, dtype=np.float64)
    if fields.ndim == grid.dimension:
        fields = fields[None]
    count = fields.shape[0]
    header = SNAPSHOT_MAGIC + struct.pack("<III", grid.points, grid.dimension, count)
    assert len(header) == 16
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fields).tobytes())


def load_snapshots(path) -> tuple[GridSpec, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a dksim snapshot file")
    n, d, count = struct.unpack("<III", raw[4:16])
    grid = GridSpec(d, n)
    data = np.frombuffer(raw[16:], dtype="<f8", count=count * grid.size)
    return grid, data.reshape((count,) + grid.shape).copy()
