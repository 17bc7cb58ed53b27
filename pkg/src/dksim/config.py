"""
Experiment configuration: flat structured text with [section] headers and
key = value lines, schema-validated before any run. Unknown sections or keys
are rejected; every solver and particle parameter is representable.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from .grid import GridSpec
from .kernels import KernelSpec, biot_savart, load_kernel_table, single_mode_kernel
from .noise import NoiseSpec, uv_noise
from .presets import parse_initial
from .solver import SolverConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text"]

SCHEMA_VERSION = "dksim-config-1"

_SCHEMA: dict[str, set[str]] = {
    "grid": {"dimension", "points"},
    "kernel": {"type", "truncation", "amplitude", "wavevector", "path", "gamma", "p", "pstar", "q", "qstar"},
    "noise": {"type", "truncation", "amplitude", "amplitudes"},
    "sigma": {"n"},
    "time": {"start", "end", "dt", "snapshot_stride"},
    "output": {"directory", "snapshots", "figures"},
    "experiment": {
        "kind",
        "seed",
        "replicas",
        "threads",
        "profile",
        "clamping",
        "initial",
        "initial2",
        "n_ladder",
        "gamma_ladder",
        "count",
        "counts",
        "bandwidth",
        "particle_dt",
        "export_fluctuations",
    },
}

_KINDS = {"simulate", "uniqueness", "ladder", "particles", "compare", "kernel-audit", "entropy-audit"}


class ConfigError(ValueError):
    """Schema violation or inconsistent experiment configuration (CLI exit 2)."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_exponent(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration document plus its verbatim text (the echo)."""

    text: str
    kind: str
    grid_dimension: int
    grid_points: int
    kernel_type: str
    kernel_truncation: int | None
    kernel_amplitude: float
    kernel_wavevector: tuple[int, ...] | None
    kernel_path: str | None
    kernel_exponents: tuple[float, float, float, float] | None
    gamma: float | None
    noise_type: str
    noise_truncation: int
    noise_amplitude: float
    noise_amplitudes: list[float] | None
    sigma_n: int
    t_start: float
    t_end: float
    dt: float
    snapshot_stride: int
    out_directory: str | None
    write_snapshots: bool
    write_figures: bool
    seed: int
    replicas: int
    threads: int
    profile: str
    clamping: str
    initial: str
    initial2: str | None
    n_ladder: list[int]
    gamma_ladder: list[float]
    particle_count: int
    particle_counts: list[int]
    bandwidth: float
    particle_dt: float | None
    export_fluctuations: bool

    # -- builders ------------------------------------------------------------

    def build_grid(self) -> GridSpec:
        return GridSpec(self.grid_dimension, self.grid_points)

    def build_kernel(self, grid: GridSpec) -> KernelSpec | None:
        if self.kernel_type == "none":
            return None
        if self.kernel_type == "biot_savart":
            trunc = self.kernel_truncation or grid.points // 3
            kern = biot_savart(grid, trunc)
        elif self.kernel_type == "single_mode":
            wave = self.kernel_wavevector or (1,) * grid.dimension
            kern = single_mode_kernel(grid, wave, self.kernel_amplitude)
        elif self.kernel_type == "file":
            if not self.kernel_path:
                raise ConfigError("kernel type 'file' needs path = ...")
            kern = load_kernel_table(self.kernel_path, grid)
        else:
            raise ConfigError(f"unknown kernel type {self.kernel_type!r}")
        if self.kernel_exponents is not None:
            kern = KernelSpec(kern.grid, kern.fourier_coefficients, self.kernel_exponents)
        return kern

    def build_noise(self, grid: GridSpec) -> NoiseSpec | None:
        if self.noise_type == "none":
            return None
        if self.noise_type == "uv":
            amps = self.noise_amplitudes if self.noise_amplitudes is not None else 1.0
            return uv_noise(grid, self.noise_truncation, amps, epsilon=self.noise_amplitude)
        raise ConfigError(f"unknown noise type {self.noise_type!r}")

    def build_solver_config(self, seed: int | None = None, label: str = "") -> SolverConfig:
        grid = self.build_grid()
        kernel = self.build_kernel(grid)
        self.check_profile(kernel)
        try:
            return SolverConfig(
                grid=grid,
                initial=parse_initial(grid, self.initial),
                kernel=kernel,
                noise=self.build_noise(grid),
                sigma_index=self.sigma_n,
                gamma=self.gamma,
                t_start=self.t_start,
                t_end=self.t_end,
                dt=self.dt,
                seed=self.seed if seed is None else seed,
                clamping=self.clamping,
                snapshot_stride=self.snapshot_stride,
                label=label,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def check_profile(self, kernel: KernelSpec | None) -> None:
        """The theory-guaranteed profile requires a kernel passing (A1)."""
        if kernel is None or kernel.exponents is None:
            return
        report = kernel.lps_report()
        if report.a1_pass:
            return
        message = f"kernel exponents fail Assumption (A1): {report.summary()}"
        if self.profile == "theory":
            raise ConfigError(message)
        warnings.warn(message + " (exploratory profile, continuing)", stacklevel=2)


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section: str, key: str, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    try:
        kind = get("experiment", "kind", "simulate").strip()
        if kind not in _KINDS:
            raise ConfigError(f"unknown experiment kind {kind!r}")
        wavevector = get("kernel", "wavevector")
        exponents = None
        declared = [get("kernel", k) for k in ("p", "pstar", "q", "qstar")]
        if any(v is not None for v in declared):
            if any(v is None for v in declared):
                raise ConfigError("declare all four kernel exponents or none")
            exponents = tuple(_parse_exponent(v) for v in declared)
        gamma_text = get("kernel", "gamma")
        amps_text = get("noise", "amplitudes")
        cfg = ExperimentConfig(
            text=text,
            kind=kind,
            grid_dimension=int(get("grid", "dimension", "1")),
            grid_points=int(get("grid", "points", "64")),
            kernel_type=get("kernel", "type", "none").strip(),
            kernel_truncation=(
                int(get("kernel", "truncation")) if get("kernel", "truncation") else None
            ),
            kernel_amplitude=float(get("kernel", "amplitude", "1.0")),
            kernel_wavevector=(
                tuple(_int_list(wavevector)) if wavevector else None
            ),
            kernel_path=get("kernel", "path"),
            kernel_exponents=exponents,
            gamma=float(gamma_text) if gamma_text else None,
            noise_type=get("noise", "type", "none").strip(),
            noise_truncation=int(get("noise", "truncation", "1")),
            noise_amplitude=float(get("noise", "amplitude", "1.0")),
            noise_amplitudes=_float_list(amps_text) if amps_text else None,
            sigma_n=int(get("sigma", "n", "64")),
            t_start=float(get("time", "start", "0.0")),
            t_end=float(get("time", "end", "0.1")),
            dt=float(get("time", "dt", "1e-4")),
            snapshot_stride=int(get("time", "snapshot_stride", "1")),
            out_directory=get("output", "directory"),
            write_snapshots=_parse_bool(get("output", "snapshots", "false")),
            write_figures=_parse_bool(get("output", "figures", "true")),
            seed=int(get("experiment", "seed", "0")),
            replicas=int(get("experiment", "replicas", "1")),
            threads=int(get("experiment", "threads", "1")),
            profile=get("experiment", "profile", "exploratory").strip(),
            clamping=get("experiment", "clamping", "off").strip(),
            initial=get("experiment", "initial", "constant: value=1.0"),
            initial2=get("experiment", "initial2"),
            n_ladder=_int_list(get("experiment", "n_ladder", "")),
            gamma_ladder=_float_list(get("experiment", "gamma_ladder", "")),
            particle_count=int(get("experiment", "count", "1000")),
            particle_counts=_int_list(get("experiment", "counts", "")),
            bandwidth=float(get("experiment", "bandwidth", "0.05")),
            particle_dt=(
                float(get("experiment", "particle_dt"))
                if get("experiment", "particle_dt")
                else None
            ),
            export_fluctuations=_parse_bool(get("experiment", "export_fluctuations", "false")),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc

    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.grid_dimension not in (1, 2):
        raise ConfigError("grid dimension must be 1 or 2 at desk scale")
    n = cfg.grid_points
    if n < 4 or (n & (n - 1)) != 0:
        raise ConfigError("grid points must be a power of two >= 4")
    if cfg.dt <= 0 or not (cfg.t_start < cfg.t_end):
        raise ConfigError("time window must satisfy start < end with dt > 0")
    if cfg.profile not in ("exploratory", "theory"):
        raise ConfigError("profile must be 'exploratory' or 'theory'")
    if cfg.clamping not in ("off", "clamp"):
        raise ConfigError("clamping must be 'off' or 'clamp'")
    if cfg.kernel_type == "biot_savart" and cfg.grid_dimension != 2:
        raise ConfigError("Biot-Savart kernel requires a 2-d grid")
    if cfg.gamma is not None and not (0.0 < cfg.gamma <= 1.0):
        raise ConfigError("kernel gamma must lie in (0, 1]")
    if cfg.kind == "uniqueness" and not cfg.initial2:
        raise ConfigError("uniqueness experiments need initial2")
    if cfg.kind == "ladder" and not (cfg.n_ladder or cfg.gamma_ladder):
        raise ConfigError("ladder experiments need n_ladder and/or gamma_ladder")
    if cfg.kind == "compare" and not cfg.particle_counts:
        raise ConfigError("compare experiments need counts")
    if cfg.replicas < 1 or cfg.threads < 1:
        raise ConfigError("replicas and threads must be >= 1")


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
