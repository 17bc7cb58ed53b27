"""
Correlated conservative noise: mode families, correction fields, replayable paths.

The driving noise is W(x,t) = sum_k f_k(x) B_t^k with smooth band-limited
coefficient functions f_k. Each scalar mode drives one independent Brownian
component per spatial direction; that is the structure under which the
Stratonovich-to-Ito correction aggregates to the isotropic fields

    F1 = sum_k f_k^2,   F2 = (1/2) sum_k grad(f_k^2),   F3 = sum_k |grad f_k|^2.

Increment streams are counter-based (Philox keyed by seed/replica, counter by
step) so replay is bit-exact and independent of traversal order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from .grid import GridSpec, RealField, VectorField, gradient_arr

__all__ = [
    "NoiseMode",
    "NoiseSpec",
    "FCoefficients",
    "NoisePath",
    "NoiseDiagnosticWarning",
    "uv_noise",
    "harmonic_mode",
    "compute_F",
    "sample_path",
    "gaussian_block",
]

STREAM_SPDE = 0
STREAM_PARTICLES = 1
STREAM_SAMPLING = 2


class NoiseDiagnosticWarning(UserWarning):
    """Standing assumption div F2 = (1/2) lap F1 = 0 violated beyond tolerance."""


@dataclass(frozen=True)
class NoiseMode:
    """One coefficient function f_k.

    Harmonic modes (a sin(2 pi k.x) or a cos(2 pi k.x)) carry their wavevector
    and amplitude so squares and gradients can be formed exactly in the
    coefficient domain; generic modes fall back to FFT arithmetic.
    """

    field: RealField
    amplitude: float | None = None
    wavevector: tuple[int, ...] | None = None
    kind: str | None = None  # "sin" | "cos" | None

    @property
    def is_harmonic(self) -> bool:
        return self.kind in ("sin", "cos")


def harmonic_mode(grid: GridSpec, wavevector: tuple[int, ...], amplitude: float, kind: str) -> NoiseMode:
    if kind not in ("sin", "cos"):
        raise ValueError("kind must be 'sin' or 'cos'")
    coords = grid.coordinates()
    phase = 2.0 * np.pi * sum(k * x for k, x in zip(wavevector, coords))
    vals = amplitude * (np.sin(phase) if kind == "sin" else np.cos(phase))
    return NoiseMode(RealField(grid, vals), amplitude, tuple(wavevector), kind)


@dataclass(frozen=True)
class NoiseSpec:
    """Finite mode family of the driving noise, with the global amplitude knob."""

    grid: GridSpec
    modes: tuple[NoiseMode, ...]
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if any(m.field.grid != self.grid for m in self.modes):
            raise ValueError("all modes must live on the noise grid")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def scaled(self, factor: float) -> "NoiseSpec":
        return NoiseSpec(self.grid, self.modes, self.amplitude * factor)

    def values_matrix(self) -> np.ndarray:
        """Stacked mode values, scaled by the amplitude knob: shape (n_modes, grid.size)."""
        if not self.modes:
            return np.zeros((0, self.grid.size))
        return self.amplitude * np.stack([m.field.values.ravel() for m in self.modes])


def uv_wavevectors(dimension: int, truncation: int) -> list[tuple[int, ...]]:
    """Half-space enumeration of 0 < |k| <= K, sorted by |k|^2 then lexicographically.

    Only one of {k, -k} is listed; each listed wavevector carries a sin/cos
    pair, which spans the same space as both signs would.
    """
    out: list[tuple[int, ...]] = []
    if dimension == 1:
        out = [(k,) for k in range(1, truncation + 1)]
    elif dimension == 2:
        for k1 in range(-truncation, truncation + 1):
            for k2 in range(-truncation, truncation + 1):
                if (k1, k2) == (0, 0) or k1**2 + k2**2 > truncation**2:
                    continue
                if k1 > 0 or (k1 == 0 and k2 > 0):
                    out.append((k1, k2))
    else:
        raise ValueError("uv noise implemented for d in {1, 2}")
    return sorted(out, key=lambda k: (sum(c * c for c in k), k))


def uv_noise(grid: GridSpec, truncation: int, amplitudes, epsilon: float = 1.0) -> NoiseSpec:
    """Ultraviolet mode family: sin/cos pair per wavevector with 0 < |k| <= K.

    `amplitudes` is a scalar or one value per enumerated wavevector; both
    members of a pair share the value. K must stay inside the dealiased band.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if truncation > grid.points // 3:
        raise ValueError("truncation exceeds the dealiased band n/3")
    kvecs = uv_wavevectors(grid.dimension, truncation)
    amps = np.asarray(amplitudes, dtype=np.float64)
    if amps.ndim == 0:
        amps = np.full(len(kvecs), float(amps))
    if len(amps) < len(kvecs):
        raise ValueError(f"amplitude sequence length {len(amps)} < mode count {len(kvecs)}")
    modes = []
    for k, a in zip(kvecs, amps):
        modes.append(harmonic_mode(grid, k, float(a), "sin"))
        modes.append(harmonic_mode(grid, k, float(a), "cos"))
    return NoiseSpec(grid, tuple(modes), amplitude=epsilon)


@dataclass(frozen=True)
class FCoefficients:
    """The quadratic mode aggregates entering the Ito correction and diagnostics."""

    f1: RealField
    f2: VectorField
    f3: RealField
    div_f2_defect: float
    lap_f1_defect: float

    def __post_init__(self) -> None:
        if self.f1.values.min() < -1e-12 or self.f3.values.min() < -1e-12:
            raise ValueError("F1 and F3 must be nonnegative")

    @property
    def standing_assumption_ok(self) -> bool:
        return self.div_f2_defect <= 1e-10 and self.lap_f1_defect <= 1e-10


def _square_coefficients(mode: NoiseMode, amplitude_scale: float) -> np.ndarray:
    """Fourier coefficients (FFT layout, unnormalized by grid.size) of (scale*f)^2.

    For harmonic modes the square has exactly three coefficients; writing them
    directly lets the +-2k terms of a sin/cos pair cancel exactly, which is
    what makes F2 vanish to machine zero for paired families.
    """
    grid = mode.field.grid
    size = grid.size
    out = np.zeros(grid.shape, dtype=np.complex128)
    if mode.is_harmonic:
        a = amplitude_scale * mode.amplitude
        half = 0.5 * a * a
        quarter = 0.25 * a * a
        out[(0,) * grid.dimension] = half * size
        idx2 = tuple((2 * k) % grid.points for k in mode.wavevector)
        idx2m = tuple((-2 * k) % grid.points for k in mode.wavevector)
        sign = -1.0 if mode.kind == "sin" else 1.0
        out[idx2] += sign * quarter * size
        out[idx2m] += sign * quarter * size
    else:
        vals = (amplitude_scale * mode.field.values) ** 2
        out = np.fft.fftn(vals)
    return out


def _gradient_values(mode: NoiseMode, amplitude_scale: float) -> list[np.ndarray]:
    grid = mode.field.grid
    if mode.is_harmonic:
        a = amplitude_scale * mode.amplitude
        coords = grid.coordinates()
        phase = 2.0 * np.pi * sum(k * x for k, x in zip(mode.wavevector, coords))
        radial = np.cos(phase) if mode.kind == "sin" else -np.sin(phase)
        return [a * 2.0 * np.pi * k * radial for k in mode.wavevector]
    return gradient_arr(grid, amplitude_scale * mode.field.values)


def compute_F(noise: NoiseSpec, tolerance: float = 1e-10) -> FCoefficients:
    """Aggregate F1 (pointwise), F2 = (1/2) grad(sum f_k^2) and F3 (pointwise).

    Warns with NoiseDiagnosticWarning when the standing assumption
    div F2 = (1/2) lap F1 = 0 fails beyond `tolerance`; never raises for it.
    """
    grid = noise.grid
    eps = noise.amplitude
    f1_vals = np.zeros(grid.shape)
    f3_vals = np.zeros(grid.shape)
    sq_hat = np.zeros(grid.shape, dtype=np.complex128)
    for mode in noise.modes:
        f1_vals += (eps * mode.field.values) ** 2
        grads = _gradient_values(mode, eps)
        for g in grads:
            f3_vals += g * g
        sq_hat += _square_coefficients(mode, eps)

    f2_comps = []
    div_f2_hat = np.zeros(grid.shape, dtype=np.complex128)
    for k in grid.deriv_wavenumbers:
        comp_hat = 0.5 * 2j * np.pi * k * sq_hat
        f2_comps.append(RealField(grid, np.fft.ifftn(comp_hat).real))
        div_f2_hat += 2j * np.pi * k * comp_hat
    div_f2 = np.fft.ifftn(div_f2_hat).real
    div_f2_defect = float(np.abs(div_f2).max())
    # lap F1 = 2 div F2 by construction; report it on its own scale anyway
    lap_f1_defect = 2.0 * div_f2_defect

    if div_f2_defect > tolerance or lap_f1_defect > tolerance:
        warnings.warn(
            f"noise mode family violates div F2 = (1/2) lap F1 = 0: "
            f"max |div F2| = {div_f2_defect:.3e}",
            NoiseDiagnosticWarning,
            stacklevel=2,
        )
    return FCoefficients(
        f1=RealField(grid, f1_vals),
        f2=VectorField(tuple(f2_comps)),
        f3=RealField(grid, f3_vals),
        div_f2_defect=div_f2_defect,
        lap_f1_defect=lap_f1_defect,
    )


# ---------------------------------------------------------------------------
# replayable increment streams
# ---------------------------------------------------------------------------


def gaussian_block(
    seed: int,
    step: int,
    shape: tuple[int, ...],
    scale: float,
    stream: int = STREAM_SPDE,
    replica: int = 0,
) -> np.ndarray:
    """Deterministic N(0, scale^2) block keyed by (seed, replica, stream, step).

    Distinct steps, streams and replicas use disjoint Philox counter ranges,
    so the draws are independent of traversal order and safe to generate in
    parallel.
    """
    bg = Philox(key=[seed & (2**64 - 1), replica & (2**64 - 1)], counter=[0, 0, stream, step])
    return Generator(bg).normal(0.0, scale, size=shape)


@dataclass(frozen=True)
class NoisePath:
    """Materialized Brownian increments: shape (steps, n_modes, dimension).

    Regeneration from (seed, dt, steps, n_modes, dimension, replica) is
    bit-identical; persisting the parameters suffices.
    """

    seed: int
    dt: float
    steps: int
    n_modes: int
    dimension: int
    increments: np.ndarray
    replica: int = 0
    lineage: str = "philox"

    def describe(self) -> dict:
        """Persistable record: these parameters regenerate the path bit-identically."""
        return {
            "seed": self.seed,
            "dt": self.dt,
            "steps": self.steps,
            "n_modes": self.n_modes,
            "dimension": self.dimension,
            "replica": self.replica,
            "lineage": self.lineage,
        }

    @classmethod
    def from_description(cls, desc: dict) -> "NoisePath":
        if desc.get("lineage", "philox") != "philox":
            raise ValueError("derived paths must be rebuilt from their base path")
        path = regenerate_path(
            desc["seed"], desc["dt"], desc["steps"], desc["n_modes"], desc["dimension"],
            desc.get("replica", 0),
        )
        return path

    def coarsened(self) -> "NoisePath":
        """Pairwise-summed increments: the same Brownian path at twice the step."""
        if self.steps % 2 != 0:
            raise ValueError("need an even number of steps to coarsen")
        inc = self.increments.reshape(self.steps // 2, 2, self.n_modes, self.dimension).sum(axis=1)
        return NoisePath(
            seed=self.seed,
            dt=2.0 * self.dt,
            steps=self.steps // 2,
            n_modes=self.n_modes,
            dimension=self.dimension,
            increments=inc,
            replica=self.replica,
            lineage=self.lineage + "/coarsened",
        )


def regenerate_path(seed: int, dt: float, steps: int, n_modes: int, dimension: int, replica: int = 0) -> NoisePath:
    if dt <= 0:
        raise ValueError("dt must be positive")
    inc = np.empty((steps, n_modes, dimension))
    scale = float(np.sqrt(dt))
    for step in range(steps):
        inc[step] = gaussian_block(seed, step, (n_modes, dimension), scale, STREAM_SPDE, replica)
    return NoisePath(
        seed=seed, dt=dt, steps=steps, n_modes=n_modes, dimension=dimension,
        increments=inc, replica=replica,
    )


def sample_path(noise: NoiseSpec, dt: float, steps: int, seed: int, replica: int = 0) -> NoisePath:
    """Draw the per-step, per-mode, per-direction increments Delta beta ~ N(0, dt)."""
    return regenerate_path(seed, dt, steps, noise.n_modes, noise.grid.dimension, replica)
