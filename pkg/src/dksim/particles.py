"""
Interacting particle system dX_i = (1/N) sum_{j != i} V(X_i - X_j) dt
+ sqrt(2) dB_i on the torus, and its empirical measure; the independent
oracle for the mean-field solver.

Drift evaluation uses the truncated Fourier series of V as a mode sum
(exact for band-limited kernels, cost O(N * modes)); the self-interaction
j = i is removed exactly by subtracting V(0)/N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, RealField, convolve_arr, upsample
from .kernels import KernelSpec
from .noise import STREAM_PARTICLES, STREAM_SAMPLING, gaussian_block

__all__ = [
    "ParticleState",
    "EmpiricalDensity",
    "particle_drift",
    "step_particles",
    "particle_draws",
    "empirical_density",
    "sample_from_density",
]


@dataclass(frozen=True)
class ParticleState:
    """N particle positions in [0,1)^d at time t."""

    positions: np.ndarray
    t: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2:
            raise ValueError("positions must have shape (N, d)")
        if pos.min() < 0.0 or pos.max() >= 1.0:
            raise ValueError("positions must be wrapped into [0, 1)")
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class EmpiricalDensity:
    """Smoothed histogram of the empirical measure; unit mass by construction."""

    field: RealField
    bandwidth: float

    def __post_init__(self) -> None:
        mass = float(self.field.values.mean())
        if abs(mass - 1.0) > 1e-10:
            raise ValueError(f"empirical density mass {mass} != 1")


def _kernel_modes(kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero kernel modes as (wavevectors (M, d), coefficients (M, d))."""
    grid = kernel.grid
    stacked = np.stack([c for c in kernel.fourier_coefficients], axis=-1)
    nz = np.any(stacked != 0, axis=-1)
    idx = np.argwhere(nz)
    kvecs = np.stack(
        [grid.wavevectors[a][tuple(idx.T)] for a in range(grid.dimension)], axis=-1
    )
    coeffs = stacked[tuple(idx.T)]
    return kvecs.astype(np.float64), coeffs


def particle_drift(state: ParticleState, kernel: KernelSpec | None) -> np.ndarray:
    """(1/N) sum_{j != i} V(X_i - X_j) for every i, via the kernel's mode sum."""
    n, d = state.positions.shape
    if kernel is None or n == 1:
        return np.zeros((n, d))
    kvecs, coeffs = _kernel_modes(kernel)
    if len(kvecs) == 0:
        return np.zeros((n, d))
    phases = state.positions @ kvecs.T  # (N, M)
    waves = np.exp(2j * np.pi * phases)
    mode_sums = waves.conj().sum(axis=0)  # S_k = sum_j e^{-2 pi i k.X_j}
    v_at_zero = coeffs.sum(axis=0).real
    drift = np.empty((n, d))
    for axis in range(d):
        drift[:, axis] = (waves @ (coeffs[:, axis] * mode_sums)).real - v_at_zero[axis]
    return drift / n


def particle_draws(count: int, dimension: int, step: int, seed: int, replica: int = 0) -> np.ndarray:
    """Standard normal block for one Euler-Maruyama step, counter-keyed."""
    return gaussian_block(seed, step, (count, dimension), 1.0, STREAM_PARTICLES, replica)


def step_particles(
    state: ParticleState, dt: float, kernel: KernelSpec | None, draws: np.ndarray
) -> ParticleState:
    """X += drift dt + sqrt(2 dt) xi, wrapped back onto the torus."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    draws = np.asarray(draws, dtype=np.float64)
    if draws.shape != state.positions.shape:
        raise ValueError("draws shape must match positions")
    drift = particle_drift(state, kernel)
    new = state.positions + dt * drift + np.sqrt(2.0 * dt) * draws
    return ParticleState(np.mod(new, 1.0), state.t + dt)


def empirical_density(state: ParticleState, grid: GridSpec, bandwidth: float) -> EmpiricalDensity:
    """Histogram on the grid, normalized to unit mass, then periodic Gaussian
    smoothing of scale `bandwidth` (a mass-preserving Fourier multiplier)."""
    if bandwidth < grid.spacing:
        raise ValueError("bandwidth must be at least the grid spacing")
    if state.dimension != grid.dimension:
        raise ValueError("state and grid dimensions differ")
    edges = [np.linspace(0.0, 1.0, grid.points + 1)] * grid.dimension
    counts, _ = np.histogramdd(state.positions, bins=edges)
    density = counts / (state.count * grid.spacing**grid.dimension)
    ksq = sum(k**2 for k in grid.wavevectors)
    multiplier = np.exp(-0.5 * bandwidth**2 * 4.0 * np.pi**2 * ksq)
    smoothed = convolve_arr(grid, multiplier, density)
    smoothed = np.maximum(smoothed, 0.0)
    smoothed /= smoothed.mean()
    return EmpiricalDensity(RealField(grid, smoothed), bandwidth)


def sample_from_density(density: RealField, count: int, seed: int, replica: int = 0) -> np.ndarray:
    """Draw iid positions from a nonnegative band-limited density of unit mass.

    d = 1 inverts the numeric CDF on an upsampled grid; d = 2 uses rejection
    sampling against the trigonometric interpolant.
    """
    grid = density.grid
    vals = density.values
    if vals.min() < -1e-12:
        raise ValueError("density must be nonnegative")
    if abs(vals.mean() - 1.0) > 1e-8:
        raise ValueError("density must have unit mass")
    if grid.dimension == 1:
        fine = upsample(density, 8)
        pdf = np.maximum(fine.values, 0.0)
        n = fine.grid.points
        x = np.arange(n + 1) / n
        cdf = np.concatenate([[0.0], np.cumsum(pdf) / n])
        cdf /= cdf[-1]
        u = _uniform_block(seed, replica, 0, count)
        return np.interp(u, cdf, x).reshape(-1, 1) % 1.0
    fine = upsample(density, 4)
    pdf = np.maximum(fine.values, 0.0)
    top = float(pdf.max())
    n = fine.grid.points
    out = np.empty((0, grid.dimension))
    block = 0
    while out.shape[0] < count:
        u = _uniform_block(seed, replica, block, 4 * count * grid.dimension + 4 * count)
        props = u[: 4 * count * grid.dimension].reshape(-1, grid.dimension)
        accept_u = u[4 * count * grid.dimension :]
        idx = tuple((props[:, a] * n).astype(int) % n for a in range(grid.dimension))
        accepted = props[accept_u * top <= pdf[idx]]
        out = np.concatenate([out, accepted])
        block += 1
    return out[:count]


def _uniform_block(seed: int, replica: int, block: int, size: int) -> np.ndarray:
    from numpy.random import Generator, Philox

    bg = Philox(key=[seed & (2**64 - 1), replica & (2**64 - 1)], counter=[0, 0, STREAM_SAMPLING, block])
    return Generator(bg).random(size)
