"""
Discrete torus of volume 1 and the spectral operators everything else runs on.

Fields live on a uniform n^d grid over [0,1)^d with periodic wrap. Spectral
coefficients use the analytic normalization: a real field f decomposes as
f(x) = sum_k c_k exp(2j*pi*k.x) with c_k = fft(f)/n^d, so Parseval reads
integral(|f|^2) = sum_k |c_k|^2 and a convolution kernel with all
coefficients equal to 1 acts as the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "VectorField",
    "integrate",
    "lp_norm",
    "forward",
    "inverse",
    "gradient",
    "divergence",
    "laplacian",
    "convolve",
    "dealias",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: `dimension` axes, `points` nodes per axis, period 1."""

    dimension: int
    points: int

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        n = self.points
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError("points must be a power of two >= 4")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def spacing(self) -> float:
        return 1.0 / self.points

    @property
    def size(self) -> int:
        return self.points**self.dimension

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumber array per axis, broadcast to the grid shape."""
        n = self.points
        k1 = np.fft.fftfreq(n, d=1.0 / n)
        mesh = np.meshgrid(*([k1] * self.dimension), indexing="ij")
        return tuple(k.astype(np.float64) for k in mesh)

    @cached_property
    def deriv_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers used for differentiation, with the Nyquist mode zeroed.

        The k = -n/2 column has no resolvable odd-derivative counterpart on an
        even grid, so it is dropped from every differential operator. This
        keeps gradients of real fields real and makes div(grad) consistent.
        """
        n = self.points
        out = []
        for k in self.wavevectors:
            kd = k.copy()
            kd[np.abs(k) == n // 2] = 0.0
            out.append(kd)
        return tuple(out)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule mask: keep |k_axis| <= n/3 on every axis."""
        cut = self.points // 3
        mask = np.ones(self.shape, dtype=bool)
        for k in self.wavevectors:
            mask &= np.abs(k) <= cut
        return mask

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Node coordinates per axis, broadcast to the grid shape."""
        x1 = np.arange(self.points) / self.points
        return tuple(np.meshgrid(*([x1] * self.dimension), indexing="ij"))


@dataclass(frozen=True)
class RealField:
    """Scalar field sampled on the grid nodes (row-major axis order)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "RealField":
        return cls(grid, np.asarray(fn(*grid.coordinates()), dtype=np.float64))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "RealField":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "RealField":
        return RealField(self.grid, values)


@dataclass(frozen=True)
class SpectralField:
    """Fourier-side scalar field; coefficients in FFT layout, analytic normalization."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeff = np.asarray(self.coefficients, dtype=np.complex128)
        if coeff.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {coeff.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "coefficients", coeff)

    def conjugate_symmetry_defect(self) -> float:
        """Max |c(-k) - conj(c(k))|; zero iff the field it represents is real."""
        c = self.coefficients
        flipped = c.copy()
        for axis in range(c.ndim):
            flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
        return float(np.abs(flipped - np.conj(c)).max())


@dataclass(frozen=True)
class VectorField:
    """One RealField per axis, all on a shared grid."""

    components: tuple[RealField, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("vector field needs at least one component")
        grid = self.components[0].grid
        if any(c.grid != grid for c in self.components):
            raise ValueError("vector field components must share one grid")
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def magnitude_squared(self) -> RealField:
        vals = sum(c.values**2 for c in self.components)
        return RealField(self.grid, vals)


# ---------------------------------------------------------------------------
# array-level kernels (used by the solver hot loop; field ops wrap these)
# ---------------------------------------------------------------------------


def forward_arr(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values) / grid.size


def inverse_arr(grid: GridSpec, coeff: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(coeff * grid.size).real


def gradient_arr(grid: GridSpec, values: np.ndarray) -> list[np.ndarray]:
    fhat = np.fft.fftn(values)
    return [np.fft.ifftn(2j * np.pi * k * fhat).real for k in grid.deriv_wavenumbers]


def divergence_arr(grid: GridSpec, comps: list[np.ndarray]) -> np.ndarray:
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for k, comp in zip(grid.deriv_wavenumbers, comps):
        acc += 2j * np.pi * k * np.fft.fftn(comp)
    return np.fft.ifftn(acc).real


def dealias_arr(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    fhat = np.fft.fftn(values)
    fhat[~grid.dealias_mask] = 0.0
    return np.fft.ifftn(fhat).real


def convolve_arr(grid: GridSpec, kernel_coeff: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(kernel_coeff * np.fft.fftn(values)).real


# ---------------------------------------------------------------------------
# field-level operations
# ---------------------------------------------------------------------------


def integrate(f: RealField) -> float:
    """Quadrature of f over the volume-1 torus (exact for resolvable trig polynomials)."""
    return float(np.mean(f.values))


def lp_norm(f: RealField, p: float) -> float:
    """L^p norm by grid quadrature; p = inf gives max |f|."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(f.values)
    top = float(a.max())
    if np.isinf(p) or top == 0.0:
        return top
    # scale out the max so large fields do not overflow at high p
    return top * float(np.mean((a / top) ** p) ** (1.0 / p))


def forward(f: RealField) -> SpectralField:
    return SpectralField(f.grid, forward_arr(f.grid, f.values))


def inverse(fhat: SpectralField) -> RealField:
    return RealField(fhat.grid, inverse_arr(fhat.grid, fhat.coefficients))


def gradient(f: RealField) -> VectorField:
    comps = gradient_arr(f.grid, f.values)
    return VectorField(tuple(RealField(f.grid, c) for c in comps))


def divergence(v: VectorField) -> RealField:
    vals = divergence_arr(v.grid, [c.values for c in v.components])
    return RealField(v.grid, vals)


def laplacian(f: RealField) -> RealField:
    return divergence(gradient(f))


def dealias(f: RealField) -> RealField:
    return RealField(f.grid, dealias_arr(f.grid, f.values))


def convolve(kernel: SpectralField, f: RealField) -> RealField:
    """Periodic convolution: pointwise product of kernel coefficients with f's spectrum."""
    if kernel.grid != f.grid:
        raise ValueError("kernel and field grids differ")
    return RealField(f.grid, convolve_arr(f.grid, kernel.coefficients, f.values))


def upsample(f: RealField, factor: int) -> RealField:
    """Trigonometric interpolation onto a `factor` x finer grid (exact for band-limited f)."""
    if factor < 1 or (factor & (factor - 1)) != 0:
        raise ValueError("factor must be a power of two >= 1")
    if factor == 1:
        return f
    grid = f.grid
    n, d = grid.points, grid.dimension
    fine = GridSpec(d, n * factor)
    coeff = np.fft.fftshift(np.fft.fftn(f.values)) / grid.size
    pad = (n * factor - n) // 2
    coeff = np.pad(coeff, [(pad, pad)] * d)
    vals = np.fft.ifftn(np.fft.ifftshift(coeff) * fine.size).real
    return RealField(fine, vals)
