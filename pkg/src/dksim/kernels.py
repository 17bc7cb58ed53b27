"""
Interaction kernels V: construction, mollification, LPS exponent audit, application.

Kernels are band-limited vector fields given by their Fourier coefficients
(one complex array per component, analytic normalization as in `grid`).
Integrability exponents are declared metadata: a band-limited grid kernel is
always smooth, so the (p, p*, q, q*) class records which singular kernel the
coefficients truncate, not a measured norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridSpec,
    RealField,
    SpectralField,
    VectorField,
    convolve_arr,
    inverse_arr,
)

__all__ = [
    "KernelSpec",
    "KernelSchedule",
    "LpsReport",
    "check_lps",
    "biot_savart",
    "single_mode_kernel",
    "zero_kernel",
    "mollify",
    "apply",
    "divergence_of",
    "save_kernel_table",
    "load_kernel_table",
]


@dataclass(frozen=True)
class LpsReport:
    """Outcome of the Ladyzhenskaya-Prodi-Serrin exponent audit.

    (A1): d/p + 2/p* <= 1 with 2 <= p* <= inf and d < p <= inf, for V itself.
    (A2): d/(2q) + 1/q* <= 1 with 1 <= q* <= inf and d/2 < q <= inf, for div V.
    """

    a1_pass: bool
    a2_pass: bool
    a1_lhs: float
    a2_lhs: float
    checks: dict = field(default_factory=dict)

    def summary(self) -> str:
        return (
            f"A1 {'pass' if self.a1_pass else 'fail'} (d/p + 2/p* = {self.a1_lhs:.6g}), "
            f"A2 {'pass' if self.a2_pass else 'fail'} (d/(2q) + 1/q* = {self.a2_lhs:.6g})"
        )


def _inv(e: float) -> float:
    return 0.0 if math.isinf(e) else 1.0 / e


def check_lps(d: int, p: float, pstar: float, q: float, qstar: float) -> LpsReport:
    """Evaluate the (A1)/(A2) inequalities exactly, treating 1/inf as 0."""
    for name, e in (("p", p), ("pstar", pstar), ("q", q), ("qstar", qstar)):
        if not (e >= 1):
            raise ValueError(f"exponent {name} must be >= 1 (or inf), got {e}")
    a1_lhs = d * _inv(p) + 2.0 * _inv(pstar)
    a2_lhs = d * _inv(2.0 * q) + _inv(qstar)
    checks = {
        "a1_sum": a1_lhs <= 1.0,
        "a1_pstar_range": 2.0 <= pstar,
        "a1_p_range": p > d,
        "a2_sum": a2_lhs <= 1.0,
        "a2_qstar_range": 1.0 <= qstar,
        "a2_q_range": q > d / 2.0,
    }
    a1 = checks["a1_sum"] and checks["a1_pstar_range"] and checks["a1_p_range"]
    a2 = checks["a2_sum"] and checks["a2_qstar_range"] and checks["a2_q_range"]
    return LpsReport(a1_pass=a1, a2_pass=a2, a1_lhs=a1_lhs, a2_lhs=a2_lhs, checks=checks)


@dataclass(frozen=True)
class KernelSpec:
    """Band-limited interaction kernel: per-component Fourier coefficients
    plus optional declared integrability exponents (p, p*) for V and (q, q*)
    for div V."""

    grid: GridSpec
    fourier_coefficients: tuple[np.ndarray, ...]
    exponents: tuple[float, float, float, float] | None = None

    def __post_init__(self) -> None:
        coeffs = tuple(
            np.asarray(c, dtype=np.complex128) for c in self.fourier_coefficients
        )
        if len(coeffs) != self.grid.dimension:
            raise ValueError("need one coefficient array per axis")
        for c in coeffs:
            if c.shape != self.grid.shape:
                raise ValueError("coefficient array shape mismatch")
        if self.exponents is not None:
            p, pstar, q, qstar = self.exponents
            if p < 1 or pstar < 1 or q < 1 or qstar < 1:
                raise ValueError("declared exponents must be >= 1")
        object.__setattr__(self, "fourier_coefficients", coeffs)

    def lps_report(self) -> LpsReport:
        if self.exponents is None:
            raise ValueError("kernel declares no integrability exponents")
        p, pstar, q, qstar = self.exponents
        return check_lps(self.grid.dimension, p, pstar, q, qstar)

    def component_fields(self) -> VectorField:
        """Physical-space representation of the kernel."""
        comps = tuple(
            RealField(self.grid, inverse_arr(self.grid, c))
            for c in self.fourier_coefficients
        )
        return VectorField(comps)

    def scaled(self, factor: float) -> "KernelSpec":
        return KernelSpec(
            self.grid,
            tuple(factor * c for c in self.fourier_coefficients),
            self.exponents,
        )


class KernelSchedule:
    """Piecewise-constant-in-time kernel: sorted (time, KernelSpec) breakpoints.

    The solver interface accepts time-dependent V even though the desk-scale
    experiments use a single level.
    """

    def __init__(self, entries: list[tuple[float, KernelSpec]]):
        if not entries:
            raise ValueError("schedule needs at least one entry")
        entries = sorted(entries, key=lambda e: e[0])
        grid = entries[0][1].grid
        if any(spec.grid != grid for _, spec in entries):
            raise ValueError("schedule kernels must share one grid")
        self.entries = entries

    @classmethod
    def constant(cls, spec: KernelSpec) -> "KernelSchedule":
        return cls([(0.0, spec)])

    def at(self, t: float) -> KernelSpec:
        current = self.entries[0][1]
        for stamp, spec in self.entries:
            if stamp <= t:
                current = spec
            else:
                break
        return current


def zero_kernel(grid: GridSpec) -> KernelSpec:
    coeffs = tuple(np.zeros(grid.shape, dtype=np.complex128) for _ in range(grid.dimension))
    return KernelSpec(grid, coeffs, exponents=(math.inf, math.inf, math.inf, math.inf))


def biot_savart(grid: GridSpec, truncation: int) -> KernelSpec:
    """Fourier truncation of the 2-d Biot-Savart kernel.

    Real sin/cos amplitude k_perp/(2 pi |k|^2) per wavevector maps to complex
    coefficients i k_perp/(2 pi |k|^2); the divergence i 2pi k . c(k) then
    vanishes identically since k . k_perp = 0. The untruncated kernel lies in
    L^p only for p < 2, with div V = 0, hence the declared exponent class
    (3/2, inf) / (inf, inf): A1 fails, A2 passes.
    """
    if grid.dimension != 2:
        raise ValueError("Biot-Savart kernel requires d = 2")
    if truncation > grid.points // 2:
        raise ValueError("truncation exceeds resolvable band")
    k1, k2 = grid.wavevectors
    ksq = k1**2 + k2**2
    inband = (ksq > 0) & (np.maximum(np.abs(k1), np.abs(k2)) <= truncation)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(inband, 1.0 / (2.0 * np.pi * ksq), 0.0)
    # k_perp = (-k2, k1)
    c1 = 1j * (-k2) * base
    c2 = 1j * k1 * base
    return KernelSpec(grid, (c1, c2), exponents=(1.5, math.inf, math.inf, math.inf))


def single_mode_kernel(
    grid: GridSpec,
    wavevector: tuple[int, ...],
    amplitude: float = 1.0,
    exponents: tuple[float, float, float, float] | None = None,
) -> KernelSpec:
    """Smooth one-mode kernel: every component amplitude * sin(2 pi k.x).

    Smooth and bounded, so the natural declaration is p = p* = q = q* = inf.
    """
    if len(wavevector) != grid.dimension:
        raise ValueError("wavevector dimension mismatch")
    if exponents is None:
        exponents = (math.inf, math.inf, math.inf, math.inf)
    coeffs = []
    idx_plus = tuple(k % grid.points for k in wavevector)
    idx_minus = tuple((-k) % grid.points for k in wavevector)
    for _ in range(grid.dimension):
        c = np.zeros(grid.shape, dtype=np.complex128)
        c[idx_plus] = -0.5j * amplitude
        c[idx_minus] = 0.5j * amplitude
        coeffs.append(c)
    return KernelSpec(grid, tuple(coeffs), exponents=exponents)


def mollifier_multiplier(grid: GridSpec, gamma: float) -> np.ndarray:
    """Periodic heat-kernel multiplier: exp(-gamma^2 4pi^2 |k|^2 / 2).

    Smooth, positive, equal to 1 at k = 0 and monotone in gamma, which is all
    the standard-convolution-kernel machinery asks of eta_gamma.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must lie in (0, 1]")
    ksq = sum(k**2 for k in grid.wavevectors)
    return np.exp(-0.5 * gamma**2 * 4.0 * np.pi**2 * ksq)


def mollify(kernel: KernelSpec, gamma: float) -> KernelSpec:
    """V_gamma = V * eta_gamma, realized as a Fourier multiplier in (0, 1]."""
    mult = mollifier_multiplier(kernel.grid, gamma)
    coeffs = tuple(mult * c for c in kernel.fourier_coefficients)
    return KernelSpec(kernel.grid, coeffs, kernel.exponents)


def apply(kernel: KernelSpec, rho: RealField) -> VectorField:
    """Component-wise spectral convolution V * rho."""
    if kernel.grid != rho.grid:
        raise ValueError("kernel and field grids differ")
    rho_hat = np.fft.fftn(rho.values)
    comps = tuple(
        RealField(rho.grid, np.fft.ifftn(c * rho_hat).real)
        for c in kernel.fourier_coefficients
    )
    return VectorField(comps)


def divergence_of(kernel: KernelSpec) -> SpectralField:
    """Scalar kernel with coefficients i 2pi k . V_hat(k)."""
    acc = np.zeros(kernel.grid.shape, dtype=np.complex128)
    for k, c in zip(kernel.grid.deriv_wavenumbers, kernel.fourier_coefficients):
        acc += 2j * np.pi * k * c
    return SpectralField(kernel.grid, acc)


def apply_divergence(kernel: KernelSpec, rho: RealField) -> RealField:
    """(div V) * rho via the scalar divergence kernel."""
    div_hat = divergence_of(kernel)
    return RealField(rho.grid, convolve_arr(rho.grid, div_hat.coefficients, rho.values))


# ---------------------------------------------------------------------------
# plain-text kernel table (CLI kernel-audit interchange format)
# ---------------------------------------------------------------------------


def save_kernel_table(kernel: KernelSpec, path) -> None:
    """Write nonzero coefficients as lines 'k1 [k2] re1 im1 [re2 im2]'."""
    grid = kernel.grid
    d = grid.dimension
    ks = [k.astype(int) for k in grid.wavevectors]
    nz = np.zeros(grid.shape, dtype=bool)
    for c in kernel.fourier_coefficients:
        nz |= c != 0
    lines = []
    if kernel.exponents is not None:
        p, pstar, q, qstar = kernel.exponents
        lines.append(f"# exponents {p:.17g} {pstar:.17g} {q:.17g} {qstar:.17g}")
    lines.append(f"# grid d={d} n={grid.points}")
    for idx in np.argwhere(nz):
        idx = tuple(idx)
        parts = [str(int(ks[a][idx])) for a in range(d)]
        for c in kernel.fourier_coefficients:
            parts.append(f"{c[idx].real:.17g}")
            parts.append(f"{c[idx].imag:.17g}")
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_kernel_table(path, grid: GridSpec) -> KernelSpec:
    exponents = None
    coeffs = [np.zeros(grid.shape, dtype=np.complex128) for _ in range(grid.dimension)]
    d = grid.dimension
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                tokens = line[1:].split()
                if tokens and tokens[0] == "exponents":
                    exponents = tuple(float(t) for t in tokens[1:5])
                continue
            tokens = line.split()
            if len(tokens) != d + 2 * d:
                raise ValueError(f"bad kernel table line: {line!r}")
            kvec = tuple(int(t) for t in tokens[:d])
            if any(abs(k) > grid.points // 2 for k in kvec):
                raise ValueError(f"wavevector {kvec} outside grid band")
            idx = tuple(k % grid.points for k in kvec)
            for a in range(d):
                re = float(tokens[d + 2 * a])
                im = float(tokens[d + 2 * a + 1])
                coeffs[a][idx] = re + 1j * im
    return KernelSpec(grid, tuple(coeffs), exponents=exponents)
