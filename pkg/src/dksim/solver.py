"""
Semi-implicit Euler-Maruyama integration of the regularized Dean-Kawasaki
equation on the spectral grid:

    d rho = lap(rho) dt - div(rho V_gamma * rho) dt - div(sigma_n(rho) dW)
            + (1/2) div(F1 [sigma_n'(rho)]^2 grad rho + sigma_n sigma_n' F2) dt.

The Laplacian is solved implicitly in Fourier space; every other term is
explicit and enters as a divergence, so its zero mode vanishes identically
and the zero Fourier mode of the state is invariant bit-for-bit (mass
conservation). Nonlinear products are formed pointwise on two-thirds
dealiased fields.

The deterministic mean-field equation d rho = lap rho - div(rho V * rho) is
the same stepper with noise amplitude zero and the correction terms off.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import noise as noise_mod
from .grid import GridSpec, RealField, dealias_arr, gradient_arr, integrate, lp_norm
from .kernels import KernelSchedule, KernelSpec, apply, mollify
from .noise import FCoefficients, NoisePath, NoiseSpec, compute_F
from .records import NumericalBlowupError, TrajectoryRecord
from .regularization import SigmaFamily, sigma

__all__ = [
    "SolverConfig",
    "SpdeState",
    "drift",
    "noise_increment",
    "step",
    "run",
    "mean_field_run",
    "galerkin_coefficient",
    "eigenbasis",
    "BasisFunction",
]


@dataclass(frozen=True)
class SpdeState:
    rho: RealField
    t: float


@dataclass(frozen=True)
class SolverConfig:
    """Everything a run needs; validation happens at construction and at
    context build (the dt guard needs the noise correction fields)."""

    grid: GridSpec
    initial: RealField
    kernel: KernelSpec | KernelSchedule | None = None
    noise: NoiseSpec | None = None
    sigma_index: int = 64
    gamma: float | None = None
    t_start: float = 0.0
    t_end: float = 0.1
    dt: float = 1e-4
    seed: int = 0
    noise_amplitude: float = 1.0
    clamping: str = "off"
    snapshot_stride: int = 1
    sigma_corrections: bool = True
    replica: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not (self.t_start < self.t_end):
            raise ValueError("time window must satisfy start < end")
        if self.gamma is not None and not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if self.clamping not in ("off", "clamp"):
            raise ValueError("clamping policy must be 'off' or 'clamp'")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot stride must be >= 1")
        if self.initial.grid != self.grid:
            raise ValueError("initial data grid mismatch")
        if self.noise is not None and self.noise.grid != self.grid:
            raise ValueError("noise grid mismatch")
        kern = self.kernel
        if isinstance(kern, KernelSchedule):
            kern = kern.at(self.t_start)
        if kern is not None and kern.grid != self.grid:
            raise ValueError("kernel grid mismatch")

    @property
    def steps(self) -> int:
        span = self.t_end - self.t_start
        n = round(span / self.dt)
        if n < 1 or abs(n * self.dt - span) > 1e-9 * max(span, 1.0):
            raise ValueError("time window must be an integer number of steps")
        return n

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self._digest_payload()).encode())
        return h.hexdigest()[:16]

    def _digest_payload(self):
        kern = self.kernel
        kern_bytes = b""
        if isinstance(kern, KernelSchedule):
            for stamp, spec in kern.entries:
                kern_bytes += repr(stamp).encode()
                for c in spec.fourier_coefficients:
                    kern_bytes += c.tobytes()
        elif kern is not None:
            for c in kern.fourier_coefficients:
                kern_bytes += c.tobytes()
        noise_bytes = b""
        if self.noise is not None:
            noise_bytes = self.noise.values_matrix().tobytes()
        return (
            self.grid.dimension,
            self.grid.points,
            self.initial.values.tobytes(),
            hashlib.sha256(kern_bytes).hexdigest(),
            hashlib.sha256(noise_bytes).hexdigest(),
            self.sigma_index,
            self.gamma,
            self.t_start,
            self.t_end,
            self.dt,
            self.seed,
            self.noise_amplitude,
            self.clamping,
            self.snapshot_stride,
            self.sigma_corrections,
            self.replica,
        )


class _Context:
    """Precomputed spectral machinery shared by every step of one run."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        grid = cfg.grid
        self.grid = grid
        self.zero_idx = (0,) * grid.dimension
        self.ik = [2j * np.pi * k for k in grid.deriv_wavenumbers]
        ksq = sum(k**2 for k in grid.wavevectors)
        self.denominator = 1.0 + cfg.dt * 4.0 * np.pi**2 * ksq
        self.mask = grid.dealias_mask

        self.sigma_family: SigmaFamily | None = None
        self.f_fields: FCoefficients | None = None
        self.modes_values: np.ndarray | None = None
        self.noise_active = (
            cfg.noise is not None and cfg.noise.n_modes > 0 and cfg.noise_amplitude != 0.0
        )
        if self.noise_active:
            scaled = cfg.noise.scaled(cfg.noise_amplitude)
            self.modes_values = scaled.values_matrix().reshape((-1,) + grid.shape)
            self.f_fields = compute_F(scaled)
            self.sigma_family = sigma(cfg.sigma_index)
        self.corrections_active = self.noise_active and cfg.sigma_corrections

        self._kernel_cache: dict[int, tuple[np.ndarray, ...]] = {}
        self._check_dt_guard()

    # -- kernel handling ----------------------------------------------------

    def kernel_coefficients(self, t: float) -> tuple[np.ndarray, ...] | None:
        kern = self.cfg.kernel
        if kern is None:
            return None
        spec = kern.at(t) if isinstance(kern, KernelSchedule) else kern
        key = id(spec)
        if key not in self._kernel_cache:
            if self.cfg.gamma is not None:
                spec = mollify(spec, self.cfg.gamma)
            self._kernel_cache[key] = spec.fourier_coefficients
        return self._kernel_cache[key]

    # -- stability guard ----------------------------------------------------

    def _check_dt_guard(self) -> None:
        """Explicit-diffusion guard dt * D <= h^2/8.

        The implicitly solved Laplacian is unconditionally stable; the guard
        protects the explicit state-dependent diffusion F1 [sigma'(rho)]^2,
        whose coefficient is estimated over the initial-data range.
        """
        if not self.corrections_active:
            return
        cfg = self.cfg
        hi = float(cfg.initial.values.max()) + 1.0
        xi = np.linspace(0.0, max(hi, 4.0 / cfg.sigma_index), 4097)
        dsig = self.sigma_family.derivative(xi)
        diffusivity = float(self.f_fields.f1.values.max()) * float((dsig**2).max())
        bound = cfg.grid.spacing**2 / 8.0
        if cfg.dt * diffusivity > bound:
            raise ValueError(
                f"dt = {cfg.dt:g} violates the explicit-diffusion guard "
                f"dt * D <= h^2/8 (D = {diffusivity:.3g}, h^2/8 = {bound:.3g})"
            )

    # -- pieces of the update ----------------------------------------------

    def explicit_drift_hat(self, rho_d: np.ndarray, t: float) -> np.ndarray:
        """Fourier coefficients (FFT layout) of the non-Laplacian drift."""
        out = np.zeros(self.grid.shape, dtype=np.complex128)
        kern = self.kernel_coefficients(t)
        if kern is not None:
            rho_hat_d = np.fft.fftn(rho_d)
            for ik_ax, c_ax in zip(self.ik, kern):
                vel = np.fft.ifftn(c_ax * rho_hat_d).real
                out -= ik_ax * np.fft.fftn(rho_d * vel)
        if self.corrections_active:
            s_prime = self.sigma_family.derivative(rho_d)
            s_val = self.sigma_family(rho_d)
            grads = gradient_arr(self.grid, rho_d)
            f1 = self.f_fields.f1.values
            for ik_ax, g_ax, f2_ax in zip(self.ik, grads, self.f_fields.f2.components):
                comp = f1 * s_prime**2 * g_ax + s_val * s_prime * f2_ax.values
                out += 0.5 * ik_ax * np.fft.fftn(comp)
        out[~self.mask] = 0.0
        out[self.zero_idx] = 0.0
        return out

    def noise_increment_hat(self, rho_d: np.ndarray, draws: np.ndarray) -> np.ndarray:
        """Fourier coefficients of -div(sigma(rho) sum_k f_k dbeta_k)."""
        out = np.zeros(self.grid.shape, dtype=np.complex128)
        if not self.noise_active:
            return out
        if draws.shape != (self.modes_values.shape[0], self.grid.dimension):
            raise ValueError(
                f"draws shape {draws.shape} != (modes, dimension) = "
                f"({self.modes_values.shape[0]}, {self.grid.dimension})"
            )
        s_val = self.sigma_family(rho_d)
        for axis, ik_ax in enumerate(self.ik):
            w = np.tensordot(draws[:, axis], self.modes_values, axes=(0, 0))
            out -= ik_ax * np.fft.fftn(s_val * w)
        out[~self.mask] = 0.0
        out[self.zero_idx] = 0.0
        return out

    def step_hat(self, rho_hat: np.ndarray, t: float, draws: np.ndarray | None):
        """One semi-implicit update in coefficient space.

        Returns (new_hat, clamp_event). The zero mode passes through exactly.
        """
        rho_phys = np.fft.ifftn(rho_hat).real
        rho_d = dealias_arr(self.grid, rho_phys)
        rhs = rho_hat + self.cfg.dt * self.explicit_drift_hat(rho_d, t)
        if draws is not None and self.noise_active:
            rhs = rhs + self.noise_increment_hat(rho_d, draws)
        new_hat = rhs / self.denominator
        clamped = False
        if self.cfg.clamping == "clamp":
            phys = np.fft.ifftn(new_hat).real
            if phys.min() < 0.0:
                mass_before = new_hat[self.zero_idx].real
                phys = np.maximum(phys, 0.0)
                mass_after = phys.mean() * self.grid.size
                if mass_after <= 0.0:
                    raise NumericalBlowupError(f"clamping annihilated the state at t = {t:g}")
                phys *= mass_before / mass_after
                new_hat = np.fft.fftn(phys)
                new_hat[self.zero_idx] = mass_before
                clamped = True
        if not np.isfinite(new_hat).all():
            raise NumericalBlowupError(f"non-finite state after step at t = {t:g}")
        return new_hat, clamped


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def drift(state: SpdeState, cfg: SolverConfig) -> RealField:
    """Full deterministic drift: lap(rho) + kernel + correction terms, dealiased products."""
    ctx = _Context(cfg)
    rho_d = dealias_arr(cfg.grid, state.rho.values)
    out_hat = ctx.explicit_drift_hat(rho_d, state.t)
    lap_hat = np.zeros(cfg.grid.shape, dtype=np.complex128)
    for k in cfg.grid.deriv_wavenumbers:
        lap_hat += -((2.0 * np.pi * k) ** 2)
    vals = np.fft.ifftn(out_hat + lap_hat * np.fft.fftn(state.rho.values)).real
    return RealField(cfg.grid, vals)


def noise_increment(state: SpdeState, cfg: SolverConfig, draws: np.ndarray) -> RealField:
    """-sum_k div(sigma_n(rho) f_k) dbeta_k for one step's draws (modes, d)."""
    ctx = _Context(cfg)
    rho_d = dealias_arr(cfg.grid, state.rho.values)
    out_hat = ctx.noise_increment_hat(rho_d, np.asarray(draws, dtype=np.float64))
    return RealField(cfg.grid, np.fft.ifftn(out_hat).real)


def step(state: SpdeState, cfg: SolverConfig, draws: np.ndarray | None = None) -> SpdeState:
    ctx = _Context(cfg)
    rho_hat = np.fft.fftn(state.rho.values)
    new_hat, _ = ctx.step_hat(
        rho_hat, state.t, None if draws is None else np.asarray(draws, dtype=np.float64)
    )
    return SpdeState(RealField(cfg.grid, np.fft.ifftn(new_hat).real), state.t + cfg.dt)


def _diagnostic_row(grid: GridSpec, rho_hat: np.ndarray, entropy_enabled: bool):
    from .diagnostics import dissipation as dissipation_fn, entropy as entropy_fn

    phys = np.fft.ifftn(rho_hat).real
    f = RealField(grid, phys)
    mass = rho_hat[(0,) * grid.dimension].real / grid.size
    if entropy_enabled:
        ent = entropy_fn(RealField(grid, np.maximum(phys, 0.0)))
        dis = dissipation_fn(f)
    else:
        ent = math.nan
        dis = math.nan
    return phys, mass, ent, dis, float(phys.min()), lp_norm(f, 2), lp_norm(f, 4)


def run(cfg: SolverConfig, path: NoisePath | None = None) -> TrajectoryRecord:
    """Integrate over [s, T], recording per-step diagnostics and snapshots.

    Deterministic given (config, seed): increments come from the counter-based
    stream keyed by the seed unless an explicit NoisePath is supplied (shared
    -noise and coarsened-path experiments pass one).
    """
    ctx = _Context(cfg)
    steps = cfg.steps
    n_modes = cfg.noise.n_modes if cfg.noise is not None else 0
    if path is not None:
        if path.steps != steps or (ctx.noise_active and path.n_modes != n_modes):
            raise ValueError("noise path does not match the configured run")
        if abs(path.dt - cfg.dt) > 1e-15 * cfg.dt:
            raise ValueError("noise path dt mismatch")

    initial_vals = cfg.initial.values
    entropy_enabled = bool(initial_vals.min() >= -1e-10)
    rho_hat = np.fft.fftn(initial_vals)

    times = cfg.t_start + cfg.dt * np.arange(steps + 1)
    cols = {name: np.empty(steps + 1) for name in ("mass", "entropy", "dissipation", "min_rho", "l2", "l4")}
    snap_times: list[float] = []
    snaps: list[np.ndarray] = []
    clamp_events = 0
    min_seen = math.inf
    scale = math.sqrt(cfg.dt)

    for i in range(steps + 1):
        phys, mass, ent, dis, mn, l2, l4 = _diagnostic_row(cfg.grid, rho_hat, entropy_enabled)
        cols["mass"][i] = mass
        cols["entropy"][i] = ent
        cols["dissipation"][i] = dis
        cols["min_rho"][i] = mn
        cols["l2"][i] = l2
        cols["l4"][i] = l4
        min_seen = min(min_seen, mn)
        if i % cfg.snapshot_stride == 0 or i == steps:
            snap_times.append(times[i])
            snaps.append(phys)
        if i == steps:
            break
        draws = None
        if ctx.noise_active:
            if path is not None:
                draws = path.increments[i]
            else:
                draws = noise_mod.gaussian_block(
                    cfg.seed, i, (n_modes, cfg.grid.dimension), scale,
                    noise_mod.STREAM_SPDE, cfg.replica,
                )
        rho_hat, clamped = ctx.step_hat(rho_hat, times[i], draws)
        clamp_events += int(clamped)

    unreliable = cfg.clamping == "off" and min_seen < -10.0 * cfg.dt
    return TrajectoryRecord(
        grid=cfg.grid,
        times=times,
        mass=cols["mass"],
        entropy=cols["entropy"],
        dissipation=cols["dissipation"],
        min_rho=cols["min_rho"],
        l2=cols["l2"],
        l4=cols["l4"],
        snapshot_times=np.asarray(snap_times),
        snapshots=np.stack(snaps),
        seed=cfg.seed,
        config_digest=cfg.digest(),
        snapshot_stride=cfg.snapshot_stride,
        dt=cfg.dt,
        clamp_events=clamp_events,
        unreliable=unreliable,
        entropy_enabled=entropy_enabled,
        label=cfg.label,
    )


def mean_field_run(cfg: SolverConfig, path: NoisePath | None = None) -> TrajectoryRecord:
    """Deterministic mean-field flow: noise amplitude zero, correction terms off."""
    det = replace(cfg, noise_amplitude=0.0, sigma_corrections=False)
    return run(det, None)


# ---------------------------------------------------------------------------
# Galerkin cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisFunction:
    """Real trigonometric eigenfunction of -lap: constant, sqrt(2) cos, sqrt(2) sin."""

    index: int
    wavevector: tuple[int, ...]
    kind: str  # "const" | "cos" | "sin"
    eigenvalue: float
    field: RealField

    def gradient_values(self) -> list[np.ndarray]:
        grid = self.field.grid
        if self.kind == "const":
            return [np.zeros(grid.shape) for _ in range(grid.dimension)]
        coords = grid.coordinates()
        phase = 2.0 * np.pi * sum(k * x for k, x in zip(self.wavevector, coords))
        root2 = math.sqrt(2.0)
        radial = -np.sin(phase) if self.kind == "cos" else np.cos(phase)
        return [root2 * 2.0 * np.pi * k * radial for k in self.wavevector]


def eigenbasis(grid: GridSpec, count: int) -> list[BasisFunction]:
    """First `count` elements of the orthonormal eigenbasis of -lap on the torus."""
    out = [
        BasisFunction(0, (0,) * grid.dimension, "const", 0.0, RealField.constant(grid, 1.0))
    ]
    kvecs = noise_mod.uv_wavevectors(grid.dimension, grid.points // 3)
    root2 = math.sqrt(2.0)
    coords = grid.coordinates()
    for k in kvecs:
        if len(out) >= count:
            break
        lam = 4.0 * np.pi**2 * sum(c * c for c in k)
        phase = 2.0 * np.pi * sum(ki * x for ki, x in zip(k, coords))
        out.append(BasisFunction(len(out), k, "cos", lam, RealField(grid, root2 * np.cos(phase))))
        if len(out) < count:
            out.append(BasisFunction(len(out), k, "sin", lam, RealField(grid, root2 * np.sin(phase))))
    if len(out) < count:
        raise ValueError("requested band exceeds the dealiased grid band")
    return out[:count]


def galerkin_coefficient(
    i: BasisFunction, j: BasisFunction, k: BasisFunction, kernel: KernelSpec
) -> float:
    """A^{i,j,k}_V = (e_i V * e_j, grad e_k), by quadrature over the torus."""
    grid = kernel.grid
    limit = grid.points // 3
    for b in (i, j, k):
        if max((abs(c) for c in b.wavevector), default=0) > limit:
            raise ValueError("basis index outside the resolved band")
    conv = apply(kernel, j.field)
    grad_k = k.gradient_values()
    integrand = i.field.values * sum(
        c.values * g for c, g in zip(conv.components, grad_k)
    )
    return integrate(RealField(grid, integrand))
