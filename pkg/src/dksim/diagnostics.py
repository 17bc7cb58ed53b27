"""
Checkable quantities the well-posedness theory guarantees: mass/entropy/
dissipation functionals, kinetic functions and measures with their tail
functionals, L^m norms and distances, and functional-inequality audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RealField, gradient_arr, inverse_arr, lp_norm
from .kernels import KernelSpec, apply, apply_divergence, divergence_of
from .records import TrajectoryRecord, write_csv_series

__all__ = [
    "entropy",
    "rho_log_rho",
    "dissipation",
    "EntropyReport",
    "entropy_report",
    "kinetic_distance",
    "KineticHistogram",
    "kinetic_bins",
    "accumulate_kinetic_measure",
    "lm_norms",
    "l1_distance",
    "l1_series",
    "gn_audit",
    "convolution_estimate_audit",
]


# ---------------------------------------------------------------------------
# entropy and dissipation
# ---------------------------------------------------------------------------


def _checked_nonnegative(rho: RealField) -> np.ndarray:
    vals = rho.values
    if vals.min() < -1e-10:
        raise ValueError(f"field is materially negative (min = {vals.min():.3e})")
    return np.maximum(vals, 0.0)


def entropy(rho: RealField) -> float:
    """integral of Psi(rho) with Psi(xi) = xi log xi - xi, Psi(0) = 0.

    Tiny undershoots (above -1e-10) are treated as zero; anything worse is
    rejected.
    """
    vals = _checked_nonnegative(rho)
    pos = vals > 0.0
    integrand = np.where(pos, vals * (np.log(np.where(pos, vals, 1.0)) - 1.0), 0.0)
    return float(np.mean(integrand))


def rho_log_rho(rho: RealField) -> float:
    """integral of rho log rho (the Ent-membership normalization)."""
    vals = _checked_nonnegative(rho)
    pos = vals > 0.0
    integrand = np.where(pos, vals * np.log(np.where(pos, vals, 1.0)), 0.0)
    return float(np.mean(integrand))


def dissipation(rho: RealField) -> float:
    """integral of |grad sqrt(rho)|^2, with rho floored at zero first."""
    root = np.sqrt(np.maximum(rho.values, 0.0))
    grads = gradient_arr(rho.grid, root)
    return float(np.mean(sum(g * g for g in grads)))


@dataclass(frozen=True)
class EntropyReport:
    """Entropy/dissipation series of a run with running suprema and integrals."""

    times: np.ndarray
    entropy_series: np.ndarray
    rho_log_rho_series: np.ndarray
    dissipation_series: np.ndarray

    def __post_init__(self) -> None:
        if np.nanmin(self.dissipation_series) < 0:
            raise ValueError("dissipation entries must be nonnegative")

    @property
    def running_sup_entropy(self) -> np.ndarray:
        return np.maximum.accumulate(self.entropy_series)

    @property
    def dissipation_integral(self) -> float:
        return float(np.trapezoid(self.dissipation_series, self.times))

    def budget(self) -> float:
        """(sup_t entropy - initial entropy) + total dissipation; the empirical
        constant of the entropy estimate, nonnegative by construction."""
        sup = float(self.running_sup_entropy[-1])
        return sup - float(self.entropy_series[0]) + self.dissipation_integral

    def is_nonincreasing(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.entropy_series) <= tol))

    def write_csv(self, path) -> None:
        rows = zip(
            (float(t) for t in self.times),
            map(float, self.entropy_series),
            map(float, self.rho_log_rho_series),
            map(float, self.dissipation_series),
        )
        write_csv_series(path, "t,entropy,rho_log_rho,dissipation", rows)


def entropy_report(traj: TrajectoryRecord) -> EntropyReport:
    grid = traj.grid
    rll = np.array(
        [rho_log_rho(RealField(grid, np.maximum(s, 0.0))) for s in traj.snapshots]
    )
    ents = np.array([entropy(RealField(grid, np.maximum(s, 0.0))) for s in traj.snapshots])
    diss = np.array([dissipation(RealField(grid, s)) for s in traj.snapshots])
    return EntropyReport(traj.snapshot_times, ents, rll, diss)


# ---------------------------------------------------------------------------
# kinetic functions and measures
# ---------------------------------------------------------------------------


def kinetic_distance(rho1: RealField, rho2: RealField, bins: int = 10_000) -> float:
    """integral over x and xi of |chi1 - chi2|^2 with chi = 1_{0 < xi < rho}.

    The xi axis is discretized into `bins` uniform cells over (0, max rho];
    per grid point the binned value differs from |rho1 - rho2| by at most one
    cell width, and the identity with the L^1 distance follows.
    """
    if rho1.grid != rho2.grid:
        raise ValueError("fields live on different grids")
    v1 = _checked_nonnegative(rho1)
    v2 = _checked_nonnegative(rho2)
    top = max(float(v1.max()), float(v2.max()))
    if top == 0.0:
        return 0.0
    width = top / bins
    centers = (np.arange(bins) + 0.5) * width
    c1 = np.searchsorted(centers, v1.ravel())
    c2 = np.searchsorted(centers, v2.ravel())
    return float(np.abs(c1 - c2).mean() * width)


@dataclass(frozen=True)
class KineticHistogram:
    """The kinetic measure q = delta_0(xi - rho) |grad rho|^2 of a run,
    accumulated into xi bins: geometric (ratio 2) on (0, 1], unit-width
    linear above, plus a catch-all [0, lowest-edge) cell at the bottom."""

    bin_edges: np.ndarray
    weights: np.ndarray
    total_weight: float
    observed_max: float

    def __post_init__(self) -> None:
        if np.any(self.weights < 0):
            raise ValueError("histogram weights must be nonnegative")

    def infinity_tail(self) -> list[tuple[float, float]]:
        """q-mass on [M, M+1] for the integer ladder covered by the bins."""
        out = []
        for lo, hi, w in zip(self.bin_edges[:-1], self.bin_edges[1:], self.weights):
            if lo >= 1.0:
                out.append((float(lo), float(w)))
        return out

    def zero_tail(self) -> list[tuple[float, float]]:
        """beta^-1 q([beta/2, beta]) for the geometric ladder beta = 1, 1/2, ..."""
        out = []
        for lo, hi, w in zip(self.bin_edges[:-1], self.bin_edges[1:], self.weights):
            if hi <= 1.0 and lo > 0.0:
                out.append((float(hi), float(w) / float(hi)))
        return sorted(out, reverse=True)

    def write_csv(self, path) -> None:
        rows = [
            (float(lo), float(hi), float(w))
            for lo, hi, w in zip(self.bin_edges[:-1], self.bin_edges[1:], self.weights)
        ]
        write_csv_series(path, "bin_lo,bin_hi,weight", rows)


def kinetic_bins(max_value: float, min_exponent: int = 12) -> np.ndarray:
    """Bin edges: 0, 2^-min_exponent, ..., 1/2, 1, 2, 3, ..., ceil(max)."""
    top = max(2, int(math.ceil(max_value)) + 1)
    geometric = [2.0**-j for j in range(min_exponent, 0, -1)]
    return np.array([0.0] + geometric + [1.0 * m for m in range(1, top + 1)])


def accumulate_kinetic_measure(
    traj: TrajectoryRecord, bins: np.ndarray | None = None, min_exponent: int = 12
) -> KineticHistogram:
    """Bin |grad rho|^2 dt dx by the value of rho over the recorded snapshots.

    Total weight equals the time-integrated squared-gradient mass of the same
    snapshots by rearrangement (asserted by the caller as an invariant).
    """
    grid = traj.grid
    snaps = traj.snapshots
    times = traj.snapshot_times
    observed_max = float(snaps.max())
    if bins is None:
        bins = kinetic_bins(observed_max, min_exponent)
    weights = np.zeros(len(bins) - 1)
    h_weight = 1.0 / grid.size
    total = 0.0
    for i in range(len(times) - 1):
        dt_i = float(times[i + 1] - times[i])
        vals = snaps[i]
        grads = gradient_arr(grid, vals)
        gsq = sum(g * g for g in grads)
        cell = gsq * (dt_i * h_weight)
        total += float(cell.sum())
        idx = np.clip(np.searchsorted(bins, vals.ravel(), side="right") - 1, 0, len(weights) - 1)
        weights += np.bincount(idx, weights=cell.ravel(), minlength=len(weights))
    return KineticHistogram(
        bin_edges=np.asarray(bins, dtype=np.float64),
        weights=weights,
        total_weight=total,
        observed_max=observed_max,
    )


# ---------------------------------------------------------------------------
# norms and distances
# ---------------------------------------------------------------------------


def lm_norms(rho: RealField, m_set) -> dict[float, float]:
    return {float(m): lp_norm(rho, float(m)) for m in m_set}


def l1_distance(rho1: RealField, rho2: RealField) -> float:
    if rho1.grid != rho2.grid:
        raise ValueError("fields live on different grids")
    return float(np.abs(rho1.values - rho2.values).mean())


def l1_series(traj1: TrajectoryRecord, traj2: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    """Snapshot-aligned L^1 distances; errors on mismatched time grids."""
    if traj1.snapshots.shape != traj2.snapshots.shape or not np.array_equal(
        traj1.snapshot_times, traj2.snapshot_times
    ):
        raise ValueError("trajectories recorded on different snapshot grids")
    flat1 = traj1.snapshots.reshape(len(traj1.snapshot_times), -1)
    flat2 = traj2.snapshots.reshape(len(traj2.snapshot_times), -1)
    return traj1.snapshot_times, np.abs(flat1 - flat2).mean(axis=1)


# ---------------------------------------------------------------------------
# functional-inequality audits
# ---------------------------------------------------------------------------


def _derivative_magnitude(f: RealField, order: int) -> RealField:
    """|f|, |grad f| or Frobenius |D^2 f| as a scalar field."""
    if order == 0:
        return RealField(f.grid, np.abs(f.values))
    if order == 1:
        grads = gradient_arr(f.grid, f.values)
        return RealField(f.grid, np.sqrt(sum(g * g for g in grads)))
    if order == 2:
        acc = np.zeros(f.grid.shape)
        for g in gradient_arr(f.grid, f.values):
            for gg in gradient_arr(f.grid, g):
                acc += gg * gg
        return RealField(f.grid, np.sqrt(acc))
    raise ValueError("derivative order must be 0, 1 or 2")


@dataclass(frozen=True)
class GnAuditReport:
    lhs: float
    rhs_derivative_factor: float
    rhs_function_factor: float
    ratio: float


def gn_audit(f: RealField, j: int, m: int, p: float, q: float, r: float, alpha: float) -> GnAuditReport:
    """Empirical two-sided check of the interpolation inequality
    ||D^j f||_p <= C ||D^m f||_r^alpha ||f||_q^(1-alpha).

    The exponent relation 1/p = j/d + (1/r - m/d) alpha + (1-alpha)/q must
    hold to 1e-12 with j/m <= alpha <= 1; returns the empirical ratio.
    """
    d = f.grid.dimension
    if m < 1:
        raise ValueError("m must be >= 1")
    relation = j / d + (1.0 / r - m / d) * alpha + (1.0 - alpha) / q
    if abs(relation - 1.0 / p) > 1e-12:
        raise ValueError(
            f"exponent relation violated: 1/p = {1.0 / p:.12g} vs {relation:.12g}"
        )
    if not (j / m <= alpha <= 1.0):
        raise ValueError("alpha must lie in [j/m, 1]")
    lhs = lp_norm(_derivative_magnitude(f, j), p)
    dfac = lp_norm(_derivative_magnitude(f, m), r) ** alpha
    ffac = lp_norm(f, q) ** (1.0 - alpha)
    rhs = dfac * ffac
    ratio = 0.0 if lhs == 0.0 else (math.inf if rhs == 0.0 else lhs / rhs)
    return GnAuditReport(lhs=lhs, rhs_derivative_factor=dfac, rhs_function_factor=ffac, ratio=ratio)


@dataclass(frozen=True)
class ConvolutionAuditReport:
    gradient_lhs: float
    gradient_rhs: float
    gradient_constant: float
    divergence_lhs: float
    divergence_rhs: float
    divergence_constant: float


def convolution_estimate_audit(
    f: RealField, g: RealField, kernel: KernelSpec, p: float = 2.0, q: float = 2.0
) -> ConvolutionAuditReport:
    """Time-frozen empirical constants of the two kernel-term estimates:

        ||grad f . V*g||_L1  vs  ||grad sqrt f||_2^(d/p+1) ||f||_1^(1/2-d/2p) ||V||_p ||g||_1
        ||f (div V)*g||_L1   vs  ||grad sqrt f||_2^(d/q)   ||f||_1^(1-d/2q)   ||div V||_q ||g||_1
    """
    grid = f.grid
    d = grid.dimension
    if f.values.min() < 0 or g.values.min() < 0:
        raise ValueError("audit requires nonnegative fields")
    conv = apply(kernel, g)
    grad_f = gradient_arr(grid, f.values)
    lhs_grad = float(np.abs(sum(gf * c.values for gf, c in zip(grad_f, conv.components))).mean())

    root_diss = math.sqrt(dissipation(f))
    f_l1 = float(np.abs(f.values).mean())
    v_field = kernel.component_fields()
    v_mag = RealField(grid, np.sqrt(sum(c.values**2 for c in v_field.components)))
    g_l1 = float(np.abs(g.values).mean())
    rhs_grad = root_diss ** (d / p + 1.0) * f_l1 ** (0.5 - d / (2.0 * p)) * lp_norm(v_mag, p) * g_l1

    div_conv = apply_divergence(kernel, g)
    lhs_div = float(np.abs(f.values * div_conv.values).mean())
    div_v = RealField(grid, inverse_arr(grid, divergence_of(kernel).coefficients))
    rhs_div = root_diss ** (d / q) * f_l1 ** (1.0 - d / (2.0 * q)) * lp_norm(div_v, q) * g_l1

    def _const(lhs, rhs):
        if lhs == 0.0:
            return 0.0
        return math.inf if rhs == 0.0 else lhs / rhs

    return ConvolutionAuditReport(
        gradient_lhs=lhs_grad,
        gradient_rhs=rhs_grad,
        gradient_constant=_const(lhs_grad, rhs_grad),
        divergence_lhs=lhs_div,
        divergence_rhs=rhs_div,
        divergence_constant=_const(lhs_div, rhs_div),
    )
