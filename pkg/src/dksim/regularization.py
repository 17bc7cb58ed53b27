"""
The regularization ladder: square-root approximants sigma_n, cutoff and
truncation functions, product mollifiers, and the trajectory metric D.

sigma_n is built as the antiderivative of g_n(s) = w_n(s) / (2 sqrt(s)),
where w_n is a C^2 smoothstep weight equal to 1 on [2/n, n] and 0 outside
[1/n, 2n]. Consequences used downstream:

  * sigma_n(0) = 0 and 0 <= sigma_n(xi) <= sqrt(xi) <= 2 sqrt(xi),
  * sigma_n'(xi) = 1/(2 sqrt(xi)) exactly on [2/n, n],
  * sigma_n' has compact support, so the uniform bounds
    [sigma']^4 + |sigma sigma'|^2 <= c_delta hold on [delta, infinity)
    with one constant for every n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SigmaFamily",
    "sigma",
    "CutoffPhi",
    "CutoffZeta",
    "HDelta",
    "MollifierKappa",
    "phi_beta",
    "zeta_M",
    "h_delta",
    "kappa",
    "d_metric",
    "smoothstep",
]


def smoothstep(t: np.ndarray | float) -> np.ndarray:
    """Quintic smoothstep 6t^5 - 15t^4 + 10t^3, clipped to [0, 1] (C^2 joins)."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_derivative(t: np.ndarray | float) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.clip(t, 0.0, 1.0)
    d = 30.0 * tt * tt * (tt - 1.0) * (tt - 1.0)
    return np.where(inside, d, 0.0)


_TABLE_POINTS = 8193


def _cumulative_trapezoid(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


@dataclass(frozen=True)
class SigmaFamily:
    """Evaluator pair (sigma_n, sigma_n') with the envelope constant recorded.

    The envelope constant is fixed at 2 by construction; the actual curve
    satisfies the tighter bound sigma_n <= sqrt.
    """

    n: int
    envelope_constant: float
    _lo_x: np.ndarray
    _lo_cum: np.ndarray
    _hi_x: np.ndarray
    _hi_cum: np.ndarray

    @property
    def exact_interval(self) -> tuple[float, float]:
        """Interval where sigma' equals 1/(2 sqrt(.)) identically."""
        return (2.0 / self.n, float(self.n))

    def weight(self, s: np.ndarray | float) -> np.ndarray:
        n = self.n
        s = np.asarray(s, dtype=np.float64)
        up = smoothstep((s - 1.0 / n) * n)          # ramps over [1/n, 2/n]
        down = 1.0 - smoothstep((s - n) / n)        # ramps over [n, 2n]
        return np.where(s <= 2.0 / n, up, down)

    def derivative(self, xi: np.ndarray | float) -> np.ndarray:
        """sigma_n'(xi) = g_n(xi); zero for xi <= 1/n and xi >= 2n."""
        xi = np.asarray(xi, dtype=np.float64)
        safe = np.maximum(xi, 1.0 / (2.0 * self.n))
        g = self.weight(xi) / (2.0 * np.sqrt(safe))
        return np.where((xi > 1.0 / self.n) & (xi < 2.0 * self.n), g, 0.0)

    def __call__(self, xi: np.ndarray | float) -> np.ndarray:
        xi_arr = np.asarray(xi, dtype=np.float64)
        n = self.n
        lo, hi = 2.0 / n, float(n)
        i_lo = self._lo_cum[-1]
        i_hi_total = self._hi_cum[-1]
        sigma_hi_start = i_lo + np.sqrt(hi) - np.sqrt(lo)

        out = np.zeros_like(xi_arr)
        m_blend_lo = (xi_arr > 1.0 / n) & (xi_arr < lo)
        m_exact = (xi_arr >= lo) & (xi_arr <= hi)
        m_blend_hi = (xi_arr > hi) & (xi_arr < 2.0 * n)
        m_top = xi_arr >= 2.0 * n

        if m_blend_lo.any():
            out[m_blend_lo] = np.interp(xi_arr[m_blend_lo], self._lo_x, self._lo_cum)
        if m_exact.any():
            out[m_exact] = i_lo + np.sqrt(xi_arr[m_exact]) - np.sqrt(lo)
        if m_blend_hi.any():
            out[m_blend_hi] = sigma_hi_start + np.interp(
                xi_arr[m_blend_hi], self._hi_x, self._hi_cum
            )
        if m_top.any():
            out[m_top] = sigma_hi_start + i_hi_total
        return out if isinstance(xi, np.ndarray) else float(out)


def sigma(n: int) -> SigmaFamily:
    """Construct the n-th square-root approximant (n >= 2)."""
    if n < 2:
        raise ValueError("sigma index must be >= 2")
    lo_x = np.linspace(1.0 / n, 2.0 / n, _TABLE_POINTS)
    hi_x = np.linspace(float(n), 2.0 * n, _TABLE_POINTS)
    fam = SigmaFamily(
        n=n,
        envelope_constant=2.0,
        _lo_x=lo_x,
        _lo_cum=np.zeros(_TABLE_POINTS),
        _hi_x=hi_x,
        _hi_cum=np.zeros(_TABLE_POINTS),
    )
    lo_cum = _cumulative_trapezoid(lo_x, fam.derivative(lo_x))
    hi_cum = _cumulative_trapezoid(hi_x, fam.derivative(hi_x))
    object.__setattr__(fam, "_lo_cum", lo_cum)
    object.__setattr__(fam, "_hi_cum", hi_cum)
    return fam


@dataclass(frozen=True)
class CutoffPhi:
    """Lower cutoff: 0 below beta/2, 1 above beta, slope 2/beta between."""

    beta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")

    def __call__(self, xi):
        return np.clip((np.asarray(xi, dtype=np.float64) - self.beta / 2.0) * (2.0 / self.beta), 0.0, 1.0)

    def derivative(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.where((xi > self.beta / 2.0) & (xi < self.beta), 2.0 / self.beta, 0.0)


@dataclass(frozen=True)
class CutoffZeta:
    """Upper cutoff: 1 below M, 0 above M + 1, slope -1 between."""

    M: int

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError("M must be >= 1")

    def __call__(self, xi):
        return np.clip(self.M + 1.0 - np.asarray(xi, dtype=np.float64), 0.0, 1.0)

    def derivative(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return np.where((xi > self.M) & (xi < self.M + 1.0), -1.0, 0.0)


def phi_beta(beta: float) -> CutoffPhi:
    return CutoffPhi(beta)


def zeta_M(M: int) -> CutoffZeta:
    return CutoffZeta(M)


@dataclass(frozen=True)
class HDelta:
    """Zero-truncation h_delta(xi) = psi_delta(xi) * xi.

    psi_delta is the quintic smoothstep scaled to [delta/2, delta]; its slope
    is bounded by (15/4)/delta, so h' = psi' xi + psi <= 19/4 uniformly in
    delta.
    """

    delta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")

    def psi(self, xi):
        return smoothstep((np.asarray(xi, dtype=np.float64) - self.delta / 2.0) * (2.0 / self.delta))

    def psi_derivative(self, xi):
        t = (np.asarray(xi, dtype=np.float64) - self.delta / 2.0) * (2.0 / self.delta)
        return smoothstep_derivative(t) * (2.0 / self.delta)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        out = self.psi(xi) * xi
        return out if out.ndim else float(out)

    def derivative(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return self.psi_derivative(xi) * xi + self.psi(xi)


def h_delta(delta: float) -> HDelta:
    return HDelta(delta)


def d_metric(times: np.ndarray, fields1: np.ndarray, fields2: np.ndarray, kmax: int = 20) -> float:
    """Truncated trajectory metric sum_{k<=kmax} 2^-k r_k / (1 + r_k).

    r_k is the space-time L^1 norm of h_{1/k}(f) - h_{1/k}(g); time integrals
    use trapezoid weights on the shared snapshot times. Bounded by
    1 - 2^-kmax.
    """
    times = np.asarray(times, dtype=np.float64)
    f1 = np.asarray(fields1, dtype=np.float64)
    f2 = np.asarray(fields2, dtype=np.float64)
    if f1.shape != f2.shape or f1.shape[0] != times.shape[0]:
        raise ValueError("trajectories must share one time grid")
    total = 0.0
    for k in range(1, kmax + 1):
        h = h_delta(1.0 / k)
        diff = np.abs(h(f1) - h(f2))
        spatial = diff.reshape(diff.shape[0], -1).mean(axis=1)
        r = float(np.trapezoid(spatial, times)) if len(times) > 1 else float(spatial[0])
        total += 2.0**-k * r / (1.0 + r)
    return total


# ---------------------------------------------------------------------------
# product mollifier kappa^{eps,delta}
# ---------------------------------------------------------------------------


def _bump(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    inside = np.abs(u) < 1.0
    safe = np.where(inside, u, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


def _bump_mass() -> float:
    # trapezoid on a smooth compactly supported function converges spectrally
    u = np.linspace(-1.0, 1.0, 20001)
    return float(np.trapezoid(_bump(u), u))


_BUMP_MASS = _bump_mass()


@dataclass(frozen=True)
class MollifierKappa:
    """kappa^{eps,delta}(x, y, xi, eta) = kappa_d^eps(x - y) kappa_1^delta(xi - eta).

    Diagnostic object only; the solver never touches it. Spatial factor is a
    periodic product bump of scale eps (unit mass on the torus), velocity
    factor a compactly supported bump of scale delta (unit mass on R).
    """

    epsilon: float
    delta: float
    dimension: int = 1

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 1.0) or not (0.0 < self.delta < 1.0):
            raise ValueError("scales must lie in (0, 1)")
        if self.epsilon >= 0.5:
            raise ValueError("spatial scale must be < 1/2 so the bump fits one period")

    def velocity(self, xi):
        """kappa_1^delta: support [-delta, delta], unit mass."""
        return _bump(np.asarray(xi, dtype=np.float64) / self.delta) / (self.delta * _BUMP_MASS)

    def _axis(self, u):
        wrapped = np.mod(np.asarray(u, dtype=np.float64) + 0.5, 1.0) - 0.5
        return _bump(wrapped / self.epsilon) / (self.epsilon * _BUMP_MASS)

    def spatial(self, offsets):
        """kappa_d^eps at periodic offsets, shape (..., dimension)."""
        offsets = np.asarray(offsets, dtype=np.float64)
        if offsets.shape[-1] != self.dimension:
            raise ValueError("offset dimension mismatch")
        out = np.ones(offsets.shape[:-1])
        for axis in range(self.dimension):
            out = out * self._axis(offsets[..., axis])
        return out

    def __call__(self, x, y, xi, eta):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.spatial(x - y) * self.velocity(np.asarray(xi) - np.asarray(eta))


def kappa(epsilon: float, delta: float, dimension: int = 1) -> MollifierKappa:
    return MollifierKappa(epsilon, delta, dimension)
