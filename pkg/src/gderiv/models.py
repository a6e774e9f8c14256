"""Closed-form covariance models and the fractional-kernel machinery.

Provides fractional Brownian motion, finite basis expansions and the
two-atom model, the square-integrable Volterra kernel whose self-product
reproduces the fBm covariance, the associated integral operator expressed
through left Riemann-Liouville fractional integrals, and the stationary
increment autocovariance used by the spectral sampler.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ResolutionError
from .gaussian import CovarianceOracle
from .special import hyp2f1

Side = str  # "left" | "right" | "two_sided"


# ---------------------------------------------------------------------------
# fBm covariance and its time derivative
# ---------------------------------------------------------------------------

def fbm_cov(H: float, s: float, t: float) -> float:
    """(t^2H + s^2H - |t-s|^2H) / 2; reduces to min(s, t) at H = 1/2."""
    _check_hurst(H)
    if s < 0 or t < 0:
        raise DomainError("times must be nonnegative")
    return 0.5 * (t ** (2 * H) + s ** (2 * H) - abs(t - s) ** (2 * H))


def _check_hurst(H: float) -> None:
    if not (0.0 < H < 1.0):
        raise DomainError(f"Hurst index must lie in (0,1), got {H}")


def _fbm_partial_side(H: float, t: float, s: float, side: str) -> Optional[float]:
    """One-sided d/du cov(u, s) at u = t; None where the limit diverges."""
    if t <= 0:
        return None
    term_t = H * t ** (2 * H - 1)
    if t != s:
        return term_t - H * np.sign(t - s) * abs(t - s) ** (2 * H - 1)
    # diagonal: the |u-s|^2H term contributes -H |u-s|^(2H-1) sign(u-s)
    if H > 0.5:
        return term_t
    if H == 0.5:
        return term_t - (0.5 if side == "right" else -0.5)
    return None  # H < 1/2: |h|^(2H-1) blows up


def fbm_partial_u(H: float, t: float, s: float,
                  side: Side = "two_sided") -> Optional[float]:
    """d/du fbm_cov(u, s) at u = t for the requested side; None if undefined."""
    _check_hurst(H)
    if side in ("left", "right"):
        return _fbm_partial_side(H, t, s, side)
    left = _fbm_partial_side(H, t, s, "left")
    right = _fbm_partial_side(H, t, s, "right")
    if left is None or right is None:
        return None
    if not np.isclose(left, right, rtol=1e-12, atol=1e-12):
        return None
    return right


# ---------------------------------------------------------------------------
# Model specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FractionalBrownian:
    """Centered fBm on [0, horizon] with Hurst index H in (0, 1)."""

    H: float
    horizon: float = 1.0

    def __post_init__(self):
        _check_hurst(self.H)
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")

    def covariance(self, s: float, t: float) -> float:
        return fbm_cov(self.H, s, t)

    def partial_u(self, t: float, s: float, side: Side = "two_sided"):
        return fbm_partial_u(self.H, t, s, side)

    def as_oracle(self) -> CovarianceOracle:
        return CovarianceOracle(
            cov=lambda s, t: fbm_cov(self.H, s, t),
            partial_u=lambda t, s, side="two_sided": fbm_partial_u(self.H, t, s, side),
        )


@dataclass(frozen=True)
class BasisExpansion:
    """Z_t = sum_i f_i(t) N_i with independent atoms N_i.

    ``derivatives[i]`` is f_i' where available (None marks an atom whose
    coefficient function is not differentiable); ``bound`` is a declared
    uniform bound on sum_i f_i(t)^2. Atom variances default to 1.
    """

    functions: tuple[Callable[[float], float], ...]
    derivatives: tuple[Optional[Callable[[float], float]], ...]
    bound: float
    horizon: float = 1.0
    atom_variances: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.functions) != len(self.derivatives):
            raise DomainError("functions and derivatives must align")
        if self.atom_variances is not None and len(self.atom_variances) != len(self.functions):
            raise DomainError("atom_variances must align with functions")

    @property
    def n_atoms(self) -> int:
        return len(self.functions)

    def variances(self) -> np.ndarray:
        if self.atom_variances is None:
            return np.ones(self.n_atoms)
        return np.asarray(self.atom_variances, dtype=float)

    def coeffs_at(self, t: float) -> np.ndarray:
        return np.array([f(t) for f in self.functions])

    def quotient_coeffs(self, t: float, h: float) -> np.ndarray:
        """(f_i(t+h) - f_i(t)) / h for every atom."""
        return (self.coeffs_at(t + h) - self.coeffs_at(t)) / h

    def derivative_coeffs(self, t: float) -> Optional[np.ndarray]:
        """f_i'(t) for every atom, or None when any derivative is unavailable."""
        vals = []
        for d in self.derivatives:
            if d is None:
                return None
            v = d(t)
            if v is None or not np.isfinite(v):
                return None
            vals.append(v)
        return np.array(vals)

    def covariance(self, s: float, t: float) -> float:
        var = self.variances()
        return float(np.sum(self.coeffs_at(s) * self.coeffs_at(t) * var))

    def partial_u(self, t: float, s: float, side: Side = "two_sided"):
        d = self.derivative_coeffs(t)
        if d is None:
            return None
        return float(np.sum(d * self.coeffs_at(s) * self.variances()))

    def as_oracle(self) -> CovarianceOracle:
        return CovarianceOracle(
            cov=self.covariance,
            partial_u=lambda t, s, side="two_sided": self.partial_u(t, s, side),
        )


def two_atom(f1: Callable, f2: Callable, d1: Optional[Callable] = None,
             d2: Optional[Callable] = None, var1: float = 1.0, var2: float = 1.0,
             horizon: float = 1.0, bound: float = np.inf) -> BasisExpansion:
    """Two-atom model Z_t = f1(t) N_1 + f2(t) N_2."""
    return BasisExpansion(functions=(f1, f2), derivatives=(d1, d2),
                          bound=bound, horizon=horizon,
                          atom_variances=(var1, var2))


def trigonometric_basis(level: int, horizon: float = 1.0) -> BasisExpansion:
    """Basis expansion whose atoms integrate the trigonometric ONB of L2[0,1].

    ``level`` counts frequencies: the expansion holds the antiderivative of
    the constant plus, for k = 1..level, the antiderivatives of both
    sqrt(2) cos(2 pi k x) and sqrt(2) sin(2 pi k x) - i.e. 2*level + 1
    functions. As level grows the induced covariance converges to
    min(s, t).
    """
    if horizon != 1.0:
        raise DomainError("trigonometric basis is defined on [0, 1]")
    funcs: list[Callable[[float], float]] = [lambda t: t]
    derivs: list[Callable[[float], float]] = [lambda t: 1.0]
    sqrt2 = np.sqrt(2.0)
    for k in range(1, level + 1):
        w = 2 * np.pi * k
        funcs.append(lambda t, w=w: sqrt2 * np.sin(w * t) / w)
        derivs.append(lambda t, w=w: sqrt2 * np.cos(w * t))
        funcs.append(lambda t, w=w: sqrt2 * (1.0 - np.cos(w * t)) / w)
        derivs.append(lambda t, w=w: sqrt2 * np.sin(w * t))
    # sum_i f_i(t)^2 <= t + 4/pi^2 * zeta(2)-type tail, bounded by 2 on [0,1]
    return BasisExpansion(functions=tuple(funcs), derivatives=tuple(derivs),
                          bound=2.0, horizon=horizon)


# ---------------------------------------------------------------------------
# Volterra kernel
# ---------------------------------------------------------------------------

def kernel_normalization(H: float) -> float:
    """Constant making the kernel self-product reproduce the fBm covariance."""
    return np.sqrt(2 * H * gamma(1.5 - H) / (gamma(H + 0.5) * gamma(2 - 2 * H)))


def volterra_kernel(H: float, t: float, s) -> float | np.ndarray:
    """Lower-triangular kernel K(t, s) with int_0^(s^t) K(s,u)K(t,u)du = cov.

    Zero for s >= t; raises for s = 0 (origin singularity). Equals 1 for
    H = 1/2 and s < t. Vectorised over ``s``.
    """
    _check_hurst(H)
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    if np.any(s_arr == 0.0):
        raise DomainError("kernel is singular at s = 0")
    out = np.zeros_like(s_arr)
    live = (s_arr < t) & (s_arr > 0)
    if live.any():
        if H == 0.5:
            out[live] = 1.0
        else:
            sl = s_arr[live]
            f = hyp2f1(H - 0.5, 0.5 - H, H + 0.5, 1.0 - t / sl)
            out[live] = kernel_normalization(H) * (t - sl) ** (H - 0.5) * f
    return float(out[0]) if scalar else out


def fgn_autocovariance(H: float, k, dt: float) -> float | np.ndarray:
    """Autocovariance of increments over step dt at integer lag k."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    _check_hurst(H)
    k_arr = np.abs(np.asarray(k, dtype=float))
    out = 0.5 * dt ** (2 * H) * (
        (k_arr + 1) ** (2 * H) - 2 * k_arr ** (2 * H) + np.abs(k_arr - 1) ** (2 * H)
    )
    return float(out) if np.ndim(k) == 0 else out


# ---------------------------------------------------------------------------
# Fractional integration (product integration of the linear interpolant)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledFunction:
    """A function known at strictly increasing grid points."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.ndim != 1:
            raise DomainError("grid and values must be 1-d and aligned")
        if np.any(np.diff(g) <= 0):
            raise DomainError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)


def _frac_integral_panels(alpha: float, nodes: np.ndarray, values: np.ndarray,
                          x_targets: np.ndarray) -> np.ndarray:
    """I^alpha of the piecewise-linear interpolant at each target.

    Each panel [y_j, y_{j+1}] is integrated exactly against the weight
    (x - y)^(alpha - 1), which tames the endpoint singularity for alpha < 1.
    """
    out = np.zeros_like(x_targets, dtype=float)
    inv_g = 1.0 / gamma(alpha)
    y0, y1 = nodes[:-1], nodes[1:]
    f0 = values[:-1]
    slope = (values[1:] - f0) / (y1 - y0)
    for idx, x in enumerate(x_targets):
        if x <= nodes[0]:
            continue
        m = np.searchsorted(nodes, x, side="left")
        a = y0[:m]
        b = np.minimum(y1[:m], x)
        fa = f0[:m]
        sl = slope[:m]
        upper = x - a
        lower = x - b
        p1 = (upper ** alpha - lower ** alpha) / alpha
        p2 = (upper ** (alpha + 1) - lower ** (alpha + 1)) / (alpha + 1)
        out[idx] = inv_g * float(np.sum((fa + sl * (x - a)) * p1 - sl * p2))
    return out


def frac_integral(alpha: float, f: SampledFunction, x) -> float | np.ndarray:
    """Left fractional integral of order alpha of ``f`` at ``x``.

    (1/Gamma(alpha)) int_0^x (x-y)^(alpha-1) f(y) dy, with f extended by its
    linear interpolant (and by zero left of its grid).
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr > f.grid[-1] + 1e-12) or np.any(x_arr < f.grid[0] - 1e-12):
        raise DomainError("x outside the sampled range")
    out = _frac_integral_panels(alpha, f.grid, f.values, x_arr)
    return float(out[0]) if np.ndim(x) == 0 else out


def _refined_nodes(T: float, base: np.ndarray, n_geo: int = 48,
                   eps: float = 1e-10) -> np.ndarray:
    """Base grid plus geometric refinement near the origin.

    The power factors s^(H-1/2) entering the operator are singular or steep
    at 0; geometric nodes keep their linear interpolants accurate there.
    """
    first = base[base > 0][0]
    geo = T * np.geomspace(eps, first / T, n_geo)
    return np.unique(np.concatenate([base, geo]))


def volterra_integral_at(H: float, f: SampledFunction, times) -> np.ndarray:
    """t -> int_0^t K(t,s) f(s) ds evaluated at arbitrary targets.

    Uses the fractional-integral composition of the kernel operator
    (distinct forms for H below and above 1/2), scaled to match the
    covariance-kernel normalization; H = 1/2 is plain integration.
    """
    _check_hurst(H)
    grid = f.grid
    if grid[0] != 0.0:
        raise DomainError("operator grids must start at 0")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    T = grid[-1]
    if np.any(times > T + 1e-12) or np.any(times < 0):
        raise DomainError("targets outside the sampled range")
    if H == 0.5:
        dx = np.diff(grid)
        mid = 0.5 * (f.values[1:] + f.values[:-1])
        cum = np.concatenate([[0.0], np.cumsum(mid * dx)])
        return np.interp(times, grid, cum)

    kappa = kernel_normalization(H) * gamma(H + 0.5)
    nodes = _refined_nodes(T, grid)
    pos = nodes > 0
    inner_pow = H - 0.5 if H < 0.5 else 0.5 - H
    outer_pow = -inner_pow
    inner_alpha = 0.5 - H if H < 0.5 else H - 0.5
    outer_alpha = 2 * H if H < 0.5 else 1.0

    g1 = np.zeros_like(nodes)
    g1[pos] = nodes[pos] ** inner_pow * f(nodes[pos])
    i1 = _frac_integral_panels(inner_alpha, nodes, g1, nodes)
    g2 = np.zeros_like(nodes)
    g2[pos] = nodes[pos] ** outer_pow * i1[pos]
    return kappa * _frac_integral_panels(outer_alpha, nodes, g2, times)


def apply_volterra_operator(H: float, f: SampledFunction,
                            min_nodes: int = 64) -> SampledFunction:
    """Kernel-integral operator applied on the function's own grid."""
    if f.grid.size < min_nodes:
        raise ResolutionError(
            f"grid too coarse for the kernel operator ({f.grid.size} < {min_nodes})")
    return SampledFunction(f.grid, volterra_integral_at(H, f, f.grid))


# ---------------------------------------------------------------------------
# Oracle adapters
# ---------------------------------------------------------------------------

def as_oracle(model) -> CovarianceOracle:
    """CovarianceOracle view of any model with covariance/partial_u methods."""
    return model.as_oracle()
