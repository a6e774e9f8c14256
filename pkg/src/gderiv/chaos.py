"""Iterated Wiener integrals on simplices and the embedded linear equation.

A process here is a finite sum of iterated integrals J_n over the ordered
simplex, with order-n coefficient kernels that are constant in the spatial
variables but may depend on t (that family is closed under the
past-conditioned derivative and contains the solutions of the embedded
linear equation). Exact residuals use the isometry E[J_n(g)^2] = |g|^2
on the simplex; Monte Carlo checks discretise the iterated integrals as
ordered sums over increment chains.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, factorial
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._backend import iterated_sum2, iterated_sum3
from .errors import ContractError, DomainError, ResolutionError
from .simulate import PathBatch, sample_gaussian_at, mc_conditional_expectation

MAX_ORDER = 3

Kernel = Union[float, Callable]


# ---------------------------------------------------------------------------
# Simplex geometry
# ---------------------------------------------------------------------------

_GL_NODES = 24


def _gl(a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def simplex_inner_product(f: Kernel, g: Kernel, n: int, upper: float = 1.0) -> float:
    """int over {0 <= s_n <= ... <= s_1 <= upper} of f * g.

    Constants use the closed form (volume upper^n / n!); callables are
    integrated by nested Gauss-Legendre quadrature (exact for moderate-degree
    polynomial kernels). Kernels take n array arguments (s_1, ..., s_n).
    """
    if n < 0 or n > MAX_ORDER:
        raise DomainError(f"order {n} unsupported (max {MAX_ORDER})")
    if n == 0:
        fv = f if isinstance(f, (int, float)) else f()
        gv = g if isinstance(g, (int, float)) else g()
        return float(fv) * float(gv)
    if isinstance(f, (int, float)) and isinstance(g, (int, float)):
        return float(f) * float(g) * upper ** n / factorial(n)

    def fg(*args):
        fv = f if isinstance(f, (int, float)) else f(*args)
        gv = g if isinstance(g, (int, float)) else g(*args)
        return np.asarray(fv, dtype=float) * np.asarray(gv, dtype=float)

    x1, w1 = _gl(0.0, upper)
    if n == 1:
        return float(np.sum(w1 * fg(x1)))
    total = 0.0
    for a1, v1 in zip(x1, w1):
        x2, w2 = _gl(0.0, a1)
        if n == 2:
            total += v1 * float(np.sum(w2 * fg(np.full_like(x2, a1), x2)))
        else:
            for a2, v2 in zip(x2, w2):
                x3, w3 = _gl(0.0, a2)
                total += v1 * v2 * float(np.sum(
                    w3 * fg(np.full_like(x3, a1), np.full_like(x3, a2), x3)))
    return total


# ---------------------------------------------------------------------------
# Iterated integral samples
# ---------------------------------------------------------------------------


def _ordered_const_sums(dw: np.ndarray, order: int) -> np.ndarray:
    """sum over strictly decreasing index chains of products of increments."""
    p, n = dw.shape
    prev = np.ones((p, n))
    csum = None
    for _ in range(order):
        term = prev * dw
        csum = np.cumsum(term, axis=1)
        prev = np.concatenate([np.zeros((p, 1)), csum[:, :-1]], axis=1)
    return csum[:, -1]


def j_integral_samples(n: int, kernel: Kernel, w_batch: PathBatch) -> np.ndarray:
    """Discrete order-n iterated integral per path, left-point evaluation.

    The sum runs over strictly decreasing increment-index chains
    i_1 > i_2 > ... > i_n with the kernel evaluated at the left endpoints.
    Constant kernels use an O(paths * steps) cumulative recursion; general
    kernels fall back to the ordered-sum kernels (O(steps^n) memory for the
    evaluated kernel, so general order-3 kernels are capped at 256 steps).
    """
    if n < 0 or n > MAX_ORDER:
        raise DomainError(f"order {n} unsupported (max {MAX_ORDER})")
    if w_batch.w_increments is None:
        raise ContractError("iterated integrals need a batch with w_increments")
    dw = w_batch.w_increments
    lefts = w_batch.grid[:-1]
    if n == 0:
        c = kernel if isinstance(kernel, (int, float)) else kernel()
        return np.full(w_batch.n_paths, float(c))
    if isinstance(kernel, (int, float)):
        return float(kernel) * _ordered_const_sums(dw, n)
    if n == 1:
        return dw @ np.asarray(kernel(lefts), dtype=float)
    if n == 2:
        kmat = np.tril(np.asarray(kernel(lefts[:, None], lefts[None, :]),
                                  dtype=float), k=-1)
        return iterated_sum2(kmat, dw)
    if lefts.size > 256:
        raise ResolutionError("general order-3 kernels are capped at 256 steps")
    ktens = np.asarray(kernel(lefts[:, None, None], lefts[None, :, None],
                              lefts[None, None, :]), dtype=float)
    return iterated_sum3(ktens, dw)


# ---------------------------------------------------------------------------
# Chaos processes with constant-on-simplex coefficient kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderKernel:
    """Order-n kernel gamma(t) * 1 on the ordered simplex over [0, t]."""

    value: Callable[[float], float]
    derivative: Optional[Callable[[float], float]]


@dataclass(frozen=True)
class ChaosProcess:
    """X_t = f0(t) + sum_n J_n(gamma_n(t) 1_{simplex over [0,t]}).

    ``orders[k]`` is the order-(k+1) coefficient family. Finite order keeps
    the square-summability of the kernels and their t-derivatives automatic.
    """

    f0: Callable[[float], float]
    f0_prime: Optional[Callable[[float], float]]
    orders: tuple[OrderKernel, ...] = ()

    def __post_init__(self):
        if len(self.orders) > MAX_ORDER:
            raise DomainError(f"max chaos order is {MAX_ORDER}")

    @property
    def max_order(self) -> int:
        return len(self.orders)

    def coefficients_at(self, t: float) -> "ChaosVector":
        return ChaosVector(t, float(self.f0(t)),
                           tuple(float(o.value(t)) for o in self.orders))

    def sample(self, w_batch: PathBatch, t: float) -> np.ndarray:
        """Pathwise values at t from a Wiener batch covering [0, t]."""
        mask = w_batch.grid[:-1] < t
        sub = PathBatch(
            np.concatenate([w_batch.grid[:-1][mask], [t]]),
            np.zeros((w_batch.n_paths, 1)),
            w_batch.w_increments[:, mask])
        out = np.full(w_batch.n_paths, float(self.f0(t)))
        for k, o in enumerate(self.orders, start=1):
            out += float(o.value(t)) * _ordered_const_sums(sub.w_increments, k)
        return out


@dataclass(frozen=True)
class ChaosVector:
    """Chaos coefficients at a fixed time: deterministic part plus one
    constant kernel value per order (on the simplex over [0, t])."""

    t: float
    det: float
    coeffs: tuple[float, ...]

    def l2_norm(self) -> float:
        total = self.det ** 2
        for k, c in enumerate(self.coeffs, start=1):
            total += c ** 2 * self.t ** k / factorial(k)
        return float(np.sqrt(total))


def nelson_derivative(x: ChaosProcess, t: float) -> ChaosVector:
    """Past-conditioned derivative of x at t, as chaos coefficients.

    For constant-on-simplex coefficient kernels the derivative keeps the
    order structure: order n picks up the t-derivative of its coefficient
    (the moving simplex boundary contributes nothing in L2), and the
    deterministic part differentiates classically.
    """
    if x.f0_prime is None or any(o.derivative is None for o in x.orders):
        raise DomainError("kernel family is not t-differentiable")
    return ChaosVector(t, float(x.f0_prime(t)),
                       tuple(float(o.derivative(t)) for o in x.orders))


def solve_linear_embedding(a: float, b: float,
                           c: Sequence[float]) -> ChaosProcess:
    """The chaos family solving the past-conditioned equation D X = a X + b.

    ``c`` lists the free constants (c_0, c_1, ..., c_N): the deterministic
    part is c_0 e^{at} - b/a (or c_0 + b t when a = 0) and order n carries
    c_n e^{at} on the simplex over [0, t].
    """
    c = tuple(float(v) for v in c)
    if not c:
        raise DomainError("need at least the order-0 constant")
    if a != 0.0:
        f0 = lambda t, a=a, c0=c[0], b=b: c0 * exp(a * t) - b / a
        f0p = lambda t, a=a, c0=c[0]: a * c0 * exp(a * t)
    else:
        f0 = lambda t, c0=c[0], b=b: c0 + b * t
        f0p = lambda t, b=b: b
    orders = tuple(
        OrderKernel(value=lambda t, a=a, cn=cn: cn * exp(a * t),
                    derivative=lambda t, a=a, cn=cn: a * cn * exp(a * t))
        for cn in c[1:])
    return ChaosProcess(f0, f0p, orders)


def embedding_residual(x: ChaosProcess, a: float, b: float, t: float) -> float:
    """L2 norm of D X_t - a X_t - b via the chaos isometry (exact).

    Zero precisely when the order-0 part solves the classical equation and
    every higher-order coefficient satisfies gamma' = a gamma at t.
    """
    d = nelson_derivative(x, t)
    at = x.coefficients_at(t)
    resid = ChaosVector(
        t, d.det - a * at.det - b,
        tuple(dc - a * xc for dc, xc in zip(d.coeffs, at.coeffs)))
    return resid.l2_norm()


def mc_verify_nelson(x: ChaosProcess, t: float, hs: Sequence[float],
                     n_paths: int, seed: int = 0, stream: int = 0):
    """Regression check of the derivative for first-order chaos processes.

    X_t is then a function of (t, W_t), so conditioning on the past reduces
    to conditioning on W_t; for each h the forward quotient is regressed
    linearly on X_t. Returns per-h (slope, intercept, slope_se) rows: the
    slopes estimate the coefficient multiplying X in the derivative.
    """
    if x.max_order != 1:
        raise DomainError("Monte Carlo verification supports first order only"
                          " (use the exact residual for higher orders)")
    hs = np.asarray(list(hs), dtype=float)
    if np.any(hs <= 0):
        raise DomainError("forward steps only")
    times = np.unique(np.concatenate([[t], t + hs]))
    w = sample_gaussian_at(times, lambda u, v: min(u, v), n_paths, seed, stream)
    idx = {float(u): i for i, u in enumerate(times)}
    gamma = x.orders[0].value
    x_t = float(x.f0(t)) + float(gamma(t)) * w[:, idx[float(t)]]
    rows = []
    for h in hs:
        x_th = float(x.f0(t + h)) + float(gamma(t + h)) * w[:, idx[float(t + h)]]
        quot = (x_th - x_t) / h
        fit = mc_conditional_expectation(quot, x_t, estimator="linear")
        rows.append({"h": float(h), "slope": fit.slope,
                     "intercept": fit.intercept, "slope_se": fit.slope_se})
    return rows


def grid_kernel_1d(points: np.ndarray, values: np.ndarray) -> Callable:
    """Callable kernel from samples on a 1-d grid (linear interpolation)."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    return lambda s: np.interp(s, points, values)
