"""Exact finite-dimensional Gaussian conditioning.

Variables are finite combinations sum_j w_j Z_{t_j} + offset of process
values; conditioning a jointly Gaussian family reduces to linear
regression against the Gram matrix of the conditioning span, which is
the representation used throughout the exact engine.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateFamily, EvaluationError, SingularSpan

RCOND_LIMIT = 1e-12


@dataclass(frozen=True)
class FirstChaosVariable:
    """sum_j weight_j * Z_{time_j} + offset, times strictly increasing."""

    weights: tuple[tuple[float, float], ...]
    offset: float = 0.0

    def __post_init__(self):
        times = [t for t, _ in self.weights]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if not all(np.isfinite(t) and np.isfinite(w) for t, w in self.weights):
            raise ValueError("times and weights must be finite")
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.weights])

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([w for _, w in self.weights])

    def scaled(self, factor: float) -> "FirstChaosVariable":
        return FirstChaosVariable(
            tuple((t, w * factor) for t, w in self.weights), self.offset * factor
        )

    def __repr__(self):
        terms = " + ".join(f"{w:g}*Z[{t:g}]" for t, w in self.weights)
        if self.offset:
            terms += f" + {self.offset:g}"
        return f"<{terms}>"


def process_value(t: float, weight: float = 1.0, offset: float = 0.0) -> FirstChaosVariable:
    """The single process value weight * Z_t (+ offset)."""
    return FirstChaosVariable(((float(t), float(weight)),), float(offset))


def increment(t: float, h: float, scale: float = 1.0,
              offset: float = 0.0) -> FirstChaosVariable:
    """scale * (Z_{t+h} - Z_t) as a first-chaos variable; h may be negative."""
    pairs = sorted([(t + h, scale), (t, -scale)])
    return FirstChaosVariable(tuple(pairs), offset)


def combine(variables: Sequence[FirstChaosVariable], coeffs: Sequence[float],
            constant: float = 0.0) -> FirstChaosVariable:
    """Flatten sum_i c_i X_i + constant into a single variable.

    Weights at coinciding times are merged; exact zeros are dropped.
    """
    acc: dict[float, float] = {}
    offset = float(constant)
    for var, c in zip(variables, coeffs):
        offset += c * var.offset
        for t, w in var.weights:
            acc[t] = acc.get(t, 0.0) + c * w
    pairs = tuple(sorted((t, w) for t, w in acc.items() if w != 0.0))
    if not pairs:
        # the constant variable: representable with an empty weight list is not
        # allowed by the invariant, so keep a zero weight at time 0+ sentinel
        return FirstChaosVariable(((0.0, 0.0),), offset) if not acc else FirstChaosVariable(
            tuple(sorted(acc.items())), offset)
    return FirstChaosVariable(pairs, offset)


@dataclass(frozen=True)
class CovarianceOracle:
    """Covariance model rho(s, t) with optional time-derivative information.

    ``partial_u(t, s, side)`` returns d/du rho(u, s) at u=t for
    side in {"left", "right"} or None where the one-sided derivative does
    not exist. ``mean`` is the deterministic mean function (zero for
    centered models); ``mean_derivative`` its derivative when known.
    """

    cov: Callable[[float, float], float]
    partial_u: Optional[Callable[[float, float, str], Optional[float]]] = None
    mean: Callable[[float], float] = staticmethod(lambda t: 0.0)
    mean_derivative: Optional[Callable[[float], float]] = None

    def inner(self, x: FirstChaosVariable, y: FirstChaosVariable) -> float:
        """Covariance inner product; offsets never enter."""
        total = 0.0
        for s, w in x.weights:
            if w == 0.0:
                continue
            for t, v in y.weights:
                if v == 0.0:
                    continue
                c = self.cov(s, t)
                if not np.isfinite(c):
                    raise EvaluationError(
                        f"covariance not finite at ({s}, {t})", point=(s, t))
                total += w * v * c
        return total

    def variance(self, x: FirstChaosVariable) -> float:
        return self.inner(x, x)

    def norm(self, x: FirstChaosVariable) -> float:
        """L2 norm of the (non-centered) variable."""
        return float(np.sqrt(max(self.variance(x), 0.0) + x.offset ** 2))

    def check_symmetry(self, probes: Iterable[tuple[float, float]],
                       rel_tol: float = 1e-12) -> None:
        for s, t in probes:
            a, b = self.cov(s, t), self.cov(t, s)
            if abs(a - b) > rel_tol * max(1.0, abs(a)):
                raise EvaluationError(f"covariance asymmetric at ({s}, {t})")

    def check_partial(self, probes: Iterable[tuple[float, float]],
                      step: float = 1e-6, rel_tol: float = 1e-5) -> None:
        """Compare two-sided partial_u against a central finite difference."""
        if self.partial_u is None:
            return
        for t, s in probes:
            left = self.partial_u(t, s, "left")
            right = self.partial_u(t, s, "right")
            if left is None or right is None or not np.isclose(left, right,
                                                               rtol=1e-8, atol=1e-10):
                continue
            fd = (self.cov(t + step, s) - self.cov(t - step, s)) / (2 * step)
            if abs(fd - right) > rel_tol * max(1.0, abs(right)):
                raise EvaluationError(
                    f"partial_u disagrees with finite difference at ({t}, {s}):"
                    f" {right} vs {fd}")


def inner_product(x: FirstChaosVariable, y: FirstChaosVariable,
                  oracle: CovarianceOracle) -> float:
    return oracle.inner(x, y)


class GramSystem:
    """A finite span with its Gram matrix and a cached SPD factorization.

    Immutable after construction apart from the factorization cache, which
    is idempotent and safe to initialise concurrently.
    """

    def __init__(self, variables: Sequence[FirstChaosVariable],
                 oracle: CovarianceOracle):
        self.variables = tuple(variables)
        self.oracle = oracle
        n = len(self.variables)
        g = np.empty((n, n))
        for i, vi in enumerate(self.variables):
            for j in range(i, n):
                g[i, j] = g[j, i] = oracle.inner(vi, self.variables[j])
        self.gram = g
        self._cho = None
        self._rcond = None

    def __len__(self):
        return len(self.variables)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([v.offset for v in self.variables])

    def rcond(self) -> float:
        """Reciprocal condition estimate (eigenvalue ratio; spans are small)."""
        if self._rcond is None:
            eig = np.linalg.eigvalsh(self.gram)
            top = float(eig[-1])
            self._rcond = float(eig[0] / top) if top > 0 else 0.0
        return self._rcond

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rc = self.rcond()
        if not np.isfinite(rc) or rc < RCOND_LIMIT:
            raise SingularSpan(
                f"Gram matrix ill-conditioned (rcond={rc:.3e})", rcond=rc)
        if self._cho is None:
            try:
                self._cho = ("cho", scipy.linalg.cho_factor(self.gram, lower=True))
            except scipy.linalg.LinAlgError:
                # rcond passed but Cholesky failed: pivoted symmetric fallback
                self._cho = ("ldl", scipy.linalg.ldl(self.gram, lower=True))
        kind, fac = self._cho
        if kind == "cho":
            return scipy.linalg.cho_solve(fac, rhs)
        lu, d, perm = fac
        # solve (L D L^T) x = rhs with the permutation applied
        l = lu[perm]
        y = scipy.linalg.solve_triangular(l, rhs[perm], lower=True)
        z = np.linalg.solve(d, y)
        x = scipy.linalg.solve_triangular(l.T, z, lower=False)
        out = np.empty_like(x)
        out[perm] = x
        return out


@dataclass(frozen=True)
class AffineCombination:
    """sum_i coeff_i * variable_i + constant over a fixed list of variables."""

    variables: tuple[FirstChaosVariable, ...]
    coeffs: np.ndarray
    constant: float = 0.0

    def as_variable(self) -> FirstChaosVariable:
        return combine(self.variables, self.coeffs, self.constant)

    def mean(self) -> float:
        return float(self.constant + np.dot(self.coeffs,
                                            [v.offset for v in self.variables]))

    def variance(self, oracle: CovarianceOracle) -> float:
        flat = self.as_variable()
        return oracle.variance(flat)

    def l2_norm(self, oracle: CovarianceOracle) -> float:
        return float(np.sqrt(max(self.variance(oracle), 0.0) + self.mean() ** 2))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.coeffs, [self.constant]])


def regress(target: FirstChaosVariable, span: GramSystem) -> AffineCombination:
    """Conditional expectation of ``target`` given the span, as coefficients.

    Solves M c = (<target, Y_i>)_i; the constant reconciles offsets so that
    the combination equals E[target | sigma(span)] for jointly Gaussian
    variables. Raises SingularSpan when the Gram matrix is ill-conditioned.
    """
    rhs = np.array([span.oracle.inner(target, v) for v in span.variables])
    coeffs = span.solve(rhs)
    constant = target.offset - float(np.dot(coeffs, span.offsets))
    return AffineCombination(span.variables, coeffs, constant)


def gram_schmidt(family: Sequence[FirstChaosVariable], oracle: CovarianceOracle,
                 pivot_tol: float = 1e-12):
    """Orthonormalise ``family`` under the oracle inner product.

    Returns (orthonormal variables, lower-triangular change of basis C) with
    e_i = sum_{j<=i} C[i, j] * family_j. Raises DegenerateFamily when a
    residual norm falls below pivot_tol * (largest norm seen).
    """
    n = len(family)
    cmat = np.zeros((n, n))
    ortho: list[FirstChaosVariable] = []
    scale = 0.0
    for i, v in enumerate(family):
        row = np.zeros(n)
        row[i] = 1.0
        centered = FirstChaosVariable(v.weights, 0.0)
        resid = centered
        for j, e in enumerate(ortho):
            proj = oracle.inner(centered, e)
            row[: i + 1] -= proj * cmat[j, : i + 1]
            resid = combine([resid, e], [1.0, -proj])
        norm2 = oracle.variance(resid)
        scale = max(scale, np.sqrt(max(norm2, 0.0)))
        if norm2 <= (pivot_tol * max(scale, 1.0)) ** 2:
            raise DegenerateFamily(
                f"family member {i} is linearly dependent on its predecessors",
                index=i)
        norm = np.sqrt(norm2)
        cmat[i, : i + 1] = row[: i + 1] / norm
        ortho.append(resid.scaled(1.0 / norm))
    return ortho, cmat[:n, :n]


def project_affine(expr: AffineCombination, sub: GramSystem) -> AffineCombination:
    """Project an affine combination onto a sub-span (declared, not inferred).

    Equals regressing the flattened expression; idempotent when ``sub``
    spans the same space as the expression's variables.
    """
    return regress(expr.as_variable(), sub)
