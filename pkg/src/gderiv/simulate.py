"""Monte Carlo layer: samplers, drift, measure change, and estimators.

Fractional Gaussian paths come from three constructions: exact dense
Cholesky (small grids), circulant embedding of the increment
autocovariance (O(n log n), large grids), and the Volterra moving-average
sum driven by explicit Wiener increments (the construction that supports
the measure-change experiments).

All samplers draw from counter-based substreams keyed by
(seed, stream, chunk), so identical seeds reproduce batches bit-for-bit
regardless of how path chunks are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (ContractError, DomainError, EstimatorError,
                     ResolutionError)
from .models import (SampledFunction, fbm_cov, fgn_autocovariance,
                     volterra_kernel)
from . import models as _models

CHUNK = 4096
_EIG_FLOOR = -1e-9


def _chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=(int(seed), int(stream), int(chunk)))))


def _chunks(n_paths: int):
    start = 0
    idx = 0
    while start < n_paths:
        yield idx, start, min(CHUNK, n_paths - start)
        start += CHUNK
        idx += 1


# ---------------------------------------------------------------------------
# Path batches
# ---------------------------------------------------------------------------


@dataclass
class PathBatch:
    """grid (nodes,), values (paths, nodes), optional Wiener increments.

    ``values[:, 0]`` is the initial value. When ``w_increments`` is present
    it holds the increments of the driving Wiener process over the grid
    panels, enabling density reweighting.
    """

    grid: np.ndarray
    values: np.ndarray
    w_increments: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def value_at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.grid - t)))
        if abs(self.grid[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"time {t} not on the batch grid")
        return self.values[:, i]


def uniform_grid(horizon: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, horizon, steps + 1)


def _check_uniform(grid: np.ndarray) -> float:
    d = np.diff(grid)
    if grid[0] != 0.0 or np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9):
        raise DomainError("samplers require a uniform grid starting at 0")
    return float(d[0])


# ---------------------------------------------------------------------------
# fBm samplers
# ---------------------------------------------------------------------------

CHOLESKY_MAX_NODES = 4096  # dense factorization is O(n^3); documented limit


def _cholesky_factor(H: float, grid: np.ndarray) -> np.ndarray:
    times = grid[1:]
    n = times.size
    if n > CHOLESKY_MAX_NODES:
        raise ResolutionError(
            f"cholesky sampler is restricted to {CHOLESKY_MAX_NODES} nodes")
    cov = np.empty((n, n))
    for i, s in enumerate(times):
        cov[i, i:] = [fbm_cov(H, s, t) for t in times[i:]]
        cov[i:, i] = cov[i, i:]
    return np.linalg.cholesky(cov)


def _circulant_eigs(H: float, n: int, dt: float) -> np.ndarray:
    r = fgn_autocovariance(H, np.arange(n + 1), dt)
    emb = np.concatenate([r[:-1], [r[n]], r[-2:0:-1]])
    lam = np.fft.fft(emb).real
    bad = lam < _EIG_FLOOR
    if bad.any():
        raise DomainError(
            f"circulant embedding produced eigenvalue {lam.min():.3e} < {_EIG_FLOOR}")
    return np.where(lam < 0.0, 0.0, lam)


def _circulant_fgn_chunk(lam: np.ndarray, n: int, rows: int,
                         rng: np.random.Generator) -> np.ndarray:
    """2*rows independent fGn paths from ``rows`` FFTs (real and imag parts)."""
    m = lam.size
    scale = np.sqrt(lam / (2.0 * m))
    z = rng.standard_normal((rows, m)) + 1j * rng.standard_normal((rows, m))
    w = np.fft.fft(scale * z, axis=1)[:, :n]
    return np.sqrt(2.0) * np.concatenate([w.real, w.imag], axis=0)


def sample_fbm(H: float, grid: np.ndarray, n_paths: int, seed: int,
               method: str = "circulant", stream: int = 0) -> PathBatch:
    """Centered fractional Brownian batch with the grid's exact covariance.

    ``cholesky`` factorises the dense covariance (exact, O(n^3), small
    grids only); ``circulant`` embeds the increment autocovariance in a
    circulant matrix and samples by FFT at O(n log n) per path pair.
    Neither retains driving Wiener increments.
    """
    grid = np.asarray(grid, dtype=float)
    dt = _check_uniform(grid)
    n = grid.size - 1
    values = np.empty((n_paths, grid.size))
    values[:, 0] = 0.0
    if method == "cholesky":
        lfac = _cholesky_factor(H, grid)
        for ci, start, count in _chunks(n_paths):
            rng = _chunk_rng(seed, stream, ci)
            z = rng.standard_normal((count, n))
            values[start:start + count, 1:] = z @ lfac.T
    elif method == "circulant":
        lam = _circulant_eigs(H, n, dt)
        for ci, start, count in _chunks(n_paths):
            rng = _chunk_rng(seed, stream, ci)
            rows = (count + 1) // 2
            fgn = _circulant_fgn_chunk(lam, n, rows, rng)[:count]
            values[start:start + count, 1:] = np.cumsum(fgn, axis=1)
    else:
        raise DomainError(f"unknown sampling method {method!r}")
    return PathBatch(grid, values, None,
                     {"H": H, "seed": seed, "stream": stream, "method": method})


def sample_fbm_volterra(H: float, grid: np.ndarray, n_paths: int, seed: int,
                        stream: int = 0, oversample: Optional[int] = None) -> PathBatch:
    """Moving-average construction B_t = sum_j K(t, mid_j) dW_j.

    The kernel is evaluated at panel midpoints. ``oversample`` refines the
    driving increments below the output grid (default: enough panels for
    ~1024 fine steps); the returned ``w_increments`` are the aggregated
    panel sums, i.e. the coarse-grid Wiener increments.
    """
    grid = np.asarray(grid, dtype=float)
    dt = _check_uniform(grid)
    n = grid.size - 1
    if n < 32:
        raise ResolutionError("volterra construction needs at least 32 steps")
    if oversample is None:
        oversample = max(1, 1024 // n)
    nf = n * oversample
    dtf = dt / oversample
    mids = (np.arange(nf) + 0.5) * dtf
    kmat = np.zeros((n, nf))
    for i, t in enumerate(grid[1:]):
        kmat[i] = volterra_kernel(H, t, mids)
    values = np.empty((n_paths, grid.size))
    values[:, 0] = 0.0
    incs = np.empty((n_paths, n))
    sdt = np.sqrt(dtf)
    for ci, start, count in _chunks(n_paths):
        rng = _chunk_rng(seed, stream, ci)
        dwf = sdt * rng.standard_normal((count, nf))
        values[start:start + count, 1:] = dwf @ kmat.T
        incs[start:start + count] = dwf.reshape(count, n, oversample).sum(axis=2)
    return PathBatch(grid, values, incs,
                     {"H": H, "seed": seed, "stream": stream,
                      "method": "volterra", "oversample": oversample})


def sample_gaussian_at(times: np.ndarray, cov: Callable[[float, float], float],
                       n_paths: int, seed: int, stream: int = 0) -> np.ndarray:
    """Exact centered Gaussian draws at arbitrary times (paths, len(times))."""
    times = np.asarray(times, dtype=float)
    n = times.size
    mat = np.empty((n, n))
    for i, s in enumerate(times):
        mat[i, i:] = [cov(s, t) for t in times[i:]]
        mat[i:, i] = mat[i, i:]
    lfac = np.linalg.cholesky(mat)
    out = np.empty((n_paths, n))
    for ci, start, count in _chunks(n_paths):
        rng = _chunk_rng(seed, stream, ci)
        out[start:start + count] = rng.standard_normal((count, n)) @ lfac.T
    return out


# ---------------------------------------------------------------------------
# Drift and measure change
# ---------------------------------------------------------------------------


@dataclass
class DriftSpec:
    """Drift parametrised by the reweighting integrand ``a``.

    The additive drift is m(t) = int_0^t K(t, s) a(s) ds (the kernel
    operator applied to ``a``), so no operator inversion is ever needed;
    mu(t) = m'(t) by central differences on a fine grid. Random adapted
    integrands are out of scope: ``a`` must be deterministic and bounded.
    """

    a: Callable[[np.ndarray], np.ndarray]
    H: float
    horizon: float = 1.0
    grid_n: int = 4096

    def __post_init__(self):
        self._fine = None

    def _sampled(self) -> SampledFunction:
        if self._fine is None:
            g = np.linspace(0.0, self.horizon, self.grid_n + 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.asarray(self.a(g), dtype=float)
                if vals.shape != g.shape:
                    vals = np.array([float(self.a(x)) for x in g])
            if not np.all(np.isfinite(vals)):
                raise DomainError("drift integrand must be bounded on [0, T]")
            self._fine = SampledFunction(g, vals)
        return self._fine

    def mean_at(self, times) -> np.ndarray:
        """m(t) evaluated exactly at the requested times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return _models.volterra_integral_at(self.H, self._sampled(), times)

    def mean_derivative(self, t: float, step: Optional[float] = None) -> float:
        step = step or self.horizon / 2 ** 12
        lo, hi = max(t - step, 0.0), min(t + step, self.horizon)
        m = self.mean_at(np.array([lo, hi]))
        return float((m[1] - m[0]) / (hi - lo))


def add_drift(batch: PathBatch, drift: Optional[DriftSpec],
              x0: float = 0.0) -> PathBatch:
    """Shifted batch x0 + B + m(grid), pathwise.

    The deterministic shift is kept in ``meta["shift"]`` so exporters can
    recover the centered values.
    """
    shift = np.full(batch.grid.size, x0)
    if drift is not None:
        shift = shift + drift.mean_at(batch.grid)
    return PathBatch(batch.grid, batch.values + shift[None, :],
                     batch.w_increments,
                     dict(batch.meta, drifted=drift is not None, x0=x0,
                          shift=shift))


def girsanov_weights(batch: PathBatch, drift: DriftSpec) -> np.ndarray:
    """Density weights exp(-sum_j a(s_j) dW_j - 1/2 sum_j a(s_j)^2 dt) per path.

    Under the reweighted law the driving increments acquire mean -a dt, so
    the drifted process becomes centered fractional Brownian motion again.
    Requires the batch to carry its Wiener increments.
    """
    if batch.w_increments is None:
        raise ContractError("girsanov weights need a batch with w_increments")
    dt = batch.dt
    left = batch.grid[:-1]
    avals = np.asarray(drift.a(left), dtype=float)
    if avals.shape != left.shape:
        avals = np.array([float(drift.a(x)) for x in left])
    log_w = -(batch.w_increments @ avals) - 0.5 * float(np.sum(avals ** 2)) * dt
    return np.exp(log_w)


# ---------------------------------------------------------------------------
# Conditional-mean estimators
# ---------------------------------------------------------------------------


@dataclass
class ConditionalFit:
    """Fitted conditional-mean map with pointwise standard errors."""

    kind: str
    predict: Callable[[np.ndarray], np.ndarray]
    stderr: Callable[[np.ndarray], np.ndarray]
    slope: Optional[float] = None
    intercept: Optional[float] = None
    slope_se: Optional[float] = None
    bandwidth: Optional[float] = None


def mc_conditional_expectation(x: np.ndarray, y: np.ndarray,
                               estimator: str = "linear",
                               bandwidth: Optional[float] = None) -> ConditionalFit:
    """Estimate q -> E[x | y = q] from samples.

    ``linear`` fits ordinary least squares of x on (1, y), exact for jointly
    Gaussian pairs; ``kernel`` is Nadaraya-Watson with a Gaussian kernel
    (Silverman's bandwidth by default). Standard errors are pointwise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise EstimatorError("x and y must be equal-length vectors")
    n = x.size
    if n < 1000:
        raise EstimatorError("need at least 1000 samples")
    y_var = float(np.var(y))
    if y_var <= 0:
        raise EstimatorError("conditioning variable is degenerate")
    if estimator == "linear":
        ybar, xbar = float(y.mean()), float(x.mean())
        syy = float(np.sum((y - ybar) ** 2))
        slope = float(np.sum((y - ybar) * (x - xbar)) / syy)
        intercept = xbar - slope * ybar
        resid = x - (intercept + slope * y)
        sigma2 = float(np.sum(resid ** 2) / (n - 2))
        slope_se = float(np.sqrt(sigma2 / syy))

        def predict(q, s=slope, b=intercept):
            return b + s * np.asarray(q, dtype=float)

        def stderr(q):
            q = np.asarray(q, dtype=float)
            return np.sqrt(sigma2 * (1.0 / n + (q - ybar) ** 2 / syy))

        return ConditionalFit("linear", predict, stderr, slope=slope,
                              intercept=intercept, slope_se=slope_se)
    if estimator == "kernel":
        bw = bandwidth if bandwidth is not None else \
            1.06 * float(np.std(y)) * n ** (-0.2)
        if bw <= 0:
            raise EstimatorError("bandwidth must be positive")

        def _weights(q):
            q = np.atleast_1d(np.asarray(q, dtype=float))
            return np.exp(-0.5 * ((q[:, None] - y[None, :]) / bw) ** 2)

        def predict(q):
            w = _weights(q)
            out = (w @ x) / np.maximum(w.sum(axis=1), 1e-300)
            return out if np.ndim(q) else float(out[0])

        def stderr(q):
            w = _weights(q)
            wsum = np.maximum(w.sum(axis=1), 1e-300)
            fit = (w @ x) / wsum
            # local residual variance under the same weights
            var_local = (w @ (x ** 2)) / wsum - fit ** 2
            se = np.sqrt(np.maximum(var_local, 0.0) * (w ** 2).sum(axis=1)) / wsum
            return se if np.ndim(q) else float(se[0])

        return ConditionalFit("kernel", predict, stderr, bandwidth=bw)
    raise EstimatorError(f"unknown estimator {estimator!r}")


# ---------------------------------------------------------------------------
# Monte Carlo stochastic derivative
# ---------------------------------------------------------------------------


@dataclass
class MCDerivative:
    """Per-step conditional-quotient estimates at fixed query points.

    ``estimates[k, q]`` approximates |h_k|^(-alpha) E[Z_{t+h_k} - Z_t | .]
    evaluated at conditioning-variable quantile q. ``stabilization`` is the
    largest change between consecutive steps in units of its standard error.
    """

    hs: np.ndarray
    queries: np.ndarray
    quantiles: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    stabilization: np.ndarray


def mc_stochastic_derivative(H: float, drift: Optional[DriftSpec], t: float,
                             s: float, conditioning: str, hs: Sequence[float],
                             n_paths: int, alpha: float = 1.0, seed: int = 0,
                             stream: int = 0,
                             quantiles: Sequence[float] = (0.25, 0.5, 0.75),
                             x0: float = 0.0) -> MCDerivative:
    """Estimate renormalised conditional quotients by simulation.

    ``conditioning`` is "value" (condition on Z_s; with deterministic drift
    this is conditioning on the centered B_s) or "abs" (condition on |B_s|,
    which annihilates the centered part by symmetry). Sampling is exact:
    the joint Gaussian law of B at the needed times is factorised directly,
    so the only systematic error is the finite h.
    """
    hs = np.asarray(list(hs), dtype=float)
    times = np.unique(np.concatenate([[s, t], t + hs]))
    if np.any(times <= 0):
        raise DomainError("all sample times must be positive")
    draws = sample_gaussian_at(times, lambda u, v: fbm_cov(H, u, v),
                               n_paths, seed, stream)
    idx = {float(u): i for i, u in enumerate(times)}
    b_s = draws[:, idx[float(s)]]
    b_t = draws[:, idx[float(t)]]
    m = drift.mean_at(np.concatenate([[t], t + hs])) if drift is not None \
        else np.zeros(1 + hs.size)
    cond = b_s if conditioning == "value" else np.abs(b_s)
    if conditioning not in ("value", "abs"):
        raise DomainError("conditioning must be 'value' or 'abs'")
    qs = np.asarray(list(quantiles), dtype=float)
    queries = np.quantile(cond, qs)
    estimates = np.empty((hs.size, qs.size))
    stderrs = np.empty_like(estimates)
    for k, h in enumerate(hs):
        dz = (draws[:, idx[float(t + h)]] - b_t) + (m[1 + k] - m[0])
        resp = dz / np.abs(h) ** alpha * np.sign(h)
        fit = mc_conditional_expectation(
            resp, cond, estimator="linear" if conditioning == "value" else "kernel")
        estimates[k] = fit.predict(queries)
        stderrs[k] = fit.stderr(queries)
    steps = np.abs(np.diff(estimates, axis=0)) / np.maximum(
        np.sqrt(stderrs[1:] ** 2 + stderrs[:-1] ** 2), 1e-300)
    return MCDerivative(hs, queries, qs, estimates, stderrs,
                        stabilization=steps.max(axis=1) if steps.size else np.zeros(0))
