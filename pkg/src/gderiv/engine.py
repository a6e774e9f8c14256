"""Classification of conditional difference quotients.

For a span of conditioning variables the conditional expectation of the
difference quotient (Z_{t+h} - Z_t)/h is an explicit affine combination per
h; driving h to zero along a geometric schedule and accelerating the
coefficient paths decides whether the sigma-field differentiates the
process at t, degenerates it (constant limit), or diverges at a power
rate, with the evidence retained in the verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (DegenerateVariable, DomainError, PreconditionFailed,
                     SingularSpan)
from .gaussian import (AffineCombination, CovarianceOracle, FirstChaosVariable,
                       GramSystem, combine, increment, process_value, regress)
from .models import BasisExpansion

# ---------------------------------------------------------------------------
# Conditioning specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSpan:
    """sigma-field generated by finitely many first-chaos variables."""

    variables: tuple[FirstChaosVariable, ...]


@dataclass(frozen=True)
class EvenFunctionOf:
    """sigma{f(Y)} for an (unrecorded) even f; E[Y | f(Y)] = 0 is the contract."""

    variable: FirstChaosVariable


@dataclass(frozen=True)
class MeasurableFunctionOf:
    """sigma{f(Y)} for a general pointwise map; Monte Carlo only."""

    variable: FirstChaosVariable
    fn: object = None


@dataclass(frozen=True)
class AtomSpan:
    """sigma-field generated by a subset of a finite-atom model's atoms."""

    indices: tuple[int, ...]


@dataclass(frozen=True)
class FullGenerators:
    """sigma-field of all atoms of a finite-atom model."""


ConditioningSpec = Union[LinearSpan, EvenFunctionOf, MeasurableFunctionOf,
                         AtomSpan, FullGenerators]


def span_of(*times: float) -> LinearSpan:
    """LinearSpan of the process values at the given times."""
    return LinearSpan(tuple(process_value(t) for t in times))


# ---------------------------------------------------------------------------
# Schedules, tolerances, verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientSchedule:
    """Geometric family h_k = h0 * ratio^k of difference-quotient steps."""

    h0: float
    ratio: float = 0.5
    steps: int = 20
    mode: str = "forward"  # forward | backward | two_sided

    def __post_init__(self):
        if not (0 < self.ratio < 1):
            raise DomainError("ratio must lie in (0,1)")
        if self.steps < 8:
            raise DomainError("need at least 8 steps")
        if self.h0 <= 0:
            raise DomainError("h0 must be positive")
        if self.mode not in ("forward", "backward", "two_sided"):
            raise DomainError(f"unknown mode {self.mode!r}")

    def offsets(self, sign: float) -> np.ndarray:
        return sign * self.h0 * self.ratio ** np.arange(self.steps)

    def validate(self, t: float, horizon: float) -> None:
        if self.mode in ("forward", "two_sided") and t + self.h0 >= horizon:
            raise DomainError("t + h0 leaves the horizon")
        if self.mode in ("backward", "two_sided") and t - self.h0 <= 0:
            raise DomainError("t - h0 leaves (0, T)")


def default_schedule(t: float, mode: str = "forward") -> QuotientSchedule:
    return QuotientSchedule(h0=t / 16, ratio=0.5, steps=20, mode=mode)


@dataclass(frozen=True)
class Tolerances:
    cauchy_rel_tol: float = 1e-6
    cauchy_window: int = 5
    degenerate_var_tol: float = 1e-10
    slope_min: float = 0.05
    r2_min: float = 0.99
    monotone_steps: int = 10
    side_match_tol: float = 1e-6


@dataclass(frozen=True)
class AtomCombination:
    """sum_i coeff_i * N_{index_i} + constant over a finite-atom model."""

    indices: tuple[int, ...]
    coeffs: np.ndarray
    constant: float
    variances: np.ndarray

    def variance(self, oracle=None) -> float:
        return float(np.sum(self.coeffs ** 2 * self.variances))

    def mean(self) -> float:
        return float(self.constant)

    def l2_norm(self, oracle=None) -> float:
        return float(np.sqrt(self.variance() + self.constant ** 2))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.coeffs, [self.constant]])


@dataclass(frozen=True)
class Verdict:
    """Outcome of classify at (t, spec).

    ``kind`` is one of differentiates / degenerates / diverges /
    inconclusive. ``evidence`` holds one row per scheduled h with the
    affine coefficients and the L2 norm of the conditional quotient.
    """

    kind: str
    derivative: Optional[Union[AffineCombination, AtomCombination]] = None
    norm: Optional[float] = None
    constant: Optional[float] = None
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r2: Optional[float] = None
    renormalized: Optional[tuple[float, Union[AffineCombination, AtomCombination]]] = None
    evidence: tuple = ()
    sides: Optional[dict] = None

    @property
    def differentiates(self) -> bool:
        return self.kind in ("differentiates", "degenerates")


# ---------------------------------------------------------------------------
# Difference quotients
# ---------------------------------------------------------------------------


def _oracle_of(model) -> CovarianceOracle:
    return model.as_oracle()


def _quotient_target(oracle: CovarianceOracle, t: float, h: float) -> FirstChaosVariable:
    dm = (oracle.mean(t + h) - oracle.mean(t)) / h
    return increment(t, h, scale=1.0 / h, offset=dm)


def difference_quotient(model, t: float, h: float,
                        spec: ConditioningSpec):
    """E[(Z_{t+h} - Z_t)/h | spec] as an affine combination.

    LinearSpan conditions by Gaussian regression; EvenFunctionOf annihilates
    the random part (centered Gaussian symmetry), leaving the deterministic
    drift quotient; atom spans on finite-atom models are exact sums of
    coefficient quotients.
    """
    if isinstance(spec, MeasurableFunctionOf):
        raise DomainError("general measurable conditioning is Monte Carlo only")
    oracle = _oracle_of(model)
    if isinstance(spec, LinearSpan):
        span = GramSystem(spec.variables, oracle)
        return regress(_quotient_target(oracle, t, h), span)
    if isinstance(spec, EvenFunctionOf):
        dm = (oracle.mean(t + h) - oracle.mean(t)) / h
        return AffineCombination((), np.zeros(0), dm)
    if isinstance(spec, (AtomSpan, FullGenerators)):
        if not isinstance(model, BasisExpansion):
            raise DomainError("atom conditioning requires a finite-atom model")
        indices = (tuple(range(model.n_atoms)) if isinstance(spec, FullGenerators)
                   else spec.indices)
        all_coeffs = model.quotient_coeffs(t, h)
        var = model.variances()
        return AtomCombination(tuple(indices),
                               np.asarray(all_coeffs)[list(indices)],
                               0.0, var[list(indices)])
    raise DomainError(f"unsupported conditioning spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Sequence acceleration
# ---------------------------------------------------------------------------


def accelerate(path: np.ndarray, sweeps: int = 2) -> np.ndarray:
    """Iterated Aitken delta-squared, componentwise over the trailing axis.

    Exact on geometric error modes with per-point ratios, so it separates
    stacked power modes well; sensitive to noise through its local
    denominators. Robust to exactly constant components (degenerate
    denominators keep the raw value). Returns the accelerated sequence
    (shorter by 2 per sweep).
    """
    x = np.atleast_2d(np.asarray(path, dtype=float).T).T  # (K, d)
    for _ in range(sweeps):
        if x.shape[0] < 3:
            break
        d1 = x[1:-1] - x[:-2]
        d2 = x[2:] - x[1:-1]
        den = d2 - d1
        scale = np.max(np.abs(x), axis=0, keepdims=True)
        ok = np.abs(den) > 1e-14 * np.maximum(scale, 1e-300)
        x = np.where(ok, x[2:] - d2 * d2 / np.where(ok, den, 1.0), x[2:])
    return x


def accelerate_pooled(path: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Richardson sweeps with one pooled ratio per sweep.

    The mode ratio is estimated as the median of trailing difference-norm
    ratios, which filters evaluation noise far better than Aitken's local
    denominators; slow single modes (ratio near 1) extrapolate stably.
    """
    x = np.atleast_2d(np.asarray(path, dtype=float).T).T
    for _ in range(sweeps):
        if x.shape[0] < 4:
            break
        d = np.diff(x, axis=0)
        mags = np.max(np.abs(d), axis=1)
        if mags.max() <= 1e-15 * max(float(np.max(np.abs(x))), 1e-300):
            break
        tail = mags[-6:]
        ratios = tail[1:] / np.maximum(tail[:-1], 1e-300)
        rho = float(np.median(ratios))
        if not (0.02 < rho < 0.98):
            break
        x = x[1:] + d * (rho / (1.0 - rho))
    return x


def _sup(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _converged_limit(vectors: np.ndarray, tol: Tolerances):
    """Limit of the vector path if it (visibly) converges, else None.

    Convergence requires raw successive differences that do not grow
    (guarding against Aitken collapsing an exactly geometric divergence)
    plus a Cauchy accelerated tail. Tail changes are measured relative to
    the limit or, for vanishing limits, to the overall path scale.
    """
    k = vectors.shape[0]
    scale = max(_sup(vectors[-1]), 1e-12)
    diffs = np.array([_sup(vectors[i + 1] - vectors[i]) for i in range(k - 1)])
    window = min(tol.cauchy_window, k - 1)
    if np.all(diffs[-window:] <= tol.cauchy_rel_tol * scale):
        return vectors[-1]
    tail = diffs[-(window + 2):]
    ratios = tail[1:] / np.maximum(tail[:-1], 1e-300)
    if np.median(ratios) >= 0.95:
        return None
    path_scale = float(np.max(np.abs(vectors)))
    for accel in (accelerate, accelerate_pooled):
        acc = accel(vectors)
        if acc.shape[0] < window + 1:
            continue
        a_scale = max(_sup(acc[-1]), path_scale, 1e-300)
        thresh = tol.cauchy_rel_tol * a_scale
        a_diffs = np.array([_sup(acc[i + 1] - acc[i])
                            for i in range(acc.shape[0] - window - 1,
                                           acc.shape[0] - 1)])
        if np.all(a_diffs <= thresh):
            # stabilised (possibly at the extrapolation noise floor)
            return acc[-(window + 1):].mean(axis=0)
        a_ratios = a_diffs[1:] / np.maximum(a_diffs[:-1], 1e-300)
        rho = float(np.median(a_ratios))
        if 0.0 < rho < 0.95:
            # geometrically decaying accelerated tail: the remaining error
            # is bounded by the geometric series of future differences
            if a_diffs[-1] * rho / (1.0 - rho) <= thresh and a_diffs[-1] <= thresh:
                return acc[-1]
    return None


def _loglog_fit(hs: np.ndarray, norms: np.ndarray, window: int):
    """OLS of log norm against log |h| over the last ``window`` points."""
    mask = norms > 0
    x = np.log(np.abs(hs[mask]))[-window:]
    y = np.log(norms[mask])[-window:]
    if x.size < 3:
        return None
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    yhat = a @ coef
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), r2


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _combo_from_vector(template, vec: np.ndarray):
    if isinstance(template, AtomCombination):
        return AtomCombination(template.indices, vec[:-1], float(vec[-1]),
                               template.variances)
    return AffineCombination(template.variables, vec[:-1], float(vec[-1]))


def _combo_norm(combo, oracle) -> float:
    return combo.l2_norm(oracle)


def _path(model, t, spec, hs):
    oracle = _oracle_of(model)
    combos = [difference_quotient(model, t, h, spec) for h in hs]
    vectors = np.array([c.vector() for c in combos])
    norms = np.array([_combo_norm(c, oracle) for c in combos])
    return combos, vectors, norms, oracle


def _classify_one_side(model, t, spec, hs, tol: Tolerances) -> Verdict:
    combos, vectors, norms, oracle = _path(model, t, spec, hs)
    evidence = tuple(
        {"h": float(h), "coeffs": tuple(np.asarray(c.vector()[:-1])),
         "constant": float(c.vector()[-1]), "norm": float(n)}
        for h, c, n in zip(hs, combos, norms))
    limit = _converged_limit(vectors, tol)
    if limit is not None:
        lim_combo = _combo_from_vector(combos[-1], limit)
        var = lim_combo.variance(oracle)
        norm = _combo_norm(lim_combo, oracle)
        if var < tol.degenerate_var_tol:
            return Verdict("degenerates", derivative=lim_combo, norm=norm,
                           constant=lim_combo.mean(), evidence=evidence)
        return Verdict("differentiates", derivative=lim_combo, norm=norm,
                       evidence=evidence)
    # divergence: monotone norm growth as h shrinks plus a clean power fit
    w = min(tol.monotone_steps, len(norms) - 1)
    growing = np.all(np.diff(norms[-(w + 1):]) > 0)
    fit = _loglog_fit(hs, norms, tol.monotone_steps)
    if growing and fit is not None:
        slope, intercept, r2 = fit
        if slope < -tol.slope_min and r2 > tol.r2_min:
            verdict = Verdict("diverges", slope=slope, intercept=intercept,
                              r2=r2, evidence=evidence)
            renorm = _try_renormalized(model, t, spec, hs, 1.0 + slope, tol)
            if renorm is not None:
                verdict = replace(verdict, renormalized=(1.0 + slope, renorm))
            return verdict
    diag = {"slope": fit[0], "r2": fit[2]} if fit is not None else {}
    return Verdict("inconclusive", evidence=evidence,
                   slope=diag.get("slope"), r2=diag.get("r2"))


def _try_renormalized(model, t, spec, hs, alpha, tol):
    if not (0 < alpha <= 1):
        return None
    try:
        _, vectors, _, _ = _path(model, t, spec, hs)
    except Exception:
        return None
    weighted = np.abs(hs)[:, None] ** (1.0 - alpha) * vectors
    limit = _converged_limit(weighted, tol)
    if limit is None:
        return None
    template = difference_quotient(model, t, hs[-1], spec)
    return _combo_from_vector(template, limit)


def classify(model, t: float, spec: ConditioningSpec,
             schedule: Optional[QuotientSchedule] = None,
             tolerances: Tolerances = Tolerances()) -> Verdict:
    """Decide how the sigma-field behaves against the quotient at time t.

    Two-sided mode classifies each side and requires matching limits within
    ``side_match_tol``; mismatched sides yield an inconclusive verdict with
    both one-sided verdicts attached.
    """
    schedule = schedule or default_schedule(t)
    schedule.validate(t, getattr(model, "horizon", np.inf))
    if schedule.mode != "two_sided":
        sign = 1.0 if schedule.mode == "forward" else -1.0
        return _classify_one_side(model, t, spec, schedule.offsets(sign),
                                  tolerances)
    fwd = _classify_one_side(model, t, spec, schedule.offsets(1.0), tolerances)
    bwd = _classify_one_side(model, t, spec, schedule.offsets(-1.0), tolerances)
    sides = {"forward": fwd, "backward": bwd}
    if fwd.differentiates and bwd.differentiates:
        vf, vb = fwd.derivative.vector(), bwd.derivative.vector()
        scale = max(_sup(vf), _sup(vb), 1e-12)
        if _sup(vf - vb) <= tolerances.side_match_tol * scale:
            mean_vec = 0.5 * (vf + vb)
            combo = _combo_from_vector(fwd.derivative, mean_vec)
            kind = ("degenerates"
                    if fwd.kind == bwd.kind == "degenerates" else "differentiates")
            return Verdict(kind, derivative=combo,
                           norm=_combo_norm(combo, _oracle_of(model)),
                           constant=combo.mean() if kind == "degenerates" else None,
                           evidence=fwd.evidence + bwd.evidence, sides=sides)
        return Verdict("inconclusive", evidence=fwd.evidence + bwd.evidence,
                       sides=sides)
    if fwd.kind == bwd.kind == "diverges":
        return Verdict("diverges", slope=fwd.slope, intercept=fwd.intercept,
                       r2=fwd.r2, renormalized=fwd.renormalized,
                       evidence=fwd.evidence + bwd.evidence, sides=sides)
    return Verdict("inconclusive", evidence=fwd.evidence + bwd.evidence,
                   sides=sides)


# ---------------------------------------------------------------------------
# Exact derivatives and renormalized limits
# ---------------------------------------------------------------------------


def stochastic_derivative_exact(model, t: float, y: FirstChaosVariable):
    """Closed-form derivative against sigma{y}: y * (d/ds Cov(Z_s, y)|_t) / Var(y).

    Returns the affine combination, or None when the two-sided covariance
    derivative does not exist. Raises DegenerateVariable for Var(y) = 0.
    """
    oracle = _oracle_of(model)
    var = oracle.variance(y)
    if var <= 0:
        raise DegenerateVariable("conditioning variable has zero variance")
    if oracle.partial_u is None:
        return None
    total = 0.0
    for s, w in y.weights:
        if w == 0.0:
            continue
        d = oracle.partial_u(t, s, "two_sided")
        if d is None or not np.isfinite(d):
            return None
        total += w * d
    drift = oracle.mean_derivative(t) if oracle.mean_derivative else 0.0
    coeff = total / var
    return AffineCombination((y,), np.array([coeff]),
                             drift - coeff * y.offset)


def renormalized_limit(model, t: float, spec: ConditioningSpec, alpha: float,
                       schedule: Optional[QuotientSchedule] = None,
                       tolerances: Tolerances = Tolerances()):
    """Limit of |h|^(1-alpha) E[(Z_{t+h}-Z_t)/h | spec], one-sided.

    Returns the affine combination or None when the weighted path does not
    stabilise. alpha = 1 recovers the plain quotient limit.
    """
    if not (0 < alpha <= 1):
        raise DomainError("alpha must lie in (0, 1]")
    schedule = schedule or default_schedule(t)
    if schedule.mode == "two_sided":
        raise DomainError("renormalized limits are one-sided")
    schedule.validate(t, getattr(model, "horizon", np.inf))
    sign = 1.0 if schedule.mode == "forward" else -1.0
    hs = schedule.offsets(sign)
    _, vectors, _, _ = _path(model, t, spec, hs)
    weighted = np.abs(hs)[:, None] ** (1.0 - alpha) * vectors
    limit = _converged_limit(weighted, tolerances)
    if limit is None:
        return None
    template = difference_quotient(model, t, hs[-1], spec)
    return _combo_from_vector(template, limit)


def rate_exponent(model, t: float, spec: ConditioningSpec,
                  schedule: Optional[QuotientSchedule] = None,
                  fit_window: int = 10):
    """Log-log OLS of the conditional-quotient norm against |h|.

    Returns (slope, intercept, r2, excluded) where ``excluded`` lists the
    h values whose norm vanished (flagged, not fitted). The fit uses the
    ``fit_window`` smallest steps, where the power law dominates.
    """
    schedule = schedule or default_schedule(t)
    schedule.validate(t, getattr(model, "horizon", np.inf))
    sign = -1.0 if schedule.mode == "backward" else 1.0
    hs = schedule.offsets(sign)
    _, _, norms, _ = _path(model, t, spec, hs)
    excluded = [float(h) for h, n in zip(hs, norms) if n == 0.0]
    fit = _loglog_fit(hs, norms, fit_window)
    if fit is None:
        return None, None, None, excluded
    slope, intercept, r2 = fit
    return slope, intercept, r2, excluded


def projection_identity_residual(model, t: float, big: LinearSpan,
                                 sub: LinearSpan,
                                 schedule: Optional[QuotientSchedule] = None,
                                 tolerances: Tolerances = Tolerances()) -> float:
    """L2 distance between the sub-span derivative and the projected big one.

    The big span must differentiate at t (verified via classify); its
    derivative is projected onto the sub-span and compared with the
    directly computed sub-span derivative.
    """
    from .gaussian import project_affine

    schedule = schedule or default_schedule(t, mode="two_sided")
    big_verdict = classify(model, t, big, schedule, tolerances)
    if not big_verdict.differentiates:
        raise PreconditionFailed("big span does not differentiate at t",
                                 detail=big_verdict)
    oracle = _oracle_of(model)
    sub_gram = GramSystem(sub.variables, oracle)
    projected = project_affine(big_verdict.derivative, sub_gram)
    sub_verdict = classify(model, t, sub, schedule, tolerances)
    if not sub_verdict.differentiates:
        raise PreconditionFailed("sub span does not differentiate at t",
                                 detail=sub_verdict)
    diff = combine(
        list(projected.variables) + list(sub_verdict.derivative.variables),
        list(projected.coeffs) + list(-sub_verdict.derivative.coeffs),
        projected.constant - sub_verdict.derivative.constant)
    return oracle.norm(diff)


def parseval_energy(model: BasisExpansion, t: float, h: float,
                    n_terms: Optional[int] = None) -> float:
    """sum_i (Delta_h f_i(t))^2 over the first n_terms basis functions.

    For coefficient functions integrating an orthonormal family this is the
    squared L2 norm of the all-atoms conditional quotient, converging to
    1/h as the truncation grows (the quotient's energy blows up even though
    every single atom differentiates).
    """
    q = model.quotient_coeffs(t, h)
    if n_terms is not None:
        q = q[:n_terms]
    return float(np.sum(q ** 2))
