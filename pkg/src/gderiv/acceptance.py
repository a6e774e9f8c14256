"""The acceptance suite: every exit criterion as a runnable check.

Each criterion returns a pass/fail result plus the data rows backing it;
the suite runner writes one CSV per criterion and a summary report. The
pytest acceptance module and the command-line suite both execute these
functions, with fixed seeds, so the two entry points cannot drift apart.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import chaos, engine, models, simulate
from .engine import (AtomSpan, EvenFunctionOf, FullGenerators, QuotientSchedule,
                     classify, parseval_energy, projection_identity_residual,
                     renormalized_limit, span_of)
from .errors import ResolutionError
from .models import (FractionalBrownian, fbm_cov, trigonometric_basis,
                     two_atom, volterra_kernel)
from .simulate import (DriftSpec, add_drift, girsanov_weights,
                       mc_stochastic_derivative, sample_fbm,
                       sample_fbm_volterra, uniform_grid)

DEFAULT_SEED = 20260801


@dataclass(frozen=True)
class SuiteContext:
    seed: int = DEFAULT_SEED
    disabled: frozenset = frozenset()
    tolerance_overrides: dict = field(default_factory=dict)

    def tol(self, cid: int, default: float) -> float:
        return float(self.tolerance_overrides.get(cid, default))


@dataclass
class CriterionResult:
    cid: int
    key: str
    description: str
    passed: bool
    skipped: bool
    detail: str
    data: list
    elapsed: float

    @property
    def status(self) -> str:
        return "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")


def _ones(s):
    return np.ones_like(np.asarray(s, dtype=float))


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def _c1_exact_derivative(ctx: SuiteContext):
    tol = ctx.tol(1, 1e-6)
    model = FractionalBrownian(0.7)
    t0 = time.perf_counter()
    verdict = classify(model, 0.5, span_of(0.5),
                       engine.default_schedule(0.5, "two_sided"))
    elapsed = time.perf_counter() - t0
    coeff = verdict.derivative.coeffs[0] if verdict.differentiates else np.nan
    ok = (verdict.kind == "differentiates" and abs(coeff - 1.4) <= tol
          and elapsed < 0.1)
    rows = [dict(r, side="two_sided") for r in verdict.evidence]
    rows.append({"h": 0.0, "coeffs": (coeff,), "constant": 0.0,
                 "norm": verdict.norm, "side": "limit"})
    return ok, (f"kind={verdict.kind} coeff={coeff:.9f} "
                f"|err|={abs(coeff - 1.4):.2e} tol={tol:g} time={elapsed:.3f}s"), rows


def _c2_divergence_renormalization(ctx: SuiteContext):
    tol = ctx.tol(2, 1e-6)
    model = FractionalBrownian(0.3, horizon=2.0)
    sched = QuotientSchedule(1.0 / 16, mode="forward")
    t0 = time.perf_counter()
    verdict = classify(model, 1.0, span_of(1.0), sched)
    limit = renormalized_limit(model, 1.0, span_of(1.0), 0.6, sched)
    elapsed = time.perf_counter() - t0
    slope_ok = verdict.kind == "diverges" and abs(verdict.slope + 0.4) <= 0.02 \
        and verdict.r2 > 0.99
    lim_ok = limit is not None and abs(limit.coeffs[0] + 0.5) <= tol \
        and abs(limit.constant) <= tol
    ok = slope_ok and lim_ok and elapsed < 0.1
    rows = list(verdict.evidence)
    coeff = limit.coeffs[0] if limit is not None else np.nan
    return ok, (f"kind={verdict.kind} slope={verdict.slope:+.4f} r2={verdict.r2:.6f}"
                f" renorm_coeff={coeff:.9f} time={elapsed:.3f}s"), rows


def _c3_projection_identity(ctx: SuiteContext):
    tol = ctx.tol(3, 1e-9)
    cases = [
        (0.7, 0.5, (0.3, 0.8), (0.3,)),
        (0.3, 0.5, (0.2, 0.9), (0.9,)),
    ]
    rows, ok = [], True
    for hurst, t, big, sub in cases:
        resid = projection_identity_residual(
            FractionalBrownian(hurst), t, span_of(*big), span_of(*sub))
        rows.append({"H": hurst, "t": t, "big": big, "sub": sub,
                     "residual": resid})
        ok &= resid < tol
    detail = "; ".join(f"H={r['H']}: {r['residual']:.2e}" for r in rows)
    return ok, detail + f" (tol {tol:g})", rows


def _c4_even_dichotomy(ctx: SuiteContext):
    tol = ctx.tol(4, 1e-10)
    model = FractionalBrownian(0.3, horizon=2.0)
    verdict = classify(model, 1.0, EvenFunctionOf(engine.span_of(1.0).variables[0]),
                       QuotientSchedule(1.0 / 16, mode="forward"))
    ok = verdict.kind == "degenerates" and abs(verdict.constant) <= tol
    return ok, f"kind={verdict.kind} constant={verdict.constant!r}", \
        [{"kind": verdict.kind, "constant": verdict.constant}]


def _c5_kernel_identity(ctx: SuiteContext):
    tol = ctx.tol(5, 1e-3)
    probes = (0.2, 0.35, 0.5, 0.65, 0.8)
    t0 = time.perf_counter()
    rows, worst = [], 0.0
    for hurst in (0.3, 0.5, 0.7):
        for s in probes:
            for t in probes:
                lo = min(s, t)
                val, _ = quad(lambda u: volterra_kernel(hurst, s, u)
                              * volterra_kernel(hurst, t, u),
                              0.0, lo, limit=200, epsabs=1e-8, epsrel=1e-8)
                err = abs(val - fbm_cov(hurst, s, t))
                worst = max(worst, err)
                rows.append({"H": hurst, "s": s, "t": t, "quadrature": val,
                             "covariance": fbm_cov(hurst, s, t), "error": err})
    elapsed = time.perf_counter() - t0
    ok = worst < tol and elapsed < 30.0
    return ok, f"worst |int KK - cov| = {worst:.2e} (tol {tol:g}), {elapsed:.1f}s", rows


_PROBE_PAIRS = ((0.125, 0.5), (0.25, 0.75), (0.25, 0.5), (0.5, 0.75))


def _second_moment_rows(batch, hurst, method):
    rows = []
    for s, t in _PROBE_PAIRS:
        prod = batch.value_at(s) * batch.value_at(t)
        emp = float(prod.mean())
        se = float(prod.std(ddof=1) / np.sqrt(prod.size))
        target = fbm_cov(hurst, s, t)
        rows.append({"method": method, "H": hurst, "s": s, "t": t,
                     "empirical": emp, "target": target, "se": se,
                     "dev_se": (emp - target) / se})
    return rows


def _c6_sampler_correctness(ctx: SuiteContext):
    n_paths, steps = 200_000, 64
    grid = uniform_grid(1.0, steps)
    rows, ok = [], True
    methods = [m for m in ("cholesky", "circulant") if m not in ctx.disabled]
    for hurst in (0.3, 0.7):
        for method in methods:
            batch = sample_fbm(hurst, grid, n_paths, seed=ctx.seed + 6,
                               method=method)
            rows += _second_moment_rows(batch, hurst, method)
        if "volterra" not in ctx.disabled:
            batch = sample_fbm_volterra(hurst, grid, n_paths, seed=ctx.seed + 6)
            rows += _second_moment_rows(batch, hurst, "volterra")
    ok = all(abs(r["dev_se"]) <= 3.0 for r in rows)
    # discretization accuracy of the raw kernel sum at 256 steps (deterministic)
    disc_ok = True
    if "volterra" not in ctx.disabled:
        nf = 256
        dt = 1.0 / nf
        mids = (np.arange(nf) + 0.5) * dt
        for hurst in (0.3, 0.7):
            kv = {t: volterra_kernel(hurst, t, mids) for t in
                  {p for pair in _PROBE_PAIRS for p in pair}}
            for s, t in _PROBE_PAIRS:
                disc = float(np.sum(kv[s] * kv[t]) * dt)
                err = abs(disc - fbm_cov(hurst, s, t))
                rows.append({"method": "volterra-disc-256", "H": hurst,
                             "s": s, "t": t, "empirical": disc,
                             "target": fbm_cov(hurst, s, t), "se": 0.0,
                             "dev_se": 0.0, "abs_err": err})
                disc_ok &= err < 0.01
    worst = max(abs(r["dev_se"]) for r in rows)
    return ok and disc_ok, (f"worst |dev|/SE = {worst:.2f} over {len(rows)} probes;"
                            f" raw-256 discretization within 1%: {disc_ok}"), rows


def _c7_sampler_performance(ctx: SuiteContext):
    if "circulant" in ctx.disabled:
        return None, "circulant sampler disabled", []
    grid = uniform_grid(1.0, 2 ** 20)
    t0 = time.perf_counter()
    sample_fbm(0.7, grid, 1, seed=ctx.seed + 7, method="circulant")
    elapsed = time.perf_counter() - t0
    try:
        simulate._cholesky_factor(0.5, uniform_grid(1.0, 8192))
        chol_guard = False
    except ResolutionError:
        chol_guard = True
    ok = elapsed < 1.0 and chol_guard
    return ok, (f"2^20-node circulant path in {elapsed:.3f}s (< 1 s);"
                f" cholesky node cap enforced: {chol_guard}"), \
        [{"nodes": 2 ** 20, "seconds": elapsed, "cholesky_cap": chol_guard}]


def _c8_girsanov(ctx: SuiteContext):
    n_paths, steps = 200_000, 256
    grid = uniform_grid(1.0, steps)
    s, t = 0.25, 0.75
    rows, ok = [], True
    for hurst in (0.3, 0.7):
        drift = DriftSpec(a=_ones, H=hurst)
        base = sample_fbm_volterra(hurst, grid, n_paths, seed=ctx.seed + 8)
        z = add_drift(base, drift)
        eta = girsanov_weights(z, drift)
        m_eta = float(eta.mean())
        se_eta = float(eta.std(ddof=1) / np.sqrt(eta.size))
        prod = z.value_at(s) * z.value_at(t)
        target = fbm_cov(hurst, s, t)
        wprod = eta * prod
        emp_w = float(wprod.mean())
        se_w = float(wprod.std(ddof=1) / np.sqrt(wprod.size))
        emp_u = float(prod.mean())
        se_u = float(prod.std(ddof=1) / np.sqrt(prod.size))
        dev_eta = (m_eta - 1.0) / se_eta
        dev_w = (emp_w - target) / se_w
        dev_u = (emp_u - target) / se_u
        rows.append({"H": hurst, "mean_eta": m_eta, "dev_eta": dev_eta,
                     "weighted": emp_w, "dev_weighted": dev_w,
                     "unweighted": emp_u, "dev_unweighted": dev_u,
                     "target": target})
        ok &= abs(dev_eta) <= 3.0 and abs(dev_w) <= 3.0 and abs(dev_u) > 3.0
    detail = "; ".join(
        f"H={r['H']}: eta {r['dev_eta']:+.2f}SE, weighted {r['dev_weighted']:+.2f}SE,"
        f" unweighted {r['dev_unweighted']:+.1f}SE" for r in rows)
    return ok, detail, rows


def _c9_mc_vs_exact(ctx: SuiteContext):
    hurst, t = 0.7, 0.5
    drift = DriftSpec(a=_ones, H=hurst)
    hs = [0.05 * 0.5 ** k for k in range(10)]
    res = mc_stochastic_derivative(hurst, drift, t, t, "value", hs,
                                   200_000, alpha=1.0, seed=ctx.seed + 9)
    exact = drift.mean_derivative(t) + (hurst / t) * res.queries
    devs = (res.estimates[-1] - exact) / res.stderrs[-1]
    stable = res.stabilization[-3:]
    ok = bool(np.all(np.abs(devs) <= 3.0) and np.all(stable <= 3.0))
    rows = [{"h": float(h), "quantile": float(q), "estimate": float(e),
             "se": float(s_), "exact": float(x)}
            for k, h in enumerate(hs)
            for q, e, s_, x in zip(res.quantiles, res.estimates[k],
                                   res.stderrs[k], exact)]
    return ok, (f"final-h devs/SE = {np.round(devs, 2)};"
                f" stabilization tail {np.round(stable, 2)}"), rows


def _c10_annihilating_conditioning(ctx: SuiteContext):
    hurst, t = 0.3, 0.5
    drift = DriftSpec(a=_ones, H=hurst)
    hs = [0.08, 0.04, 0.02, 0.01]
    res = mc_stochastic_derivative(hurst, drift, t, t, "abs", hs,
                                   200_000, alpha=1.0, seed=ctx.seed + 10)
    mu = drift.mean_derivative(t)
    devs = (res.estimates[-1] - mu) / res.stderrs[-1]
    stable = res.stabilization
    ok = bool(np.all(np.abs(devs) <= 3.0) and np.all(stable <= 3.0))
    rows = [{"h": float(h), "quantile": float(q), "estimate": float(e),
             "se": float(s_), "mu": mu}
            for k, h in enumerate(hs)
            for q, e, s_ in zip(res.quantiles, res.estimates[k], res.stderrs[k])]
    return ok, f"mu={mu:.5f}; final-h devs/SE = {np.round(devs, 2)}", rows


def _c11_counterexample(ctx: SuiteContext):
    tol = ctx.tol(11, 0.01)
    t, h = 0.5, 2.0 ** -8
    basis = trigonometric_basis(4096)
    energy = parseval_energy(basis, t, h)
    target = 1.0 / h
    rel = abs(energy - target) / target
    rows = [{"check": "parseval", "level": 4096, "energy": energy,
             "target": target, "rel_dev": rel}]
    ok = rel <= tol
    # every single atom differentiates (possibly with a zero derivative when
    # its frequency vanishes at t); verified on a spread of atoms, since the
    # classification is per-atom independent
    sched = QuotientSchedule(t / 16, mode="forward")
    for i in (0, 1, 2, 63, 64, 1365, 8191):
        sub = models.BasisExpansion((basis.functions[i],),
                                    (basis.derivatives[i],), bound=2.0)
        v = classify(sub, t, AtomSpan((0,)), sched)
        rows.append({"check": "atom", "index": i, "kind": v.kind,
                     "coefficient": float(v.derivative.coeffs[0])
                     if v.differentiates else np.nan})
        ok &= v.differentiates
    # two-atom model with one kink: all atoms diverge jointly, the smooth
    # atom alone differentiates with the classical coefficient
    kink = two_atom(lambda u: u, lambda u: abs(u - 0.5) ** 0.3,
                    d1=lambda u: 1.0, d2=None)
    v_full = classify(kink, 0.5, FullGenerators(), sched)
    v_atom = classify(kink, 0.5, AtomSpan((0,)), sched)
    coeff = float(v_atom.derivative.coeffs[0]) if v_atom.differentiates else np.nan
    ok &= v_full.kind == "diverges" and v_atom.kind == "differentiates" \
        and abs(coeff - 1.0) <= 1e-9
    rows.append({"check": "two_atom_full", "kind": v_full.kind,
                 "slope": v_full.slope})
    rows.append({"check": "two_atom_smooth", "kind": v_atom.kind,
                 "coefficient": coeff})
    return ok, (f"energy={energy:.3f} ({rel:.3%} of 1/h, tol {tol:.0%});"
                f" atoms differentiate; kink model: {v_full.kind}/{v_atom.kind}"), rows


def _c12_chaos_embedding(ctx: SuiteContext):
    tol = ctx.tol(12, 1e-10)
    rows, ok = [], True
    times = np.linspace(0.05, 0.95, 16)
    for a in (-1.0, 0.0, 1.0):
        for b in (0.0, 0.5):
            for consts in ((1.0,), (1.0, 1.0), (1.0, 1.0, 0.5)):
                x = chaos.solve_linear_embedding(a, b, consts)
                worst = max(chaos.embedding_residual(x, a, b, float(u))
                            for u in times)
                rows.append({"check": "residual", "a": a, "b": b,
                             "orders": len(consts) - 1, "max_residual": worst})
                ok &= worst < tol
    # regression check of the derivative coefficient
    x = chaos.solve_linear_embedding(1.0, 0.5, (1.0, 1.0))
    nelson = chaos.mc_verify_nelson(x, 0.5, [2.0 ** -k for k in range(4, 10)],
                                    200_000, seed=ctx.seed + 12)
    last = nelson[-1]
    slope_dev = (last["slope"] - 1.0) / last["slope_se"]
    ok &= abs(slope_dev) <= 3.0
    rows += [dict(r, check="nelson") for r in nelson]
    # isometry and inter-order orthogonality
    grid = uniform_grid(1.0, 256)
    wb = sample_fbm(0.5, grid, 100_000, seed=ctx.seed + 120, method="circulant")
    wb = simulate.PathBatch(wb.grid, wb.values, np.diff(wb.values, axis=1))
    kernels = {1: lambda s: np.exp(s),
               2: lambda s1, s2: s1 + 0.5 * s2,
               3: 1.3}
    samples = {}
    for order, kern in kernels.items():
        j = chaos.j_integral_samples(order, kern, wb)
        samples[order] = j
        target = chaos.simplex_inner_product(kern, kern, order, 1.0)
        var = float(j.var(ddof=1))
        dev2 = (j - j.mean()) ** 2
        se = float(dev2.std(ddof=1) / np.sqrt(j.size))
        dev = (var - target) / se
        rows.append({"check": "isometry", "order": order, "variance": var,
                     "target": target, "dev_se": dev})
        ok &= abs(dev) <= 3.0
    # non-constant order-3 kernel: the sampler is checked against the exact
    # second moment of the discrete ordered sum (the continuous value is
    # recorded too; its gap is the O(1/steps) discretisation, not noise)
    small = uniform_grid(1.0, 96)
    wbs = sample_fbm(0.5, small, 50_000, seed=ctx.seed + 121, method="circulant")
    wbs = simulate.PathBatch(wbs.grid, wbs.values, np.diff(wbs.values, axis=1))
    k3 = lambda s1, s2, s3: np.cos(s1) * (1.0 + 0.5 * s2) + 0.0 * s3
    j3 = chaos.j_integral_samples(3, k3, wbs)
    lefts = small[:-1]
    tens = np.asarray(k3(lefts[:, None, None], lefts[None, :, None],
                         lefts[None, None, :]))
    i_, j_, l_ = np.indices(tens.shape)
    dt = lefts[1] - lefts[0]
    disc_norm = float(np.sum(tens[(i_ > j_) & (j_ > l_)] ** 2)) * dt ** 3
    cont_norm = chaos.simplex_inner_product(k3, k3, 3, 1.0)
    var = float(j3.var(ddof=1))
    dev2 = (j3 - j3.mean()) ** 2
    dev = (var - disc_norm) / float(dev2.std(ddof=1) / np.sqrt(j3.size))
    rows.append({"check": "isometry-general3", "order": 3, "variance": var,
                 "target": disc_norm, "continuous": cont_norm, "dev_se": dev})
    ok &= abs(dev) <= 3.0
    for a_ord, b_ord in ((1, 2), (1, 3), (2, 3)):
        prod = samples[a_ord] * samples[b_ord]
        dev = float(prod.mean() / (prod.std(ddof=1) / np.sqrt(prod.size)))
        rows.append({"check": "orthogonality", "orders": (a_ord, b_ord),
                     "dev_se": dev})
        ok &= abs(dev) <= 3.0
    return ok, (f"max residual pass (tol {tol:g}); nelson slope dev "
                f"{slope_dev:+.2f}SE; isometry/orthogonality within 3SE: {ok}"), rows


_DETERMINISM_SUBSET = (1, 2, 3, 4, 11)


def _c13_determinism(ctx: SuiteContext):
    """Rerun a representative subset and byte-compare every emitted CSV."""
    import hashlib
    import tempfile
    from pathlib import Path

    from . import batchio

    sub_ctx = SuiteContext(seed=ctx.seed, disabled=ctx.disabled)

    def _digest_once() -> str:
        results = run_suite(sub_ctx, criteria=_DETERMINISM_SUBSET)
        payload = "\n".join(_render_csv(r.data) for r in results)
        batch = sample_fbm(0.7, uniform_grid(1.0, 32), 500, seed=ctx.seed + 13)
        with tempfile.TemporaryDirectory() as td:
            p = Path(td) / "batch.csv"
            batchio.write_csv(batch, p)
            payload += p.read_text()
        return hashlib.sha256(payload.encode()).hexdigest()

    d1, d2 = _digest_once(), _digest_once()
    ok = d1 == d2
    return ok, f"digest run1 {d1[:16]}.. == run2 {d2[:16]}..: {ok}", \
        [{"digest1": d1, "digest2": d2, "identical": ok}]


# ---------------------------------------------------------------------------
# registry and runner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Criterion:
    cid: int
    key: str
    description: str
    fn: Callable


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "exact-derivative", "smooth regime: two-sided derivative H/t", _c1_exact_derivative),
    Criterion(2, "divergence-renormalization", "rough regime: rate and renormalized limit", _c2_divergence_renormalization),
    Criterion(3, "projection-identity", "sub-span derivative equals projected derivative", _c3_projection_identity),
    Criterion(4, "even-conditioning", "even conditioning degenerates to zero", _c4_even_dichotomy),
    Criterion(5, "kernel-identity", "kernel self-product reproduces the covariance", _c5_kernel_identity),
    Criterion(6, "sampler-correctness", "all samplers reproduce the covariance", _c6_sampler_correctness),
    Criterion(7, "sampler-performance", "spectral sampler speed; dense sampler cap", _c7_sampler_performance),
    Criterion(8, "measure-change", "density weights recentre the drifted process", _c8_girsanov),
    Criterion(9, "mc-vs-exact", "MC conditional quotients match the exact engine", _c9_mc_vs_exact),
    Criterion(10, "annihilating-conditioning", "absolute-value conditioning leaves the drift rate", _c10_annihilating_conditioning),
    Criterion(11, "truncation-counterexample", "atomwise smooth, jointly divergent", _c11_counterexample),
    Criterion(12, "chaos-embedding", "embedded linear equation: residuals, isometry", _c12_chaos_embedding),
    Criterion(13, "determinism", "identical seeds give identical artifacts", _c13_determinism),
)


def run_criterion(crit: Criterion, ctx: SuiteContext) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        outcome = crit.fn(ctx)
    except Exception as exc:  # collected, not fail-fast
        return CriterionResult(crit.cid, crit.key, crit.description, False,
                               False, f"error: {type(exc).__name__}: {exc}",
                               [], time.perf_counter() - t0)
    passed, detail, rows = outcome
    skipped = passed is None
    return CriterionResult(crit.cid, crit.key, crit.description,
                           bool(passed) if not skipped else False, skipped,
                           detail, rows, time.perf_counter() - t0)


def run_suite(ctx: Optional[SuiteContext] = None,
              criteria: Optional[Iterable[int]] = None,
              threads: int = 1) -> list[CriterionResult]:
    """Run the acceptance criteria (all by default); never fail-fast."""
    ctx = ctx or SuiteContext()
    wanted = [c for c in CRITERIA
              if criteria is None or c.cid in set(criteria)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: run_criterion(c, ctx), wanted))
    else:
        results = [run_criterion(c, ctx) for c in wanted]
    return sorted(results, key=lambda r: r.cid)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _render_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return "[" + " ".join(_render_value(float(x)) for x in np.ravel(v)) + "]"
    return str(v)


def _render_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_render_value(r.get(c, "")) for c in cols))
    return "\n".join(lines) + "\n"


def render_report(results: Sequence[CriterionResult]) -> str:
    lines = ["cid,key,status,seconds,detail"]
    for r in results:
        detail = r.detail.replace(",", ";").replace("\n", " ")
        lines.append(f"{r.cid},{r.key},{r.status},{r.elapsed:.3f},{detail}")
    return "\n".join(lines) + "\n"


def report_lines(results: Sequence[CriterionResult]) -> list[str]:
    return [f"[{r.status}] criterion {r.cid:2d} ({r.key}): {r.detail}"
            for r in results]


def suite_passed(results: Sequence[CriterionResult]) -> bool:
    return all(r.passed or r.skipped for r in results)
