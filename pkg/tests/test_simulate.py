import numpy as np
import pytest
from scipy.integrate import quad

from gderiv.errors import (ContractError, DomainError, EstimatorError,
                           ResolutionError)
from gderiv.models import fbm_cov, volterra_kernel
from gderiv.simulate import (DriftSpec, add_drift, girsanov_weights,
                             mc_conditional_expectation,
                             mc_stochastic_derivative, sample_fbm,
                             sample_fbm_volterra, sample_gaussian_at,
                             uniform_grid)

GRID = uniform_grid(1.0, 64)
ONES = lambda s: np.ones_like(np.asarray(s, dtype=float))


def _dev_se(x, target):
    return (x.mean() - target) / (x.std(ddof=1) / np.sqrt(x.size))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("method", ["cholesky", "circulant"])
@pytest.mark.parametrize("hurst", [0.3, 0.5, 0.7])
def test_sampler_covariance(method, hurst):
    batch = sample_fbm(hurst, GRID, 50_000, seed=101, method=method)
    for s, t in [(0.25, 0.75), (0.5, 0.5)]:
        prod = batch.value_at(s) * batch.value_at(t)
        assert abs(_dev_se(prod, fbm_cov(hurst, s, t))) < 3.5


def test_standard_motion_has_uncorrelated_increments():
    batch = sample_fbm(0.5, GRID, 50_000, seed=7, method="circulant")
    inc = np.diff(batch.values, axis=1)
    prod = inc[:, 3] * inc[:, 4]
    assert abs(_dev_se(prod, 0.0)) < 3.5
    var_dev = _dev_se(inc[:, 3] ** 2, GRID[1])
    assert abs(var_dev) < 3.5


def test_same_seed_is_bitwise_identical():
    a = sample_fbm(0.7, GRID, 3000, seed=5, method="circulant")
    b = sample_fbm(0.7, GRID, 3000, seed=5, method="circulant")
    assert np.array_equal(a.values, b.values)


def test_chunking_does_not_depend_on_batch_size():
    # the first paths of a larger batch replicate the smaller batch exactly
    small = sample_fbm(0.7, GRID, 100, seed=5, method="cholesky")
    large = sample_fbm(0.7, GRID, 300, seed=5, method="cholesky")
    assert np.array_equal(small.values, large.values[:100])


def test_streams_are_independent():
    a = sample_fbm(0.7, GRID, 50_000, seed=5, stream=0, method="circulant")
    b = sample_fbm(0.7, GRID, 50_000, seed=5, stream=1, method="circulant")
    assert not np.array_equal(a.values, b.values)
    prod = a.value_at(0.5) * b.value_at(0.5)
    assert abs(_dev_se(prod, 0.0)) < 3.5


def test_cholesky_node_cap():
    with pytest.raises(ResolutionError):
        sample_fbm(0.5, uniform_grid(1.0, 8192), 1, seed=0, method="cholesky")


def test_nonuniform_grid_rejected():
    bad = np.array([0.0, 0.1, 0.3, 0.35])
    with pytest.raises(DomainError):
        sample_fbm(0.5, bad, 10, seed=0)


# ---------------------------------------------------------------------------
# volterra construction
# ---------------------------------------------------------------------------

def test_volterra_is_cumsum_at_half():
    batch = sample_fbm_volterra(0.5, GRID, 50, seed=3)
    w = np.concatenate([np.zeros((50, 1)),
                        np.cumsum(batch.w_increments, axis=1)], axis=1)
    np.testing.assert_allclose(batch.values, w, atol=1e-12)


@pytest.mark.parametrize("hurst", [0.3, 0.7])
def test_volterra_covariance(hurst):
    batch = sample_fbm_volterra(hurst, GRID, 50_000, seed=31)
    prod = batch.value_at(0.25) * batch.value_at(0.75)
    assert abs(_dev_se(prod, fbm_cov(hurst, 0.25, 0.75))) < 3.5


def test_volterra_bias_shrinks_with_oversampling():
    # deterministic discrete covariance against the exact value
    hurst, s, t = 0.7, 0.5, 1.0
    errs = []
    for oversample in (1, 4, 16):
        n = 64 * oversample
        dt = 1.0 / n
        mids = (np.arange(n) + 0.5) * dt
        ks = volterra_kernel(hurst, s, mids)
        kt = volterra_kernel(hurst, t, mids)
        errs.append(abs(float(np.sum(ks * kt)) * dt - fbm_cov(hurst, s, t)))
    assert errs == sorted(errs, reverse=True)


def test_volterra_increments_aggregate_fine_panels():
    batch = sample_fbm_volterra(0.7, GRID, 200, seed=9)
    assert batch.w_increments.shape == (200, 64)
    # increments are exact standard Wiener increments
    var_dev = _dev_se(batch.w_increments[:, :10].ravel() ** 2, GRID[1])
    assert abs(var_dev) < 4.0


def test_volterra_needs_enough_steps():
    with pytest.raises(ResolutionError):
        sample_fbm_volterra(0.7, uniform_grid(1.0, 16), 10, seed=0)


# ---------------------------------------------------------------------------
# drift and weights
# ---------------------------------------------------------------------------

def test_zero_drift_is_pure_shift():
    base = sample_fbm(0.7, GRID, 100, seed=11)
    shifted = add_drift(base, None, x0=2.5)
    np.testing.assert_allclose(shifted.values, base.values + 2.5)


def test_standard_drift_mean_is_time():
    drift = DriftSpec(a=ONES, H=0.5)
    m = drift.mean_at(np.array([0.25, 0.5, 1.0]))
    np.testing.assert_allclose(m, [0.25, 0.5, 1.0], atol=1e-6)
    batch = add_drift(sample_fbm(0.5, GRID, 50_000, seed=13), drift)
    dev = _dev_se(batch.value_at(0.5), 0.5)
    assert abs(dev) < 3.5


@pytest.mark.parametrize("hurst", [0.3, 0.7])
def test_drift_mean_matches_kernel_quadrature(hurst):
    drift = DriftSpec(a=ONES, H=hurst)
    target, _ = quad(lambda u: volterra_kernel(hurst, 0.5, u), 0, 0.5,
                     limit=400)
    assert drift.mean_at(0.5)[0] == pytest.approx(target, abs=1e-3)


def test_weights_are_unit_for_zero_integrand():
    drift = DriftSpec(a=lambda s: np.zeros_like(np.asarray(s, float)), H=0.7)
    batch = sample_fbm_volterra(0.7, GRID, 100, seed=17)
    eta = girsanov_weights(batch, drift)
    np.testing.assert_allclose(eta, 1.0)


def test_weight_mean_is_one():
    drift = DriftSpec(a=ONES, H=0.7)
    batch = sample_fbm_volterra(0.7, GRID, 50_000, seed=19)
    eta = girsanov_weights(batch, drift)
    assert abs(_dev_se(eta, 1.0)) < 3.5


def test_weights_need_increments():
    drift = DriftSpec(a=ONES, H=0.7)
    batch = sample_fbm(0.7, GRID, 100, seed=21)
    with pytest.raises(ContractError):
        girsanov_weights(batch, drift)


def test_reweighting_recentres_the_drifted_process():
    hurst = 0.7
    drift = DriftSpec(a=ONES, H=hurst)
    z = add_drift(sample_fbm_volterra(hurst, uniform_grid(1.0, 128), 50_000,
                                      seed=23), drift)
    eta = girsanov_weights(z, drift)
    raw = z.value_at(0.5) * z.value_at(0.75)
    target = fbm_cov(hurst, 0.5, 0.75)
    assert abs(_dev_se(eta * raw, target)) < 3.5
    assert abs(_dev_se(raw, target)) > 3.5


def test_drift_integrand_must_be_bounded():
    with pytest.raises(DomainError):
        DriftSpec(a=lambda s: 1.0 / np.asarray(s, float), H=0.7).mean_at(0.5)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def test_linear_estimator_recovers_gaussian_slope():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(20_000)
    x = 0.7 * y + rng.standard_normal(20_000)
    fit = mc_conditional_expectation(x, y, "linear")
    assert abs(fit.slope - 0.7) < 3.0 * fit.slope_se


def test_kernel_estimator_matches_analytic_conditional():
    rng = np.random.default_rng(1)
    y = rng.standard_normal(40_000)
    x = y ** 2
    fit = mc_conditional_expectation(x, y, "kernel")
    for q in (-1.0, 0.0, 1.0):
        pred = float(fit.predict(np.array([q]))[0])
        se = float(fit.stderr(np.array([q]))[0])
        # smoothing bias: E[y^2 | y ~ q] spread over one bandwidth
        assert abs(pred - q ** 2) < 3.0 * se + 2.0 * fit.bandwidth ** 2 \
            + 2.0 * fit.bandwidth * abs(q)


def test_independent_response_is_flat():
    rng = np.random.default_rng(2)
    y = rng.standard_normal(20_000)
    x = 1.5 + rng.standard_normal(20_000)
    fit = mc_conditional_expectation(x, y, "linear")
    assert abs(fit.slope) < 3.0 * fit.slope_se
    q = np.array([0.0])
    assert abs(float(fit.predict(q)[0]) - 1.5) < 3.0 * float(fit.stderr(q)[0])


def test_degenerate_conditioning_rejected():
    x = np.random.default_rng(3).standard_normal(2000)
    with pytest.raises(EstimatorError):
        mc_conditional_expectation(x, np.ones(2000), "linear")


def test_small_samples_rejected():
    rng = np.random.default_rng(4)
    with pytest.raises(EstimatorError):
        mc_conditional_expectation(rng.standard_normal(100),
                                   rng.standard_normal(100), "linear")


def test_exact_joint_sampler_hits_covariance():
    times = np.array([0.2, 0.5, 0.9])
    draws = sample_gaussian_at(times, lambda s, t: fbm_cov(0.7, s, t),
                               50_000, seed=29)
    prod = draws[:, 0] * draws[:, 2]
    assert abs(_dev_se(prod, fbm_cov(0.7, 0.2, 0.9))) < 3.5


def test_linear_estimator_matches_exact_regression():
    # the empirical conditional slope on a Gaussian pair must agree with the
    # exact Gram-system regression coefficient
    from gderiv.gaussian import GramSystem, process_value, regress
    from gderiv.models import FractionalBrownian

    hurst, s, t = 0.7, 0.25, 0.75
    batch = sample_fbm(hurst, GRID, 50_000, seed=37)
    fit = mc_conditional_expectation(batch.value_at(t), batch.value_at(s),
                                     "linear")
    oracle = FractionalBrownian(hurst).as_oracle()
    span = GramSystem([process_value(s)], oracle)
    exact = regress(process_value(t), span).coeffs[0]
    assert abs(fit.slope - exact) <= 3.0 * fit.slope_se


def test_csv_export_layout(tmp_path):
    from gderiv import batchio

    batch = sample_fbm_volterra(0.7, uniform_grid(1.0, 32), 3, seed=41)
    drift = DriftSpec(a=ONES, H=0.7)
    shifted = add_drift(batch, drift, x0=1.0)
    path = tmp_path / "batch.csv"
    batchio.write_csv(shifted, path, eta=np.array([1.0, 2.0, 3.0]))
    lines = path.read_text().splitlines()
    assert lines[0] == "path_id,t,W,B,Z,eta"
    assert len(lines) == 1 + 3 * 33
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 0.0
    assert float(first[2]) == 0.0  # W starts at zero
    assert float(first[3]) == 0.0  # centered B starts at zero
    assert float(first[4]) == 1.0  # Z starts at x0


def test_cross_method_covariance_agreement():
    # same law, different constructions: two-sample discrepancy is pure noise
    hurst, s, t = 0.7, 0.25, 0.75
    a = sample_fbm(hurst, GRID, 50_000, seed=43, method="cholesky")
    b = sample_fbm(hurst, GRID, 50_000, seed=44, method="circulant")
    pa = a.value_at(s) * a.value_at(t)
    pb = b.value_at(s) * b.value_at(t)
    se = np.sqrt(pa.var(ddof=1) / pa.size + pb.var(ddof=1) / pb.size)
    assert abs(pa.mean() - pb.mean()) < 3.5 * se


def test_mc_derivative_smoke():
    drift = DriftSpec(a=ONES, H=0.7)
    res = mc_stochastic_derivative(0.7, drift, 0.5, 0.5, "value",
                                   [0.02, 0.01], 20_000, alpha=1.0, seed=31)
    assert res.estimates.shape == (2, 3)
    assert np.all(res.stderrs > 0)
    mu = drift.mean_derivative(0.5)
    exact = mu + 1.4 * res.queries
    assert np.all(np.abs(res.estimates[-1] - exact)
                  <= 5.0 * res.stderrs[-1] + 0.05)


def test_mc_renormalized_derivative_rough_regime():
    # H < 1/2 with the compensating exponent alpha = 2H: per h the exact
    # conditional slope is (cov(t+h,t) - cov(t,t)) / (var * h^(2H)), tending
    # to -1/(2 t^(2H)); the MC estimates must track the finite-h values and
    # the drift contribution washes out
    hurst, t, alpha = 0.3, 0.5, 0.6
    drift = DriftSpec(a=ONES, H=hurst)
    hs = [0.04, 0.02, 0.01]
    res = mc_stochastic_derivative(hurst, drift, t, t, "value", hs,
                                   100_000, alpha=alpha, seed=47)
    var_t = fbm_cov(hurst, t, t)
    for k, h in enumerate(hs):
        slope_h = (fbm_cov(hurst, t + h, t) - var_t) / (var_t * h ** alpha)
        drift_h = (drift.mean_at(t + h)[0] - drift.mean_at(t)[0]) / h ** alpha
        exact = drift_h + slope_h * res.queries
        assert np.all(np.abs(res.estimates[k] - exact)
                      <= 3.5 * res.stderrs[k])
    # and the finite-h slopes approach the renormalized-limit coefficient
    from gderiv.engine import QuotientSchedule, renormalized_limit, span_of
    from gderiv.models import FractionalBrownian
    combo = renormalized_limit(FractionalBrownian(hurst), t, span_of(t),
                               alpha, QuotientSchedule(t / 16, mode="forward"))
    limit = combo.coeffs[0]
    assert limit == pytest.approx(-1.0 / (2 * t ** (2 * hurst)), abs=1e-6)
    gaps = [abs((fbm_cov(hurst, t + h, t) - var_t) / (var_t * h ** alpha)
                - limit) for h in hs]
    assert gaps == sorted(gaps, reverse=True)
