"""The compiled kernels and the numpy fallbacks must agree exactly."""
import numpy as np
import pytest

from gderiv import _backend, _kernels_py

compiled = pytest.importorskip("gderiv._fastkern",
                               reason="compiled backend not built")


def test_series_agreement():
    rng = np.random.default_rng(0)
    w = rng.uniform(0.0, 0.95, 500)
    a, b, c = 0.2, -0.2, 1.2
    np.testing.assert_allclose(compiled.hyp2f1_series(a, b, c, w),
                               _kernels_py.hyp2f1_series(a, b, c, w),
                               rtol=1e-14)


def test_series_nonconvergence_marker():
    # w extremely close to 1 exhausts the term cap in both implementations
    w = np.array([1.0 - 1e-9])
    assert np.isnan(compiled.hyp2f1_series(0.3, 0.4, 0.9, w)[0])
    assert np.isnan(_kernels_py.hyp2f1_series(0.3, 0.4, 0.9, w)[0])


def test_ordered_sums_agreement():
    rng = np.random.default_rng(1)
    n, paths = 40, 300
    dw = rng.standard_normal((paths, n)) * 0.1
    k2 = np.tril(rng.standard_normal((n, n)), k=-1)
    np.testing.assert_allclose(compiled.iterated_sum2(k2, dw),
                               _kernels_py.iterated_sum2(k2, dw),
                               rtol=1e-12, atol=1e-14)
    k3 = rng.standard_normal((n, n, n))
    np.testing.assert_allclose(compiled.iterated_sum3(k3, dw),
                               _kernels_py.iterated_sum3(k3, dw),
                               rtol=1e-12, atol=1e-14)


def test_ordered_sum2_brute_force():
    rng = np.random.default_rng(2)
    n, paths = 12, 5
    dw = rng.standard_normal((paths, n))
    k2 = np.tril(rng.standard_normal((n, n)), k=-1)
    expected = np.zeros(paths)
    for p in range(paths):
        for i in range(n):
            for j in range(i):
                expected[p] += k2[i, j] * dw[p, i] * dw[p, j]
    np.testing.assert_allclose(_backend.iterated_sum2(k2, dw), expected,
                               rtol=1e-12)


def test_ordered_sum3_brute_force():
    rng = np.random.default_rng(3)
    n, paths = 9, 4
    dw = rng.standard_normal((paths, n))
    k3 = rng.standard_normal((n, n, n))
    expected = np.zeros(paths)
    for p in range(paths):
        for i in range(n):
            for j in range(i):
                for l in range(j):
                    expected[p] += k3[i, j, l] * dw[p, i] * dw[p, j] * dw[p, l]
    np.testing.assert_allclose(_backend.iterated_sum3(k3, dw), expected,
                               rtol=1e-12)
