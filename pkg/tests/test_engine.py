import numpy as np
import pytest

from gderiv.engine import (EvenFunctionOf, FullGenerators,
                           LinearSpan, MeasurableFunctionOf, QuotientSchedule,
                           Tolerances, classify, default_schedule,
                           difference_quotient, parseval_energy,
                           projection_identity_residual, rate_exponent,
                           renormalized_limit, span_of,
                           stochastic_derivative_exact)
from gderiv.errors import (DegenerateVariable, DomainError, PreconditionFailed,
                           SingularSpan)
from gderiv.gaussian import process_value
from gderiv.models import (BasisExpansion, FractionalBrownian,
                           trigonometric_basis, two_atom)


def fwd(t, **kw):
    return QuotientSchedule(t / 16, mode="forward", **kw)


# ---------------------------------------------------------------------------
# difference quotients
# ---------------------------------------------------------------------------

def test_span_quotient_matches_regression_display():
    # oracle: the closed-form single-variable regression coefficient
    H, t, h = 0.7, 0.5, 0.01
    combo = difference_quotient(FractionalBrownian(H), t, h, span_of(t))
    expected = ((t + h) ** (2 * H) - t ** (2 * H) - abs(h) ** (2 * H)) \
        / (2 * t ** (2 * H) * h)
    assert combo.coeffs[0] == pytest.approx(expected, rel=1e-12)
    assert combo.constant == pytest.approx(0.0, abs=1e-15)


def test_forward_quotient_vanishes_at_half():
    combo = difference_quotient(FractionalBrownian(0.5), 0.5, 0.01,
                                span_of(0.5))
    assert combo.coeffs[0] == pytest.approx(0.0, abs=1e-14)


def test_backward_quotient_at_half_is_inverse_time():
    combo = difference_quotient(FractionalBrownian(0.5), 0.5, -0.01,
                                span_of(0.5))
    assert combo.coeffs[0] == pytest.approx(2.0, rel=1e-12)


def test_even_conditioning_keeps_only_the_deterministic_part():
    combo = difference_quotient(FractionalBrownian(0.3), 0.5, 0.01,
                                EvenFunctionOf(process_value(0.5)))
    assert combo.coeffs.size == 0
    assert combo.constant == 0.0


def test_atom_quotients_are_coefficient_quotients():
    m = two_atom(lambda u: u, lambda u: abs(u - 0.5) ** 0.3,
                 d1=lambda u: 1.0, d2=None)
    t, h = 0.4, 0.01
    combo = difference_quotient(m, t, h, FullGenerators())
    d1 = 1.0
    d2 = (abs(t + h - 0.5) ** 0.3 - abs(t - 0.5) ** 0.3) / h
    np.testing.assert_allclose(combo.coeffs, [d1, d2], rtol=1e-12)


def test_measurable_conditioning_is_not_exact():
    with pytest.raises(DomainError):
        difference_quotient(FractionalBrownian(0.5), 0.5, 0.01,
                            MeasurableFunctionOf(process_value(0.5), abs))


# ---------------------------------------------------------------------------
# exact derivative
# ---------------------------------------------------------------------------

def test_exact_derivative_smooth_diagonal():
    d = stochastic_derivative_exact(FractionalBrownian(0.7), 0.5,
                                    process_value(0.5))
    assert d.coeffs[0] == pytest.approx(1.4, rel=1e-12)


def test_exact_derivative_undefined_on_rough_diagonal():
    assert stochastic_derivative_exact(FractionalBrownian(0.3), 1.0,
                                       process_value(1.0)) is None


def test_exact_derivative_off_diagonal_rough():
    # oracle: finite difference of the covariance plus the 1-d regression
    H, t, s = 0.3, 0.5, 0.2
    step = 1e-7
    from gderiv.models import fbm_cov
    fd = (fbm_cov(H, t + step, s) - fbm_cov(H, t - step, s)) / (2 * step)
    expected = fd / fbm_cov(H, s, s)
    d = stochastic_derivative_exact(FractionalBrownian(H), t, process_value(s))
    assert d.coeffs[0] == pytest.approx(expected, rel=1e-6)
    assert d.coeffs[0] == pytest.approx(-0.0897 / 0.2 ** 0.6, abs=2e-4)


def test_exact_derivative_rejects_zero_variance():
    m = FractionalBrownian(0.7)
    with pytest.raises(DegenerateVariable):
        stochastic_derivative_exact(m, 0.5, process_value(0.5, weight=0.0))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_smooth_regime_two_sided_derivative():
    v = classify(FractionalBrownian(0.7), 0.5, span_of(0.5),
                 default_schedule(0.5, "two_sided"))
    assert v.kind == "differentiates"
    assert v.derivative.coeffs[0] == pytest.approx(1.4, abs=1e-6)


def test_rough_regime_diverges_with_rate():
    v = classify(FractionalBrownian(0.3, horizon=2.0), 1.0, span_of(1.0),
                 fwd(1.0))
    assert v.kind == "diverges"
    assert v.slope == pytest.approx(-0.4, abs=0.02)
    assert v.r2 > 0.99


def test_even_conditioning_degenerates_to_zero():
    v = classify(FractionalBrownian(0.3, horizon=2.0), 1.0,
                 EvenFunctionOf(process_value(1.0)), fwd(1.0))
    assert v.kind == "degenerates"
    assert v.constant == 0.0


def test_half_forward_degenerates_backward_differentiates():
    m = FractionalBrownian(0.5)
    vf = classify(m, 0.5, span_of(0.5), fwd(0.5))
    vb = classify(m, 0.5, span_of(0.5), QuotientSchedule(0.5 / 16,
                                                         mode="backward"))
    vt = classify(m, 0.5, span_of(0.5), QuotientSchedule(0.5 / 16,
                                                         mode="two_sided"))
    assert vf.kind == "degenerates" and vf.constant == 0.0
    assert vb.kind == "differentiates"
    assert vb.derivative.coeffs[0] == pytest.approx(2.0, abs=1e-9)
    assert vt.kind == "inconclusive"
    assert set(vt.sides) == {"forward", "backward"}


def test_singular_span_propagates():
    with pytest.raises(SingularSpan):
        classify(FractionalBrownian(0.7), 0.5,
                 LinearSpan((process_value(0.5), process_value(0.5))),
                 fwd(0.5))


def test_schedule_validation():
    with pytest.raises(DomainError):
        classify(FractionalBrownian(0.7), 0.99, span_of(0.99),
                 QuotientSchedule(0.5, mode="forward"))
    with pytest.raises(DomainError):
        QuotientSchedule(0.1, ratio=1.5)
    with pytest.raises(DomainError):
        QuotientSchedule(0.1, steps=4)


def test_evidence_rows_cover_the_schedule():
    sched = fwd(0.5, steps=12)
    v = classify(FractionalBrownian(0.7), 0.5, span_of(0.5), sched)
    assert len(v.evidence) == 12
    hs = [r["h"] for r in v.evidence]
    assert hs[0] == pytest.approx(0.5 / 16)
    assert hs[-1] == pytest.approx(0.5 / 16 * 0.5 ** 11)


# ---------------------------------------------------------------------------
# renormalized limits
# ---------------------------------------------------------------------------

def test_renormalized_limit_rough_diagonal():
    m = FractionalBrownian(0.3, horizon=2.0)
    combo = renormalized_limit(m, 1.0, span_of(1.0), alpha=0.6, schedule=fwd(1.0))
    assert combo.coeffs[0] == pytest.approx(-0.5, abs=1e-6)


def test_alpha_one_consistent_with_classify():
    m = FractionalBrownian(0.7)
    combo = renormalized_limit(m, 0.5, span_of(0.5), alpha=1.0,
                               schedule=fwd(0.5))
    v = classify(m, 0.5, span_of(0.5), fwd(0.5))
    assert combo.coeffs[0] == pytest.approx(v.derivative.coeffs[0], abs=1e-9)


def test_under_normalization_washes_out_smooth_quotients():
    m = FractionalBrownian(0.7)
    combo = renormalized_limit(m, 0.5, span_of(0.5), alpha=0.6,
                               schedule=fwd(0.5))
    assert combo is not None
    assert abs(combo.coeffs[0]) < 1e-6


def test_two_sided_renormalization_rejected():
    m = FractionalBrownian(0.7)
    with pytest.raises(DomainError):
        renormalized_limit(m, 0.5, span_of(0.5), alpha=0.6,
                           schedule=QuotientSchedule(0.03, mode="two_sided"))


def test_bad_alpha_rejected():
    with pytest.raises(DomainError):
        renormalized_limit(FractionalBrownian(0.7), 0.5, span_of(0.5), 1.5)


# ---------------------------------------------------------------------------
# rate estimation
# ---------------------------------------------------------------------------

def test_rate_exponent_rough_regime():
    slope, _, r2, excluded = rate_exponent(
        FractionalBrownian(0.3, horizon=2.0), 1.0, span_of(1.0), fwd(1.0))
    assert slope == pytest.approx(-0.4, abs=0.02)
    assert r2 > 0.999
    assert excluded == []


def test_rate_exponent_smooth_regime_is_flat():
    slope, _, _, _ = rate_exponent(FractionalBrownian(0.7), 0.5,
                                   span_of(0.5), fwd(0.5))
    assert slope == pytest.approx(0.0, abs=0.02)


def test_rate_exponent_flags_vanishing_norms():
    slope, intercept, r2, excluded = rate_exponent(
        FractionalBrownian(0.5), 0.5, span_of(0.5), fwd(0.5))
    assert slope is None and intercept is None and r2 is None
    assert len(excluded) == 20


# ---------------------------------------------------------------------------
# projection identity
# ---------------------------------------------------------------------------

def test_projection_residual_trivial_on_equal_spans():
    r = projection_identity_residual(FractionalBrownian(0.7), 0.5,
                                     span_of(0.3, 0.8), span_of(0.3, 0.8))
    assert r < 1e-12


@pytest.mark.parametrize("hurst,big,sub", [
    (0.7, (0.3, 0.8), (0.3,)),
    (0.3, (0.2, 0.9), (0.9,)),
])
def test_projection_residual_small(hurst, big, sub):
    r = projection_identity_residual(FractionalBrownian(hurst), 0.5,
                                     span_of(*big), span_of(*sub))
    assert r < 1e-9


def test_projection_requires_differentiating_big_span():
    m = FractionalBrownian(0.3, horizon=2.0)
    with pytest.raises(PreconditionFailed) as err:
        projection_identity_residual(
            m, 1.0, span_of(1.0), span_of(1.0),
            schedule=fwd(1.0))
    assert err.value.detail.kind == "diverges"


# ---------------------------------------------------------------------------
# structural properties
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("hurst,t,s", [
    (0.7, 0.5, 0.5), (0.7, 0.5, 0.2), (0.3, 0.5, 0.2),
    (0.3, 0.5, 0.5), (0.65, 0.4, 0.4), (0.8, 0.3, 0.3), (0.45, 0.6, 0.6),
])
def test_single_variable_dichotomy(hurst, t, s):
    # the span verdict and the closed-form derivative agree on existence;
    # indices very close to 1/2 are excluded (the h^(2H-1) mode decays too
    # slowly to certify in double precision; classify says inconclusive)
    m = FractionalBrownian(hurst)
    v = classify(m, t, span_of(s), QuotientSchedule(
        min(t, 1 - t) / 16, mode="two_sided"))
    exact = stochastic_derivative_exact(m, t, process_value(s))
    assert v.differentiates == (exact is not None)
    if exact is not None:
        assert v.derivative.coeffs[0] == pytest.approx(exact.coeffs[0],
                                                       abs=1e-6)


@pytest.mark.parametrize("hurst", [0.55, 0.58])
def test_near_half_smooth_regime_never_misclassifies(hurst):
    # at the decision boundary the engine may refuse to certify, but it must
    # not report divergence or a wrong coefficient
    m = FractionalBrownian(hurst)
    v = classify(m, 0.4, span_of(0.4), QuotientSchedule(0.4 / 16,
                                                        mode="two_sided"))
    assert v.kind in ("differentiates", "inconclusive")
    if v.kind == "differentiates":
        assert v.derivative.coeffs[0] == pytest.approx(hurst / 0.4, abs=1e-4)


def test_subspans_of_differentiating_spans_differentiate():
    m = FractionalBrownian(0.7)
    sched = QuotientSchedule(0.5 / 16, mode="two_sided")
    big = classify(m, 0.5, span_of(0.3, 0.8), sched)
    assert big.differentiates
    for sub_time in (0.3, 0.8):
        sub = classify(m, 0.5, span_of(sub_time), sched)
        assert sub.differentiates
    assert projection_identity_residual(m, 0.5, span_of(0.3, 0.8),
                                        span_of(0.3), sched) < 1e-9


def test_diverging_span_has_degenerating_even_subfield():
    m = FractionalBrownian(0.3, horizon=2.0)
    v_span = classify(m, 1.0, span_of(1.0), fwd(1.0))
    v_even = classify(m, 1.0, EvenFunctionOf(process_value(1.0)), fwd(1.0))
    assert v_span.kind == "diverges"
    assert v_even.kind == "degenerates" and v_even.constant == 0.0


@pytest.mark.parametrize("hurst", [0.3, 0.7])
def test_finite_span_differentiates_iff_every_member_does(hurst):
    m = FractionalBrownian(hurst)
    t = 0.5
    sched = QuotientSchedule(t / 16, mode="two_sided")
    times = (0.2, 0.8)
    members = [classify(m, t, span_of(u), sched).differentiates
               for u in times]
    joint = classify(m, t, span_of(*times), sched).differentiates
    assert joint == all(members)
    # and with the evaluation point inside the span, rough models lose it
    times_bad = (0.2, t)
    members = [classify(m, t, span_of(u), sched).differentiates
               for u in times_bad]
    joint = classify(m, t, span_of(*times_bad), sched).differentiates
    assert joint == all(members)


# ---------------------------------------------------------------------------
# truncated quotient energy
# ---------------------------------------------------------------------------

def test_energy_of_linear_coefficient_is_one():
    m = BasisExpansion(functions=(lambda t: t,), derivatives=(lambda t: 1.0,),
                       bound=1.0)
    assert parseval_energy(m, 0.5, 2.0 ** -8) == pytest.approx(1.0)


def test_energy_monotone_in_truncation():
    m = trigonometric_basis(64)
    vals = [parseval_energy(m, 0.5, 2.0 ** -8, n_terms=n)
            for n in (1, 9, 33, 129)]
    assert vals == sorted(vals)


def test_energy_approaches_inverse_step():
    m = trigonometric_basis(4096)
    e = parseval_energy(m, 0.5, 2.0 ** -8)
    assert e == pytest.approx(256.0, rel=0.01)
