"""Stochastic-derivative laboratory for Gaussian and shifted Gaussian processes.

Exact conditional difference quotients on finite spans, classification of
conditioning sigma-fields (differentiating / degenerating / diverging with
a rate), fractional Brownian samplers with density reweighting, and
finite-order chaos processes solving the embedded linear equation.
"""
from ._backend import BACKEND
from .engine import (AtomSpan, EvenFunctionOf, FullGenerators, LinearSpan,
                     MeasurableFunctionOf, QuotientSchedule, Tolerances,
                     Verdict, classify, default_schedule, difference_quotient,
                     parseval_energy, projection_identity_residual,
                     rate_exponent, renormalized_limit, span_of,
                     stochastic_derivative_exact)
from .gaussian import (AffineCombination, CovarianceOracle, FirstChaosVariable,
                       GramSystem, combine, gram_schmidt, increment,
                       inner_product, process_value, project_affine, regress)
from .models import (BasisExpansion, FractionalBrownian, SampledFunction,
                     apply_volterra_operator, fbm_cov, fbm_partial_u,
                     fgn_autocovariance, frac_integral, kernel_normalization,
                     trigonometric_basis, two_atom, volterra_integral_at,
                     volterra_kernel)
from .special import hyp2f1
from .simulate import (DriftSpec, MCDerivative, PathBatch, add_drift,
                       girsanov_weights, mc_conditional_expectation,
                       mc_stochastic_derivative, sample_fbm,
                       sample_fbm_volterra, sample_gaussian_at, uniform_grid)
from .chaos import (ChaosProcess, ChaosVector, OrderKernel, embedding_residual,
                    j_integral_samples, mc_verify_nelson, nelson_derivative,
                    simplex_inner_product, solve_linear_embedding)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
