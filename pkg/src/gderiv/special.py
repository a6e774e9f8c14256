"""Gauss hypergeometric function on the half-line z <= 0.

Only the region needed by the Volterra kernel is supported: the kernel
evaluates F(a, b; c; 1 - t/s) with 0 < s < t, so z ranges over (-inf, 0].
Two convergent rearrangements cover it:

* moderate z: the Pfaff map w = z/(z-1) sends [-1, 0] into [0, 1/2] and the
  series converges geometrically;
* large -z: the connection formula at infinity reduces to two series in
  1/z in (-1, 0), provided a - b is not an integer.

When a - b is an integer the Pfaff route is used for all z; it still
converges (w < 1) but may need many terms, and a DomainError is raised if
the term cap is hit before the relative cutoff.
"""
from __future__ import annotations

from math import gamma

import numpy as np

from ._backend import hyp2f1_series
from .errors import DomainError

# Pfaff maps z=-2 to w=2/3, inversion to 1/z=-1/2; both geometric at the cut
_INVERSION_CUT = -2.0


def hyp2f1(a: float, b: float, c: float, z) -> float | np.ndarray:
    """F(a, b; c; z) for z <= 0, accurate to ~1e-12 relative.

    Scalar or array ``z``. F(0, b; c; z) = 1 exactly, and F(a, b; c; 0) = 1.
    """
    if c <= 0.0 and c == round(c):
        raise DomainError(f"c={c} is a non-positive integer")
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if np.any(z_arr > 0.0):
        raise DomainError("only z <= 0 is supported")
    out = np.empty_like(z_arr)
    if a == 0.0 or b == 0.0:
        out[:] = 1.0
        return float(out[0]) if scalar else out

    near = z_arr >= _INVERSION_CUT
    far = ~near
    if near.any():
        zn = z_arr[near]
        w = zn / (zn - 1.0)
        out[near] = (1.0 - zn) ** (-a) * hyp2f1_series(a, c - b, c, w)
    if far.any():
        zf = z_arr[far]
        amb = a - b
        if abs(amb - round(amb)) < 1e-8:
            # degenerate connection formula; fall back to Pfaff (slow near w->1)
            w = zf / (zf - 1.0)
            out[far] = (1.0 - zf) ** (-a) * hyp2f1_series(a, c - b, c, w)
        else:
            iz = 1.0 / zf
            ca = gamma(c) * gamma(b - a) / (gamma(b) * gamma(c - a))
            cb = gamma(c) * gamma(a - b) / (gamma(a) * gamma(c - b))
            fa = hyp2f1_series(a, 1.0 - c + a, 1.0 - b + a, iz)
            fb = hyp2f1_series(b, 1.0 - c + b, 1.0 - a + b, iz)
            out[far] = ca * (-zf) ** (-a) * fa + cb * (-zf) ** (-b) * fb
    if np.any(~np.isfinite(out)):
        raise DomainError(
            f"hyp2f1({a}, {b}; {c}; z) did not converge within the term cap"
        )
    return float(out[0]) if scalar else out
