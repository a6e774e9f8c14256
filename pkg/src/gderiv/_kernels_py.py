"""Pure-numpy implementations of the hot numerical kernels.

These are the fallbacks used when the compiled extension (``_fastkern``)
is not built. Semantics must match the compiled versions bit-for-bit in
structure (same series, same summation order per element) so that either
backend satisfies the same tolerances.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_MAX_TERMS = 10000
_REL_TOL = 1e-16


def hyp2f1_series(a: float, b: float, c: float, w: np.ndarray) -> np.ndarray:
    """Gauss series sum_n (a)_n (b)_n / ((c)_n n!) w^n for 0 <= w < 1.

    Vectorised over ``w``; iterates until every element's last term is below
    the relative cutoff or the term cap is hit. Returns nan for elements that
    did not converge.
    """
    w = np.asarray(w, dtype=float)
    out = np.ones_like(w)
    term = np.ones_like(w)
    active = np.abs(w) > 0.0
    converged = ~active
    for n in range(_MAX_TERMS):
        if not active.any():
            break
        fac = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        term = np.where(active, term * fac * w, term)
        out = np.where(active, out + term, out)
        done = active & (np.abs(term) <= _REL_TOL * np.abs(out))
        converged |= done
        active &= ~done
        if fac == 0.0:  # terminating series (a or b a non-positive integer)
            converged |= active
            active[:] = False
    out[~converged] = np.nan
    return out


def iterated_sum2(kmat: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """sum_{i>j} kmat[i,j] dw[p,i] dw[p,j] for each path p.

    ``kmat`` must already be strictly lower triangular.
    """
    q = dw @ kmat.T
    return np.einsum("pi,pi->p", q, dw)


def iterated_sum3(ktens: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """sum_{i>j>k} ktens[i,j,k] dw[p,i] dw[p,j] dw[p,k] for each path p.

    ``ktens`` entries outside the strictly decreasing index region are ignored.
    """
    n = dw.shape[1]
    out = np.zeros(dw.shape[0])
    for i in range(2, n):
        m = np.tril(ktens[i, :i, :i], k=-1)
        q = dw[:, :i] @ m.T
        out += np.einsum("pj,pj->p", q, dw[:, :i]) * dw[:, i]
    return out
