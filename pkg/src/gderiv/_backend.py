"""Selects the fastest available implementation of each hot kernel.

The compiled extension wins decisively on the scalar-heavy hypergeometric
series; the ordered iterated sums are BLAS-shaped and the vectorised numpy
versions win there (see benchmarks/bench_backends.py), so they stay on the
numpy path even when the extension is built.

Set ``GDERIV_BACKEND=python`` to force the numpy fallbacks everywhere, or
``GDERIV_BACKEND=cython`` to require the extension (ImportError if absent).
"""
from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("GDERIV_BACKEND", "").lower()

_fast = None
if _forced in ("", "cython"):
    try:
        from . import _fastkern as _fast  # type: ignore[attr-defined]
    except ImportError:
        if _forced == "cython":
            raise
        _fast = None

BACKEND = "cython" if _fast is not None else "python"

hyp2f1_series = _fast.hyp2f1_series if _fast is not None \
    else _kernels_py.hyp2f1_series
iterated_sum2 = _kernels_py.iterated_sum2
iterated_sum3 = _kernels_py.iterated_sum3
