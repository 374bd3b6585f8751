"""Kernel backend selection.

The compiled extension is used when it imports and the caller's class fits
its 64-member mask; otherwise the pure-Python twin runs. Set
``STABLELAB_PURE_PYTHON=1`` to force the fallback everywhere.
"""

import os

from stablelab import _pykernels

_c = None
if not os.environ.get("STABLELAB_PURE_PYTHON"):
    try:
        from stablelab import _ckernels as _c
    except ImportError:  # extension not built
        _c = None

BACKEND = "compiled" if _c is not None else "python"
_fast = _c if _c is not None else _pykernels


def _fits(nmembers, npoints):
    return _c is not None and nmembers <= 64 and npoints <= 63


def littlestone(cols, nmembers):
    if _fits(nmembers, len(cols)):
        return _c.littlestone(cols, nmembers)
    return _pykernels.littlestone(cols, nmembers)


def vc_dimension(members, npoints):
    if _fits(len(members), npoints):
        return _c.vc_dimension(members, npoints)
    return _pykernels.vc_dimension(members, npoints)


def threshold_dimension(cols, nmembers, npoints, upper):
    if _fits(nmembers, npoints):
        return _c.threshold_dimension(cols, nmembers, npoints, upper)
    return _pykernels.threshold_dimension(cols, nmembers, npoints, upper)


def split_counts(counts, sizes, seed):
    return _fast.split_counts(counts, sizes, seed)


def hypergeometric_draws(good, bad, sample, seed, size):
    return _fast.hypergeometric_draws(good, bad, sample, seed, size)
