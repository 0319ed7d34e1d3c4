"""Orbit kernels: compiled extension when available, NumPy/Python fallback.

The hot loops are scalar orbit recursions (millions of sequential steps for
Birkhoff histograms and Lyapunov sums).  A Cython extension implements them
natively; this module provides equivalent pure implementations and selects
the backend at import time.  Set ZOOMTOWER_PURE=1 to force the fallback.

Kernel ids (param meaning):
    0  x -> m*x mod 1 on the circle          (param = m)
    1  tent map on [0,1]                     (param unused)
    2  logistic a*x*(1-x) on [0,1]           (param = a)
    3  degree-two circle map with a neutral fixed point at 0:
       x + 2x^2 below 1/2, glued symmetrically above (param unused)
"""

import os

import numpy as np

try:  # pragma: no cover - exercised only when the extension is built
    from . import _ckernels
except ImportError:
    _ckernels = None

KID_TIMES_M = 0
KID_TENT = 1
KID_LOGISTIC = 2
KID_CIRCLE_NEUTRAL = 3


def compiled_available():
    return _ckernels is not None


def _use_compiled(impl):
    if impl == "pure":
        return False
    if impl == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return True
    return _ckernels is not None and os.environ.get("ZOOMTOWER_PURE") != "1"


def _step_array(kid, a, x):
    if kid == KID_TIMES_M:
        y = a * x
        return y - np.floor(y)
    if kid == KID_TENT:
        return 1.0 - np.abs(1.0 - 2.0 * x)
    if kid == KID_LOGISTIC:
        return a * x * (1.0 - x)
    if kid == KID_CIRCLE_NEUTRAL:
        y = np.where(x < 0.5, x + 2.0 * x * x, x - 2.0 * (1.0 - x) * (1.0 - x))
        return y - np.floor(y)
    raise ValueError(f"unknown kernel id {kid}")


def _abs_deriv_array(kid, a, x):
    if kid == KID_TIMES_M:
        return np.full_like(x, float(a))
    if kid == KID_TENT:
        return np.full_like(x, 2.0)
    if kid == KID_LOGISTIC:
        return np.abs(a * (1.0 - 2.0 * x))
    if kid == KID_CIRCLE_NEUTRAL:
        return np.where(x < 0.5, 1.0 + 4.0 * x, 1.0 + 4.0 * (1.0 - x))
    raise ValueError(f"unknown kernel id {kid}")


def orbit_points(kid, a, x0, n, impl=None):
    """Points x0, f(x0), ..., f^n(x0) as a length n+1 array."""
    if _use_compiled(impl):
        return _ckernels.orbit_points(kid, a, x0, n)
    out = np.empty(n + 1)
    x = float(x0)
    if kid == KID_TIMES_M:
        m = float(a)
        for i in range(n + 1):
            out[i] = x
            x = (m * x) % 1.0
    elif kid == KID_TENT:
        for i in range(n + 1):
            out[i] = x
            x = 1.0 - abs(1.0 - 2.0 * x)
    elif kid == KID_LOGISTIC:
        for i in range(n + 1):
            out[i] = x
            x = a * x * (1.0 - x)
    elif kid == KID_CIRCLE_NEUTRAL:
        for i in range(n + 1):
            out[i] = x
            if x < 0.5:
                x = x + 2.0 * x * x
            else:
                x = x - 2.0 * (1.0 - x) * (1.0 - x)
            x %= 1.0
    else:
        raise ValueError(f"unknown kernel id {kid}")
    return out


def orbit_points_many(kid, a, x0s, n, impl=None):
    """Orbits of many seeds at once; returns an (m, n+1) array."""
    x0s = np.asarray(x0s, dtype=float)
    if _use_compiled(impl):
        return _ckernels.orbit_points_many(kid, a, x0s, n)
    out = np.empty((len(x0s), n + 1))
    x = x0s.copy()
    for j in range(n + 1):
        out[:, j] = x
        if j < n:
            x = _step_array(kid, a, x)
    return out


def log_deriv_sum(kid, a, x0, n, impl=None):
    """Birkhoff sum of log|f'| over the first n orbit points."""
    if _use_compiled(impl):
        return _ckernels.log_deriv_sum(kid, a, x0, n)
    from math import log

    x = float(x0)
    total = 0.0
    for _ in range(n):
        if kid == KID_TIMES_M:
            total += log(a)
            x = (a * x) % 1.0
        elif kid == KID_TENT:
            total += log(2.0)
            x = 1.0 - abs(1.0 - 2.0 * x)
        elif kid == KID_LOGISTIC:
            total += log(abs(a * (1.0 - 2.0 * x)))
            x = a * x * (1.0 - x)
        elif kid == KID_CIRCLE_NEUTRAL:
            total += log(1.0 + 4.0 * x if x < 0.5 else 1.0 + 4.0 * (1.0 - x))
            x = (x + 2.0 * x * x if x < 0.5 else x - 2.0 * (1.0 - x) ** 2) % 1.0
        else:
            raise ValueError(f"unknown kernel id {kid}")
    return total


def histogram_orbit(kid, a, x0, n, nbins, impl=None):
    """Bin counts of f^j(x0), j=1..n over a uniform grid on [0,1)."""
    if _use_compiled(impl):
        return _ckernels.histogram_orbit(kid, a, x0, n, nbins)
    counts = np.zeros(nbins, dtype=np.int64)
    x = float(x0)
    chunk = 1 << 16
    done = 0
    while done < n:
        take = min(chunk, n - done)
        pts = orbit_points(kid, a, x, take, impl="pure")
        x = pts[-1]
        idx = np.minimum((pts[1:] * nbins).astype(np.int64), nbins - 1)
        counts += np.bincount(idx, minlength=nbins)
        done += take
    return counts
