"""Piecewise-linear CDF on [0,1] parametrised by positive bin increments.

The unit interval is split into N equal bins with knots at k/N. A vector of
positive increments delta (summing to 1, typically a softmax output) defines
the strictly increasing CDF that rises by delta[k] across bin k, linearly
within each bin. The induced density is piecewise constant, N * delta[k] on
bin k, and the CDF inverts in closed form, which is what makes
inverse-transform sampling exact.

Bins are half-open [(k-1)/N, k/N) with 1-based index k; x = 1 belongs to bin
N. In the inverse, a u lying exactly on a cumulative boundary resolves to the
lower bin's right endpoint.
"""

from __future__ import annotations

import numpy as np


def softmax(z) -> np.ndarray:
    """Positive vector summing to 1; computed with max-subtraction."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 1:
        raise ValueError(f"expected a 1-d vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("softmax input contains non-finite entries")
    shifted = np.exp(z - z.max())
    # floor at the smallest normal double so increments stay strictly
    # positive and their logs finite
    shifted = np.maximum(shifted, np.finfo(float).tiny)
    return shifted / shifted.sum()


def _check_delta(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 1 or delta.size < 1:
        raise ValueError(f"increments must be a 1-d vector, got shape {delta.shape}")
    if np.any(delta <= 0):
        raise ValueError("increments must be strictly positive")
    return delta


def _check_unit(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError(f"{name} outside [0, 1]")
    return x


def bin_indicator(x, n_bins: int):
    """1-based index of the half-open bin containing x; x = 1 maps to bin N."""
    x = _check_unit(x, "x")
    k = np.minimum(np.floor(x * n_bins).astype(int) + 1, n_bins)
    return int(k) if np.isscalar(k) or k.ndim == 0 else k


def spline_cdf(x, delta):
    """Evaluate the piecewise-linear CDF at x in [0, 1]."""
    delta = _check_delta(delta)
    x = _check_unit(x, "x")
    n = delta.size
    k = np.minimum(np.floor(x * n).astype(int), n - 1)
    cum = np.concatenate(([0.0], np.cumsum(delta)))
    out = cum[k] + (x - k / n) * delta[k] * n
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def spline_inverse(u, delta):
    """Exact inverse of :func:`spline_cdf`; boundary ties go to the lower bin."""
    delta = _check_delta(delta)
    u = _check_unit(u, "u")
    n = delta.size
    bounds = np.concatenate(([0.0], np.cumsum(delta)))
    bounds[-1] = 1.0
    k = np.clip(np.searchsorted(bounds, u, side="left") - 1, 0, n - 1)
    interior = np.clip(k / n + (u - bounds[k]) / (n * delta[k]), 0.0, 1.0)
    out = np.where(u <= 0.0, 0.0, np.where(u >= 1.0, 1.0, interior))
    return float(out) if out.ndim == 0 else out


def spline_density(x, delta):
    """Piecewise-constant density N * delta[bin(x)]."""
    delta = _check_delta(delta)
    x = _check_unit(x, "x")
    n = delta.size
    k = np.minimum(np.floor(x * n).astype(int), n - 1)
    out = n * delta[k]
    return float(out) if out.ndim == 0 else out


def spline_log_density(x, delta):
    """ln N + ln delta[bin(x)] — the expansion the likelihood terms use."""
    delta = _check_delta(delta)
    x = _check_unit(x, "x")
    n = delta.size
    k = np.minimum(np.floor(x * n).astype(int), n - 1)
    out = np.log(n) + np.log(delta[k])
    return float(out) if out.ndim == 0 else out
