"""Truncated signatures of piecewise-linearly embedded sequences.

A sequence (x_1, ..., x_n) in R^e is embedded as the continuous path that is
linear between the knots X((i-1)/(n-1)) = x_i; its signature collects the
iterated integrals indexed by words over the e channels. For a linear segment
the signature is the tensor exponential of the increment, and the signature of
the whole sequence is the left-to-right Chen product over segments.

``signature_oracle`` evaluates single coefficients by direct numerical
integration on a uniform grid. It shares no code with the exponential/Chen
path and exists so the exact computation can be cross-checked.
"""

from __future__ import annotations

import numpy as np

from .tensor_algebra import (
    TruncatedTensor,
    Word,
    _level_offsets,
    feature_count,
    tensor_product,
    unit_tensor,
)


def as_sequence(x) -> np.ndarray:
    """Coerce to an (n, e) float array with n >= 1 and finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"sequence must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence contains non-finite entries")
    return arr


def segment_signature(increment, level: int) -> TruncatedTensor:
    """Tensor exponential of one linear segment.

    The coefficient at a word w of length k is prod_j increment[w_j] / k!.
    """
    inc = np.asarray(increment, dtype=float)
    if inc.ndim != 1 or inc.size < 1:
        raise ValueError(f"increment must be a 1-d vector, got shape {inc.shape}")
    if not np.all(np.isfinite(inc)):
        raise ValueError("increment contains non-finite entries")
    e = inc.size
    coeffs = np.zeros(feature_count(e, level))
    offsets = _level_offsets(e, level)
    coeffs[0] = 1.0
    block = coeffs[0:1]
    for k in range(1, level + 1):
        block = np.outer(block, inc).ravel() / k
        coeffs[offsets[k] : offsets[k + 1]] = block
    return TruncatedTensor(e, level, coeffs)


def signature_of_sequence(x, level: int) -> TruncatedTensor:
    """Truncated signature of the piecewise-linear embedding of ``x``.

    Folds segment exponentials through the Chen product; the level-1 block
    equals x_n - x_1 exactly and a length-1 sequence gives the unit tensor.
    """
    arr = as_sequence(x)
    sig = unit_tensor(arr.shape[1], level)
    for i in range(arr.shape[0] - 1):
        inc = arr[i + 1] - arr[i]
        if np.any(inc):
            sig = tensor_product(sig, segment_signature(inc, level))
    return sig


def signature_oracle(x, word: Word, steps: int = 1000) -> float:
    """Numerical iterated integral of ``x`` at one word.

    Integrates recursively on a uniform grid of ``steps`` intervals with the
    trapezoid rule: I_0 = 1 and I_j(t) = int_0^t I_{j-1}(s) dX_{s, w_j}.
    Converges to the exact coefficient as steps grows.
    """
    if steps < 100:
        raise ValueError(f"steps must be >= 100, got {steps}")
    arr = as_sequence(x)
    word = tuple(word)
    if not word:
        return 1.0
    n, e = arr.shape
    for letter in word:
        if not 1 <= letter <= e:
            raise ValueError(f"letter {letter} outside alphabet [1..{e}]")
    ts = np.linspace(0.0, 1.0, steps + 1)
    knots = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.0])
    grid = np.column_stack([np.interp(ts, knots, arr[:, c]) for c in range(e)])
    integral = np.ones(steps + 1)
    for letter in word:
        dx = np.diff(grid[:, letter - 1])
        increments = 0.5 * (integral[:-1] + integral[1:]) * dx
        integral = np.concatenate(([0.0], np.cumsum(increments)))
    return float(integral[-1])
