"""The signature spline flow: conditional densities and sampling.

Each data coordinate i gets an N x K matrix of linear functionals on the
truncated signature of the conditioning path. The path fed to the signature
is the history with the candidate next observation appended, passed through
``conditioning_embedding`` so that the candidate's coordinates >= i are
hidden. Softmax of the N functional values gives the bin increments of a
piecewise-linear conditional CDF; chaining the d conditionals triangularly
yields the joint density and an exact inverse-transform sampler.

Model-facing sequences live in [0,1]^d. The model optionally carries a
per-channel min/max affine rescaling fitted on training data; ``to_unit`` /
``from_unit`` convert raw data, and out-of-range raw values are clamped
just inside (0,1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .augmentations import conditioning_embedding
from .signature import as_sequence, signature_of_sequence
from .spline import bin_indicator, softmax, spline_inverse
from .tensor_algebra import feature_count

CLAMP_EPS = 1e-6

MODEL_FORMAT = "sigspline-model-v1"


def parameter_count(d: int, level: int, bins: int) -> int:
    """Total parameters: d coordinate matrices of shape bins x f(1+d, level)."""
    return d * bins * feature_count(1 + d, level)


@dataclass
class SigSplineModel:
    """Coordinate-wise spline-CDF parameters plus preprocessing state.

    params[i-1] is the bins x K matrix for coordinate i, with
    K = feature_count(1+d, level). window limits conditioning to the last
    ``window`` observations (None = full history). scale_min/scale_max hold
    the per-channel affine rescaling of raw data onto [0,1]; both None means
    inputs are already unit-scaled.
    """

    d: int
    level: int
    bins: int
    params: list[np.ndarray] = field(repr=False)
    window: int | None = None
    scale_min: np.ndarray | None = None
    scale_max: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 1 or self.level < 0 or self.bins < 1:
            raise ValueError(f"invalid hyperparameters d={self.d}, L={self.level}, N={self.bins}")
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1 or None, got {self.window}")
        k = feature_count(1 + self.d, self.level)
        params = [np.asarray(u, dtype=float) for u in self.params]
        if len(params) != self.d:
            raise ValueError(f"expected {self.d} parameter matrices, got {len(params)}")
        for i, u in enumerate(params, start=1):
            if u.shape != (self.bins, k):
                raise ValueError(
                    f"coordinate {i} parameters must be {self.bins}x{k}, got {u.shape}"
                )
            if not np.all(np.isfinite(u)):
                raise ValueError(f"coordinate {i} parameters contain non-finite entries")
        self.params = params
        if (self.scale_min is None) != (self.scale_max is None):
            raise ValueError("scale_min and scale_max must be set together")
        if self.scale_min is not None:
            self.scale_min = np.asarray(self.scale_min, dtype=float).reshape(self.d)
            self.scale_max = np.asarray(self.scale_max, dtype=float).reshape(self.d)
            if np.any(self.scale_max <= self.scale_min):
                raise ValueError("scale_max must exceed scale_min per channel")

    @property
    def n_features(self) -> int:
        return feature_count(1 + self.d, self.level)

    def copy(self) -> "SigSplineModel":
        return replace(self, params=[u.copy() for u in self.params])


def zero_model(d: int, level: int, bins: int, window: int | None = None) -> SigSplineModel:
    """Model with all-zero functionals: every conditional is uniform."""
    k = feature_count(1 + d, level)
    return SigSplineModel(d, level, bins, [np.zeros((bins, k)) for _ in range(d)], window)


def to_unit(model: SigSplineModel, x) -> np.ndarray:
    """Map raw data onto [0,1]^d with the model's per-channel affine state.

    Values outside the fitted range land at CLAMP_EPS / 1 - CLAMP_EPS.
    """
    arr = as_sequence(x)
    if model.scale_min is None:
        return arr
    z = (arr - model.scale_min) / (model.scale_max - model.scale_min)
    return np.where(z < 0.0, CLAMP_EPS, np.where(z > 1.0, 1.0 - CLAMP_EPS, z))


def from_unit(model: SigSplineModel, x) -> np.ndarray:
    """Inverse of :func:`to_unit` on in-range values."""
    arr = as_sequence(x)
    if model.scale_min is None:
        return arr
    return model.scale_min + arr * (model.scale_max - model.scale_min)


def feature_map(x, i: int, params_i: np.ndarray, level: int) -> np.ndarray:
    """N functional values of the masked-path signature for coordinate i.

    ``x`` must have >= 2 rows with the candidate next observation last; its
    coordinates >= i never influence the result.
    """
    params_i = np.asarray(params_i, dtype=float)
    sig = signature_of_sequence(conditioning_embedding(x, i), level)
    if params_i.ndim != 2 or params_i.shape[1] != sig.coeffs.size:
        raise ValueError(
            f"parameter matrix must be N x {sig.coeffs.size}, got {params_i.shape}"
        )
    return params_i @ sig.coeffs


def _window_history(model: SigSplineModel, history: np.ndarray) -> np.ndarray:
    if model.window is not None and history.shape[0] > model.window:
        return history[-model.window :]
    return history


def conditional_increments(history, next_partial, i: int, model: SigSplineModel) -> np.ndarray:
    """Bin increments of coordinate i's conditional CDF.

    ``next_partial`` supplies the candidate observation's coordinates < i;
    the rest of the candidate row is filled from the last history row and is
    masked away regardless.
    """
    hist = as_sequence(history)
    if hist.shape[1] != model.d:
        raise ValueError(f"history has {hist.shape[1]} channels, model expects {model.d}")
    if not 1 <= i <= model.d:
        raise ValueError(f"coordinate {i} outside [1..{model.d}]")
    hist = _window_history(model, hist)
    candidate = hist[-1].copy()
    partial = np.asarray(next_partial, dtype=float).ravel()
    candidate[: i - 1] = partial[: i - 1]
    path = np.vstack([hist, candidate])
    return softmax(feature_map(path, i, model.params[i - 1], model.level))


def log_likelihood(model: SigSplineModel, x) -> float:
    """Log-density of the last row of ``x`` given the preceding rows."""
    arr = as_sequence(x)
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 rows (history + observation), got {arr.shape[0]}")
    history, target = arr[:-1], arr[-1]
    total = model.d * np.log(model.bins)
    for i in range(1, model.d + 1):
        delta = conditional_increments(history, target, i, model)
        total += np.log(delta[bin_indicator(target[i - 1], model.bins) - 1])
    return float(total)


def sample_step(model: SigSplineModel, history, u) -> np.ndarray:
    """One inverse-transform draw: x_i = F_i^{-1}(u_i | history, x_{<i})."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size != model.d:
        raise ValueError(f"u must have {model.d} entries, got {u.size}")
    drawn = np.empty(model.d)
    for i in range(1, model.d + 1):
        delta = conditional_increments(history, drawn, i, model)
        drawn[i - 1] = spline_inverse(u[i - 1], delta)
    return drawn


def extend_path(model: SigSplineModel, history: np.ndarray, horizon: int, rng) -> np.ndarray:
    """Append ``horizon`` sampled rows to ``history``, drawing uniforms from ``rng``."""
    path = as_sequence(history)
    for _ in range(horizon):
        nxt = sample_step(model, path, rng.random(model.d))
        path = np.vstack([path, nxt])
    return path


def generate(model: SigSplineModel, seed_history, horizon: int, rng_seed) -> np.ndarray:
    """Sample ``horizon`` steps after ``seed_history``; returns the full path.

    Draws come from numpy's PCG64 generator seeded with ``rng_seed``, so runs
    with equal seeds are bit-identical.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    history = as_sequence(seed_history)
    if history.shape[1] != model.d:
        raise ValueError(f"history has {history.shape[1]} channels, model expects {model.d}")
    return extend_path(model, history, horizon, np.random.default_rng(rng_seed))


def sliding_windows(x, length: int) -> list[np.ndarray]:
    """All contiguous windows of ``length`` rows, oldest first."""
    arr = as_sequence(x)
    if length < 1 or length > arr.shape[0]:
        raise ValueError(f"window length {length} invalid for {arr.shape[0]} rows")
    return [arr[s : s + length].copy() for s in range(arr.shape[0] - length + 1)]


def model_to_dict(model: SigSplineModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "d": model.d,
        "level": model.level,
        "bins": model.bins,
        "window": model.window,
        "scale_min": None if model.scale_min is None else model.scale_min.tolist(),
        "scale_max": None if model.scale_max is None else model.scale_max.tolist(),
        "coefficients": [u.tolist() for u in model.params],
    }


def model_from_dict(doc: dict) -> SigSplineModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unrecognized model document format {doc.get('format')!r}")
    return SigSplineModel(
        d=int(doc["d"]),
        level=int(doc["level"]),
        bins=int(doc["bins"]),
        params=[np.asarray(u, dtype=float) for u in doc["coefficients"]],
        window=None if doc["window"] is None else int(doc["window"]),
        scale_min=None if doc["scale_min"] is None else np.asarray(doc["scale_min"]),
        scale_max=None if doc["scale_max"] is None else np.asarray(doc["scale_max"]),
    )


def save_model(model: SigSplineModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> SigSplineModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
