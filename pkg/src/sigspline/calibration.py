"""Maximum-likelihood calibration of the signature spline flow.

The Monte Carlo objective is the mean negative log bin-probability over a
dataset of sequences. It separates over coordinates, and per coordinate it is
a softmax regression on the (parameter-independent) signature features of the
masked conditioning paths: convex, with closed-form gradient

    (p - c) outer y      per sample,

p the softmax probabilities, c the one-hot bin indicator, y the feature
vector, and Hessian (diag(p) - p p^T) kron (y y^T), positive semidefinite.
Features are computed once up front; every optimizer iteration is then a pure
linear-algebra pass. Fitting is full-batch gradient descent (or Newton for
small problems), with early stopping on a held-out split.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .augmentations import conditioning_embedding
from .model import SigSplineModel, sliding_windows, to_unit
from .signature import as_sequence, signature_of_sequence
from .spline import bin_indicator
from .tensor_algebra import feature_count

HESSIAN_SIZE_LIMIT = 10_000
MAX_RESTARTS = 5


class DivergenceError(RuntimeError):
    """Raised when the objective stays non-finite after repeated step halving."""


@dataclass
class TrainConfig:
    """Hyperparameters for one calibration run.

    level/bins/window describe the model being fitted; the remaining fields
    drive the optimizer. The learning rate, iteration cap, and split fraction
    are practical defaults, not protocol constants.
    """

    level: int = 2
    bins: int = 64
    window: int | None = None
    learning_rate: float = 0.1
    max_iters: int = 5000
    patience: int = 32
    reg_kind: str = "none"
    reg_lambda: float = 0.0
    optimizer: str = "gradient_descent"
    train_fraction: float = 0.8
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.reg_lambda < 0:
            raise ValueError(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.max_iters < 1 or self.patience < 1:
            raise ValueError("max_iters and patience must be >= 1")
        if self.reg_kind not in ("none", "l1", "l2"):
            raise ValueError(f"reg_kind must be none|l1|l2, got {self.reg_kind!r}")
        if self.optimizer not in ("gradient_descent", "newton"):
            raise ValueError(f"optimizer must be gradient_descent|newton, got {self.optimizer!r}")
        if self.optimizer == "newton" and self.reg_kind == "l1":
            raise ValueError("newton is not available with the non-smooth l1 penalty")
        if self.level < 0 or self.bins < 1:
            raise ValueError(f"invalid level={self.level} or bins={self.bins}")
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1 or None, got {self.window}")


@dataclass
class FitReport:
    """Traces and outcome of one fit; serializable via :func:`report_to_dict`."""

    seed: int
    n_train: int
    n_test: int
    train_nll: list[list[float]]
    test_nll: list[list[float]]
    stopped_iteration: list[int]
    final_train_nll: float
    final_test_nll: float
    wall_clock_seconds: float
    config: dict


@dataclass
class MultiSeedResult:
    reports: list[FitReport]
    models: list[SigSplineModel]
    summary: dict
    best_index: int

    @property
    def best_model(self) -> SigSplineModel:
        return self.models[self.best_index]


def report_to_dict(report: FitReport, include_timing: bool = False) -> dict:
    # wall clock is excluded by default so written artifacts are run-stable
    doc = asdict(report)
    if not include_timing:
        doc.pop("wall_clock_seconds")
    return doc


# ---------------------------------------------------------------------------
# designs: parameter-independent features per (sample, coordinate)


def _truncate(seq: np.ndarray, window: int | None) -> np.ndarray:
    if window is not None and seq.shape[0] > window + 1:
        return seq[-(window + 1) :]
    return seq


def build_design(dataset, i: int, level: int, bins: int, window: int | None = None):
    """Feature matrix Y (M x K) and 0-based bin indices for coordinate i."""
    rows = []
    cbins = np.empty(len(dataset), dtype=int)
    for j, seq in enumerate(dataset):
        arr = _truncate(as_sequence(seq), window)
        if arr.shape[0] < 2:
            raise ValueError(f"sequence {j} has fewer than 2 rows")
        rows.append(signature_of_sequence(conditioning_embedding(arr, i), level).coeffs)
        cbins[j] = bin_indicator(arr[-1, i - 1], bins) - 1
    return np.asarray(rows), cbins


def _unit_dataset(model: SigSplineModel, dataset) -> list[np.ndarray]:
    if not dataset:
        raise ValueError("empty dataset")
    return [to_unit(model, seq) for seq in dataset]


# ---------------------------------------------------------------------------
# objective, gradient, Hessian


def _nll_and_grad(u: np.ndarray, feats: np.ndarray, cbin: np.ndarray, want_grad: bool = True):
    # overflow to inf/nan is expected during divergent steps; the fitting
    # loop's restart guard consumes it
    with np.errstate(over="ignore", invalid="ignore"):
        logits = feats @ u.T
        peak = logits.max(axis=1, keepdims=True)
        expd = np.exp(logits - peak)
        norm = expd.sum(axis=1)
        idx = np.arange(len(cbin))
        nll = float(np.mean(peak[:, 0] + np.log(norm) - logits[idx, cbin]))
        if not want_grad:
            return nll, None
        probs = expd / norm[:, None]
        probs[idx, cbin] -= 1.0
        return nll, probs.T @ feats / len(cbin)


def _penalty(u: np.ndarray, kind: str, lam: float) -> float:
    if kind == "l1":
        return lam * float(np.abs(u).sum())
    if kind == "l2":
        return lam * float((u * u).sum())
    return 0.0


def _penalty_grad(u: np.ndarray, kind: str, lam: float) -> np.ndarray:
    if kind == "l1":
        return lam * np.sign(u)  # subgradient, sign(0) = 0
    if kind == "l2":
        return 2.0 * lam * u
    return np.zeros_like(u)


def loss(model: SigSplineModel, dataset) -> float:
    """Mean negative log bin-probability, summed over coordinates."""
    unit = _unit_dataset(model, dataset)
    total = 0.0
    for i in range(1, model.d + 1):
        feats, cbin = build_design(unit, i, model.level, model.bins, model.window)
        total += _nll_and_grad(model.params[i - 1], feats, cbin, want_grad=False)[0]
    return total


def gradient(model: SigSplineModel, dataset) -> list[np.ndarray]:
    """Analytic gradient of :func:`loss`, one bins x K array per coordinate."""
    unit = _unit_dataset(model, dataset)
    grads = []
    for i in range(1, model.d + 1):
        feats, cbin = build_design(unit, i, model.level, model.bins, model.window)
        grads.append(_nll_and_grad(model.params[i - 1], feats, cbin)[1])
    return grads


def regularized_loss(model: SigSplineModel, dataset, reg_lambda: float, reg_kind: str) -> float:
    """:func:`loss` plus lambda * (l1 norm or squared l2 norm) of all parameters."""
    if reg_kind not in ("none", "l1", "l2"):
        raise ValueError(f"reg_kind must be none|l1|l2, got {reg_kind!r}")
    return loss(model, dataset) + sum(_penalty(u, reg_kind, reg_lambda) for u in model.params)


def _hessian_from_design(u: np.ndarray, feats: np.ndarray, chunk: int = 512) -> np.ndarray:
    n_bins, n_feat = u.shape
    size = n_bins * n_feat
    hess = np.zeros((size, size))
    diag_blocks = np.zeros((n_bins, n_feat, n_feat))
    for start in range(0, feats.shape[0], chunk):
        fs = feats[start : start + chunk]
        logits = fs @ u.T
        expd = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs = expd / expd.sum(axis=1, keepdims=True)
        weighted = probs[:, :, None] * fs[:, None, :]
        flat = weighted.reshape(fs.shape[0], size)
        hess -= flat.T @ flat
        diag_blocks += np.einsum("ja,jb,je->abe", probs, fs, fs)
    for a in range(n_bins):
        hess[a * n_feat : (a + 1) * n_feat, a * n_feat : (a + 1) * n_feat] += diag_blocks[a]
    return hess / feats.shape[0]


def hessian(model: SigSplineModel, dataset, i: int) -> np.ndarray:
    """Sample-averaged Hessian of coordinate i's objective.

    Row/column order follows params[i-1].ravel(): bin-major, feature-minor.
    """
    size = model.bins * model.n_features
    if size > HESSIAN_SIZE_LIMIT:
        raise ValueError(f"Hessian of size {size}^2 exceeds the {HESSIAN_SIZE_LIMIT} guard")
    unit = _unit_dataset(model, dataset)
    feats, _ = build_design(unit, i, model.level, model.bins, model.window)
    return _hessian_from_design(model.params[i - 1], feats)


# ---------------------------------------------------------------------------
# fitting


def _split_indices(n: int, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    perm = rng.permutation(n)
    n_train = int(round(fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _fit_coordinate(feats, cbin, train_idx, test_idx, cfg: TrainConfig):
    """Optimize one coordinate's matrix; returns (best params, traces, stop)."""
    n_bins, n_feat = cfg.bins, feats.shape[1]
    u = np.zeros((n_bins, n_feat))
    ftr, ctr = feats[train_idx], cbin[train_idx]
    fte, cte = feats[test_idx], cbin[test_idx]

    lr = cfg.learning_rate
    restarts = 0
    last_finite = u.copy()
    best_test, best_u = np.inf, u.copy()
    prev_test = np.inf
    streak = 0
    train_trace: list[float] = []
    test_trace: list[float] = []

    it = 0
    while it < cfg.max_iters:
        train_nll, grad = _nll_and_grad(u, ftr, ctr)
        test_nll = _nll_and_grad(u, fte, cte, want_grad=False)[0]
        if not (np.isfinite(train_nll) and np.isfinite(test_nll)):
            restarts += 1
            if restarts > MAX_RESTARTS:
                raise DivergenceError(
                    f"objective non-finite at iteration {it} after {MAX_RESTARTS} step halvings"
                )
            lr /= 2.0
            u = last_finite.copy()
            continue
        last_finite = u.copy()
        train_trace.append(train_nll)
        test_trace.append(test_nll)
        if test_nll < best_test:
            best_test, best_u = test_nll, u.copy()
        streak = streak + 1 if test_nll > prev_test else 0
        prev_test = test_nll
        it += 1
        if streak >= cfg.patience:
            break
        step_grad = grad + _penalty_grad(u, cfg.reg_kind, cfg.reg_lambda)
        if cfg.optimizer == "newton":
            hess = _hessian_from_design(u, ftr)
            if cfg.reg_kind == "l2":
                hess[np.diag_indices_from(hess)] += 2.0 * cfg.reg_lambda
            try:
                step = np.linalg.solve(hess, step_grad.ravel())
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, step_grad.ravel(), rcond=None)[0]
            u = u - step.reshape(n_bins, n_feat)
            if np.linalg.norm(step_grad) < 1e-13:
                break
        else:
            u = u - lr * step_grad
    return best_u, train_trace, test_trace, len(train_trace)


def _prepare(dataset, cfg: TrainConfig):
    """Rescale to [0,1] and precompute per-coordinate designs (seed-free)."""
    arrs = [as_sequence(seq) for seq in dataset]
    if not arrs:
        raise ValueError("empty dataset")
    d = arrs[0].shape[1]
    for j, arr in enumerate(arrs):
        if arr.shape[1] != d:
            raise ValueError(f"sequence {j} has {arr.shape[1]} channels, expected {d}")
        if arr.shape[0] < 2:
            raise ValueError(f"sequence {j} has fewer than 2 rows")
    stacked = np.vstack(arrs)
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    flat = np.flatnonzero(hi <= lo)
    if flat.size:
        raise ValueError(f"channel {flat[0] + 1} is constant; cannot rescale to [0,1]")
    unit = [(arr - lo) / (hi - lo) for arr in arrs]
    designs = [
        build_design(unit, i, cfg.level, cfg.bins, cfg.window) for i in range(1, d + 1)
    ]
    return d, lo, hi, designs


def _fit_from_designs(d, lo, hi, designs, cfg: TrainConfig):
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.rng_seed)
    train_idx, test_idx = _split_indices(designs[0][0].shape[0], cfg.train_fraction, rng)
    params, train_traces, test_traces, stops = [], [], [], []
    final_train = final_test = 0.0
    for feats, cbin in designs:
        u, tr, te, stop = _fit_coordinate(feats, cbin, train_idx, test_idx, cfg)
        params.append(u)
        train_traces.append(tr)
        test_traces.append(te)
        stops.append(stop)
        final_train += _nll_and_grad(u, feats[train_idx], cbin[train_idx], want_grad=False)[0]
        final_test += _nll_and_grad(u, feats[test_idx], cbin[test_idx], want_grad=False)[0]
    model = SigSplineModel(
        d=d, level=cfg.level, bins=cfg.bins, params=params,
        window=cfg.window, scale_min=lo, scale_max=hi,
    )
    report = FitReport(
        seed=cfg.rng_seed,
        n_train=len(train_idx),
        n_test=len(test_idx),
        train_nll=train_traces,
        test_nll=test_traces,
        stopped_iteration=stops,
        final_train_nll=final_train,
        final_test_nll=final_test,
        wall_clock_seconds=time.perf_counter() - start,
        config=asdict(cfg),
    )
    return model, report


def fit(dataset, config: TrainConfig):
    """Calibrate a model on raw sequences; returns (model, report).

    Each coordinate is fitted independently from zero initialization, with
    early stopping once the held-out NLL worsens ``patience`` times in a row;
    the best held-out iterate is kept. Deterministic given config.rng_seed.
    """
    d, lo, hi, designs = _prepare(dataset, config)
    return _fit_from_designs(d, lo, hi, designs, config)


def multi_seed_fit(dataset, config: TrainConfig, n_seeds: int = 10) -> MultiSeedResult:
    """Repeat :func:`fit` with seeds rng_seed..rng_seed+n_seeds-1.

    Seeds vary only the train/test split; signature features are computed
    once and shared. Summary holds mean/std of the final train and test NLL.
    """
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    d, lo, hi, designs = _prepare(dataset, config)
    reports, models = [], []
    for s in range(n_seeds):
        cfg = TrainConfig(**{**asdict(config), "rng_seed": config.rng_seed + s})
        model, report = _fit_from_designs(d, lo, hi, designs, cfg)
        models.append(model)
        reports.append(report)
    test = np.array([r.final_test_nll for r in reports])
    train = np.array([r.final_train_nll for r in reports])
    summary = {
        "n_seeds": n_seeds,
        "test_nll_mean": float(test.mean()),
        "test_nll_std": float(test.std(ddof=1)) if n_seeds > 1 else 0.0,
        "train_nll_mean": float(train.mean()),
        "train_nll_std": float(train.std(ddof=1)) if n_seeds > 1 else 0.0,
        "parameter_count": d * config.bins * feature_count(1 + d, config.level),
    }
    return MultiSeedResult(reports, models, summary, int(np.argmin(test)))


def windows_from_series(series, window: int) -> list[np.ndarray]:
    """Length window+1 training sequences from one long series."""
    arr = as_sequence(series)
    if arr.shape[0] < window + 2:
        raise ValueError(
            f"series of {arr.shape[0]} rows too short for window {window} (needs >= {window + 2})"
        )
    return sliding_windows(arr, window + 1)
