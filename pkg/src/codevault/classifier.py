"""Two-class probabilistic classifiers and leave-one-out consistency scoring.

Two families, picked by signal variant:

* Gaussian: per-class means with a shared diagonal variance (floored to
  keep it non-singular) and empirical class priors.  Suited to the tiny
  sample counts of a live session.
* Categorical: per-button label frequencies with Laplace smoothing.

``loo_log_score`` is the self-consistency measure of a labeled dataset:
mean held-out log-probability over all leave-one-out folds.  Folds whose
training part does not contain both classes fall back to the uninformed
probability 0.5, as does prediction from a model that saw only one class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .signals import (ButtonPress, MeaningLabel, PointSignal, Signal)

LOG_HALF = math.log(0.5)


class EmptyDatasetError(ValueError):
    pass


class IncompatibleSignalError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    var_floor: float = 1e-6      # ridge floor on the shared variance
    laplace_alpha: float = 1.0   # categorical smoothing
    prob_clip: float = 1e-12     # keeps predicted probabilities inside (0,1)
    # pseudo-count pulling the pooled variance toward the per-dimension
    # total variance of the training set; guards against the catastrophic
    # overconfidence of a 4-6 sample variance estimate in a noise dimension
    var_shrink: float = 0.0


@dataclass(frozen=True)
class LabeledDataset:
    signals: tuple[Signal, ...]
    labels: tuple[MeaningLabel, ...]

    def __post_init__(self):
        if len(self.signals) != len(self.labels):
            raise ValueError("signals and labels must have equal length")
        kinds = {type(s) for s in self.signals}
        if len(kinds) > 1:
            raise ValueError("signals must share one variant")
        if self.signals and isinstance(self.signals[0], PointSignal):
            dims = {len(s.features) for s in self.signals}
            if len(dims) > 1:
                raise ValueError("point signals must share one dimension")

    def __len__(self) -> int:
        return len(self.signals)

    @property
    def is_continuous(self) -> bool:
        return bool(self.signals) and isinstance(self.signals[0], PointSignal)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y): features (n,d) or symbols (n,), plus label indices."""
        y = np.array([l.index for l in self.labels], dtype=np.intp)
        if self.is_continuous:
            X = np.array([s.features for s in self.signals], dtype=float)
        else:
            X = np.array([s.symbol for s in self.signals], dtype=np.intp)
        return X, y


@dataclass(frozen=True)
class GaussianModel:
    means: np.ndarray           # (2, d); rows for absent classes are zero
    var: np.ndarray             # (d,) shared diagonal variance, floored
    priors: np.ndarray          # (2,)
    class_present: tuple[bool, bool]
    config: ClassifierConfig = field(default_factory=ClassifierConfig)

    @property
    def informed(self) -> bool:
        return all(self.class_present)


@dataclass(frozen=True)
class CategoricalModel:
    counts: dict[int, tuple[int, int]]   # symbol -> (count A, count B)
    class_present: tuple[bool, bool]
    config: ClassifierConfig = field(default_factory=ClassifierConfig)

    @property
    def informed(self) -> bool:
        return all(self.class_present)


ClassifierModel = GaussianModel | CategoricalModel


def fit(data: LabeledDataset, config: Optional[ClassifierConfig] = None) -> ClassifierModel:
    """Fit a classifier of the family matching the data's signal variant."""
    if len(data) == 0:
        raise EmptyDatasetError("cannot fit on an empty dataset")
    config = config or ClassifierConfig()
    X, y = data.arrays()
    if data.is_continuous:
        return _fit_gaussian(X, y, config)
    return _fit_categorical(X, y, config)


def _fit_gaussian(X: np.ndarray, y: np.ndarray, config: ClassifierConfig) -> GaussianModel:
    n, d = X.shape
    means = np.zeros((2, d))
    present = [False, False]
    ss_total = np.zeros(d)
    counts = np.zeros(2)
    for c in (0, 1):
        mask = y == c
        counts[c] = mask.sum()
        if counts[c] > 0:
            present[c] = True
            means[c] = X[mask].mean(axis=0)
            ss_total += ((X[mask] - means[c]) ** 2).sum(axis=0)
    var = ss_total / n
    if config.var_shrink > 0:
        grand = X.mean(axis=0)
        total_var = ((X - grand) ** 2).sum(axis=0) / n
        # shrink every dimension toward the same scalar (the mean total
        # variance): a dimension whose spread is small by chance at tiny n
        # must not masquerade as a precise discriminator
        prior_var = total_var.mean()
        var = (ss_total + config.var_shrink * prior_var) / (n + config.var_shrink)
    var = np.maximum(var, config.var_floor)
    priors = counts / n
    return GaussianModel(means, var, priors, (present[0], present[1]), config)


def _fit_categorical(symbols: np.ndarray, y: np.ndarray, config: ClassifierConfig) -> CategoricalModel:
    counts: dict[int, list[int]] = {}
    for s, c in zip(symbols.tolist(), y.tolist()):
        counts.setdefault(s, [0, 0])[c] += 1
    present = (bool((y == 0).any()), bool((y == 1).any()))
    return CategoricalModel({s: (a, b) for s, (a, b) in counts.items()},
                            present, config)


def predict_prob(model: ClassifierModel, signal: Signal) -> float:
    """Probability that ``signal`` carries label A, in (0, 1).

    Models fit on a single class are uninformed and return 0.5.
    """
    if isinstance(model, GaussianModel):
        if not isinstance(signal, PointSignal):
            raise IncompatibleSignalError("Gaussian model expects a point signal")
        if len(signal.features) != model.means.shape[1]:
            raise IncompatibleSignalError("signal dimension mismatch")
        if not model.informed:
            return 0.5
        x = np.asarray(signal.features, dtype=float)
        log_post = _gaussian_log_joint(x[None, None, :], model.means[None],
                                       model.var[None], model.priors[None])[0]
        m = log_post.max()
        p = math.exp(log_post[0] - (m + math.log(np.exp(log_post - m).sum())))
        clip = model.config.prob_clip
        return float(min(max(p, clip), 1.0 - clip))
    if not isinstance(signal, ButtonPress):
        raise IncompatibleSignalError("categorical model expects a button press")
    if not model.informed:
        return 0.5
    a, b = model.counts.get(signal.symbol, (0, 0))
    alpha = model.config.laplace_alpha
    p = (a + alpha) / (a + b + 2 * alpha)
    clip = model.config.prob_clip
    return float(min(max(p, clip), 1.0 - clip))


def _gaussian_log_joint(x, means, var, priors):
    """log p(x, c) for both classes.

    Shapes: x (n,1,d), means (n,2,d), var (n,d), priors (n,2) -> (n,2).
    """
    v = var[:, None, :]
    diff = x - means
    log_lik = -0.5 * (np.log(2.0 * np.pi * v) + diff * diff / v).sum(axis=2)
    with np.errstate(divide="ignore"):
        log_prior = np.where(priors > 0, np.log(np.maximum(priors, 1e-300)), -np.inf)
    return log_lik + log_prior


def loo_log_score(data: LabeledDataset, config: Optional[ClassifierConfig] = None) -> float:
    """Mean leave-one-out log-probability of the dataset's own labels."""
    if len(data) == 0:
        raise EmptyDatasetError("cannot score an empty dataset")
    config = config or ClassifierConfig()
    X, y = data.arrays()
    if data.is_continuous:
        return _gaussian_loo(X, y, config)
    return _categorical_loo(X, y, config)


def _gaussian_loo(X: np.ndarray, y: np.ndarray, config: ClassifierConfig) -> float:
    n, d = X.shape
    if n == 1:
        return LOG_HALF
    onehot = np.zeros((n, 2))
    onehot[np.arange(n), y] = 1.0
    n_c = onehot.sum(axis=0)
    mean_c = np.zeros((2, d))
    ss_c = np.zeros((2, d))
    for c in (0, 1):
        if n_c[c] > 0:
            mean_c[c] = X[y == c].mean(axis=0)
            ss_c[c] = ((X[y == c] - mean_c[c]) ** 2).sum(axis=0)

    # Rank-one downdates of the own-class stats; numerically stable since
    # every subtraction pairs terms of comparable magnitude.
    n_tr = n_c[None, :] - onehot                                   # (n,2)
    informative = (n_tr > 0).all(axis=1)
    denom = np.maximum(n_tr, 1.0)
    own = onehot[:, :, None]
    diff = X[:, None, :] - mean_c[None]                            # (n,2,d)
    mu = mean_c[None] - own * diff / denom[:, :, None]
    ss = ss_c[None] - own * (n_c[None, :] / denom)[:, :, None] * diff * diff
    ss *= (n_tr > 0)[:, :, None]

    pooled = ss.sum(axis=1)                                        # (n,d)
    var = pooled / (n - 1)
    if config.var_shrink > 0:
        gmean = X.mean(axis=0)
        grand = gmean[None] - (X - gmean[None]) / (n - 1)          # (n,d)
        between = (n_tr[:, :, None] * (mu - grand[:, None, :]) ** 2).sum(axis=1)
        prior_var = ((pooled + between) / (n - 1)).mean(axis=1)    # (n,)
        k = config.var_shrink
        var = (pooled + k * prior_var[:, None]) / (n - 1 + k)
    var = np.maximum(var, config.var_floor)
    priors = n_tr / (n - 1)

    log_post = _gaussian_log_joint(X[:, None, :], mu, var, priors)
    m = log_post.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(log_post - m).sum(axis=1))
    p_true = np.exp(log_post[np.arange(n), y] - lse)
    p_true = np.clip(p_true, config.prob_clip, 1.0 - config.prob_clip)
    log_p = np.where(informative, np.log(p_true), LOG_HALF)
    return float(log_p.mean())


def _categorical_loo(symbols: np.ndarray, y: np.ndarray, config: ClassifierConfig) -> float:
    n = len(symbols)
    if n == 1:
        return LOG_HALF
    alpha = config.laplace_alpha
    class_tot = np.bincount(y, minlength=2)
    # counts per (symbol, class) via a dense table over the symbols seen
    uniq, inv = np.unique(symbols, return_inverse=True)
    table = np.zeros((len(uniq), 2))
    np.add.at(table, (inv, y), 1.0)
    same_tr = table[inv, y] - 1.0
    tot_tr = table[inv].sum(axis=1) - 1.0
    informative = (class_tot[y] - 1 > 0) & (class_tot[1 - y] > 0)
    p_true = (same_tr + alpha) / (tot_tr + 2.0 * alpha)
    p_true = np.clip(p_true, config.prob_clip, 1.0 - config.prob_clip)
    log_p = np.where(informative, np.log(p_true), LOG_HALF)
    return float(log_p.mean())


def dataset_from_pairs(pairs: Sequence[tuple[Signal, MeaningLabel]]) -> LabeledDataset:
    signals = tuple(s for s, _ in pairs)
    labels = tuple(l for _, l in pairs)
    return LabeledDataset(signals, labels)
