"""Shared helpers: seeded trial construction and the refit LOO oracle."""
from __future__ import annotations

import math

import numpy as np
import pytest

from codevault.classifier import (LOG_HALF, ClassifierConfig, dataset_from_pairs,
                                  fit, predict_prob)
from codevault.classifier import _gaussian_log_joint
from codevault.session import Level, SessionConfig
from codevault.signals import ButtonPress, MeaningLabel, PointSignal


def trial_setup(seed: int, level: Level = Level.UNKNOWN_CONTINUOUS,
                stream: int = 0, **config_kwargs):
    """Deterministic (SessionConfig, user RNG) pair for one trial."""
    ss = np.random.SeedSequence([12345, stream, seed])
    s_seed, u_seed = ss.spawn(2)
    code_rng = np.random.Generator(np.random.PCG64(s_seed))
    code = tuple(int(x) for x in code_rng.integers(0, 10, 4))
    config = SessionConfig(level=level, code=code,
                           seed=int(s_seed.generate_state(1)[0]),
                           **config_kwargs)
    return config, np.random.Generator(np.random.PCG64(u_seed))


def refit_loo_oracle(data, config: ClassifierConfig | None = None) -> float:
    """Brute-force LOO: refit from scratch per fold, average log-probability.

    The held-out label's log-probability is taken directly from the fold
    model's log-joint (not via ``1 - predict_prob``, whose subtraction
    loses precision exactly when one class dominates).
    """
    config = config or ClassifierConfig()
    n = len(data)
    if n == 1:
        return LOG_HALF
    total = 0.0
    for i in range(n):
        rest = [(s, l) for j, (s, l) in
                enumerate(zip(data.signals, data.labels)) if j != i]
        train = dataset_from_pairs(rest)
        if len(set(train.labels)) < 2:
            total += LOG_HALF
            continue
        model = fit(train, config)
        held = data.signals[i]
        if isinstance(held, PointSignal):
            x = np.asarray(held.features, dtype=float)
            lp = _gaussian_log_joint(x[None, None, :], model.means[None],
                                     model.var[None], model.priors[None])[0]
            m = lp.max()
            lse = m + math.log(np.exp(lp - m).sum())
            p = math.exp(lp[data.labels[i].index] - lse)
        else:
            p = predict_prob(model, held)
            if data.labels[i] is MeaningLabel.B:
                p = 1.0 - p
        p = min(max(p, config.prob_clip), 1.0 - config.prob_clip)
        total += math.log(p)
    return total / n


def random_dataset(rng: np.random.Generator, continuous: bool = True,
                   max_n: int = 12):
    n = int(rng.integers(2, max_n + 1))
    if continuous:
        d = int(rng.integers(1, 4))
        signals = tuple(PointSignal(tuple(rng.normal(size=d))) for _ in range(n))
    else:
        signals = tuple(ButtonPress(int(rng.integers(0, 2))) for _ in range(n))
    labels = tuple(MeaningLabel.A if b else MeaningLabel.B
                   for b in rng.integers(0, 2, n))
    return dataset_from_pairs(list(zip(signals, labels)))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
