"""Per-hypothesis consistency scoring and the acceptance decision.

One hypothesis per digit.  Every hypothesis labels the shared signal
history through the displayed patterns; each labeling is scored by its
leave-one-out consistency and scores are softmaxed into weights.  A digit
is accepted only once its accumulated evidence clears the threshold,
enough steps have elapsed, and the planner reports it free of
complement/identity ambiguity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import FrozenSet, Optional

import numpy as np

from .classifier import (ClassifierConfig, ClassifierModel, LabeledDataset,
                         fit, loo_log_score)
from .signals import (DisplayPattern, PointSignal, SessionMode, Signal,
                      validate_signal)


class EmptyHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class EngineParams:
    beta: float = 4.0            # softmax temperature on mean LOO scores (display)
    theta: float = 0.95          # acceptance threshold on the decision posterior
    min_steps: int = 12          # no acceptance before this many signals
    decision_beta: float = 1.0   # temperature on *total* (summed) LOO evidence
    min_class_count: int = 2     # both labels attested this often before accepting
    min_mean_prob: float = 0.93  # consistency floor on the winner (continuous only)
    transfer_clip: float = 0.05  # per-step likelihood clamp in the transfer filter
    classifier: ClassifierConfig = field(
        default_factory=lambda: ClassifierConfig(var_shrink=2.0))

    def __post_init__(self):
        if self.beta <= 0 or self.decision_beta <= 0:
            raise ValueError("beta must be positive")
        if not (0.5 < self.theta < 1.0):
            raise ValueError("theta must lie in (0.5, 1)")
        if self.min_steps < 1:
            raise ValueError("min_steps must be >= 1")
        if not (0.5 <= self.min_mean_prob < 1.0):
            raise ValueError("min_mean_prob must lie in [0.5, 1)")


@dataclass(frozen=True)
class EngineState:
    params: EngineParams
    n_symbols: int
    mode: Optional[SessionMode]
    patterns: tuple[DisplayPattern, ...]
    signals: tuple[Signal, ...]
    scores: tuple[float, ...]

    @property
    def steps(self) -> int:
        return len(self.signals)


def new_engine(params: Optional[EngineParams] = None, n_symbols: int = 10,
               mode: Optional[SessionMode] = None) -> EngineState:
    return EngineState(params or EngineParams(), n_symbols, mode, (), (), ())


def hypothesis_dataset(state: EngineState, digit: int) -> LabeledDataset:
    """The shared signals labeled as hypothesis ``digit`` would label them."""
    labels = tuple(p.label_for(digit) for p in state.patterns)
    return LabeledDataset(state.signals, labels)


def ingest(state: EngineState, pattern: DisplayPattern, signal: Signal) -> EngineState:
    """Append one (pattern, signal) step and rescore every hypothesis."""
    if state.mode is not None:
        validate_signal(signal, state.mode)
    patterns = state.patterns + (pattern,)
    signals = state.signals + (signal,)
    scored = replace(state, patterns=patterns, signals=signals)
    cfg = state.params.classifier
    scores = tuple(
        loo_log_score(hypothesis_dataset(scored, d), cfg)
        for d in range(state.n_symbols))
    return replace(scored, scores=scores)


def weights(state: EngineState) -> np.ndarray:
    """softmax(beta * scores); sums to 1."""
    if not state.scores:
        raise EmptyHistoryError("no steps ingested yet")
    z = state.params.beta * np.asarray(state.scores)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def decision_posterior(state: EngineState) -> np.ndarray:
    """softmax(decision_beta * steps * scores): posterior on total evidence.

    Acceptance must weigh the *summed* leave-one-out log-probability, not
    its per-step mean: the mean-score gap a chance-separable labeling of
    a handful of arbitrary signals can open is independent of the step
    count, whereas a genuine user's evidence for the true digit grows
    with every step.  Thresholding total evidence therefore rejects
    random input while accepting consistent users in few steps.
    """
    if not state.scores:
        raise EmptyHistoryError("no steps ingested yet")
    z = state.params.decision_beta * state.steps * np.asarray(state.scores)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def decide(state: EngineState,
           unresolved: FrozenSet[tuple[int, int]]) -> Optional[int]:
    """The accepted digit, or None if the evidence does not yet warrant one.

    Requires: enough steps, max decision posterior >= theta, a unique
    argmax, the argmax digit appearing in no unresolved
    identical-or-complementary pair, and both labels attested at least
    ``min_class_count`` times under the argmax hypothesis.  The
    class-count gate blocks the overfit near-one-class labelings whose
    single hard fold the LOO score excuses at 0.5.

    For continuous signals the winner must additionally be consistent in
    an absolute sense: its geometric-mean held-out probability must reach
    ``min_mean_prob``.  A relative gap alone is not safe evidence —
    arbitrary points admit a linearly separable labeling far too often at
    small n (Cover's bound), but such flukes plateau well below the
    consistency a genuinely clustered user exhibits.  The floor is not
    applied to categorical data, whose Laplace smoothing caps the
    attainable score; there the accumulated-evidence threshold governs.
    """
    if not state.scores or state.steps < state.params.min_steps:
        return None
    w = decision_posterior(state)
    top = int(np.argmax(w))
    if w[top] < state.params.theta:
        return None
    if (w == w[top]).sum() > 1:
        return None
    for a, b in unresolved:
        if top in (a, b):
            return None
    top_labels = [p.label_for(top) for p in state.patterns]
    need = state.params.min_class_count
    if min(sum(1 for l in top_labels if l.index == c) for c in (0, 1)) < need:
        return None
    if (isinstance(state.signals[0], PointSignal)
            and state.scores[top] < math.log(state.params.min_mean_prob)):
        return None
    return top


def learned_classifier(state: EngineState, digit: int) -> ClassifierModel:
    """The decoder implied by hypothesis ``digit`` on the full history."""
    if not state.signals:
        raise EmptyHistoryError("no steps ingested yet")
    return fit(hypothesis_dataset(state, digit), state.params.classifier)
