"""Display-pattern planning for hypothesis disambiguation.

Two digits stay indistinguishable as long as their label sequences are
identical or exactly complementary (a global label swap leaves every
consistency score unchanged).  The planner greedily picks the next
pattern: push every pair of label sequences away from both equality and
complementarity, and among equally separating patterns balance the
weight mass across the two labels.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import FrozenSet, Optional, Sequence

import numpy as np

from .signals import DisplayPattern, MeaningLabel

_BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class PlannerState:
    n_symbols: int
    steps: int
    sequences: tuple[int, ...]      # per-digit label history, bit t set = B at step t
    plausible: frozenset[int]


def new_planner(n_symbols: int = 10,
                plausible: Optional[frozenset[int]] = None) -> PlannerState:
    if plausible is None:
        plausible = frozenset(range(n_symbols))
    if not plausible:
        raise ValueError("plausible set must be non-empty")
    return PlannerState(n_symbols, 0, (0,) * n_symbols, plausible)


def identifiability(ps: PlannerState) -> FrozenSet[tuple[int, int]]:
    """Unordered digit pairs with identical or complementary sequences."""
    full = (1 << ps.steps) - 1
    pairs = []
    for a, b in itertools.combinations(range(ps.n_symbols), 2):
        sa, sb = ps.sequences[a], ps.sequences[b]
        if sa == sb or sa == (sb ^ full):
            pairs.append((a, b))
    return frozenset(pairs)


def record_pattern(ps: PlannerState, pattern: DisplayPattern) -> PlannerState:
    """Append each digit's label under ``pattern`` to its sequence."""
    if pattern.n_symbols != ps.n_symbols:
        raise ValueError("pattern does not cover the symbol set")
    seqs = tuple(
        seq | (1 << ps.steps) if pattern.labels[d] is MeaningLabel.B else seq
        for d, seq in enumerate(ps.sequences))
    return replace(ps, steps=ps.steps + 1, sequences=seqs)


@lru_cache(maxsize=4)
def _all_masks(n: int) -> np.ndarray:
    """All 2^n label assignments as a boolean matrix; True = label B."""
    m = np.arange(1 << n)[:, None]
    return (m >> np.arange(n)[None, :] & 1).astype(bool)


def _greedy_balance(weights: np.ndarray, plausible: Sequence[int]) -> float:
    """Imbalance achieved by assigning digits, heaviest first, to the lighter side."""
    a = b = 0.0
    for d in sorted(plausible, key=lambda d: (-weights[d], d)):
        if a <= b:
            a += weights[d]
        else:
            b += weights[d]
    return abs(a - b)


def next_pattern(ps: PlannerState, weights, rng: np.random.Generator) -> DisplayPattern:
    """Pick the next display pattern.

    Ranking over all assignments (both labels required among plausible
    digits when >= 2 are plausible): first maximize the smallest pairwise
    sequence margin (fewest pairs sitting at it as a tie-break), then
    minimize the digits whose label sequence is still constant, then come
    closest to a weight-balanced split; remaining ties broken by the
    seeded RNG.

    Separation has to outrank balance: digits whose sequences are exactly
    complementary hold identical weights, and a balance-first rule would
    forever assign them opposite labels, which is precisely what keeps
    them complementary — and a pair left *near*-complementary has scores
    within O(margin/steps) of each other, so its weight gap decays and
    the threshold is never reached.  Constant sequences are avoided
    because a digit that never changes label yields a one-class
    hypothesis dataset, which the uninformed fold rule scores no better
    than chance even when the user is perfectly consistent.
    """
    w = np.asarray(weights, dtype=float)
    plaus = sorted(ps.plausible)
    masks = _all_masks(ps.n_symbols)

    valid = np.ones(len(masks), dtype=bool)
    if len(plaus) >= 2:
        sub = masks[:, plaus]
        valid = sub.any(axis=1) & (~sub).any(axis=1)

    resolving = valid
    if len(plaus) >= 2:
        # For every plausible pair, margin = Hamming distance of the two
        # label sequences to the nearer of equality and complementarity.
        # A margin-0 pair is outright unresolved; a small margin keeps the
        # pair's consistency scores within O(margin/steps) of each other,
        # so the primary objective is to raise the smallest margin.
        pairs = list(itertools.combinations(plaus, 2))
        ham = np.array([bin(ps.sequences[a] ^ ps.sequences[b]).count("1")
                        for a, b in pairs])
        differs = np.stack([masks[:, a] != masks[:, b] for a, b in pairs], axis=1)
        new_ham = ham[None, :] + differs
        margin = np.minimum(new_ham, (ps.steps + 1) - new_ham)

        worst = np.where(valid[:, None], margin, -1).min(axis=1)
        resolving = valid & (worst == worst.max())
        at_worst = (margin == worst.max()).sum(axis=1)
        big = np.iinfo(np.intp).max
        at_worst = np.where(resolving, at_worst, big)
        resolving = at_worst == at_worst.min()

    if ps.steps > 0:
        full = (1 << ps.steps) - 1
        seqs = np.array([ps.sequences[d] for d in plaus])
        all_a = seqs == 0
        all_b = seqs == full
        stays_const = (~masks[:, plaus] & all_a[None, :]) | (masks[:, plaus] & all_b[None, :])
        constants = stays_const.sum(axis=1)
        constants = np.where(resolving, constants, big)
        resolving = constants == constants.min()

    signs = np.where(masks[:, plaus], 1.0, -1.0)
    imbalance = np.abs(signs @ w[plaus])
    imbalance = np.where(resolving, imbalance, np.inf)
    best = imbalance <= imbalance.min() + _BALANCE_TOL

    choices = np.flatnonzero(best)
    idx = int(choices[rng.integers(len(choices))])
    labels = tuple(MeaningLabel.B if bit else MeaningLabel.A
                   for bit in masks[idx])
    return DisplayPattern(labels)
