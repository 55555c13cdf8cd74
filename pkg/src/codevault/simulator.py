"""Synthetic users and batch trial running.

The simulator stands in for human participants: button pressers with an
error rate, 2D Gaussian clickers, and an intentless random clicker used
as the adversarial control.  A ``flipped`` user privately swaps which
button/cluster stands for which label; the engine must cope identically.
"""
from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .session import CodeSession, Level, SessionConfig, SessionStatus
from .signals import (ButtonPress, DisplayPattern, MeaningLabel, PointSignal,
                      Signal, pattern_label)

DEFAULT_STEP_CAP = 200


@dataclass(frozen=True)
class ButtonUser:
    """Presses the button matching the intended digit's display label."""

    error_rate: float = 0.0
    flipped: bool = False

    def __post_init__(self):
        if not (0.0 <= self.error_rate < 1.0):
            raise ValueError("error_rate must lie in [0, 1)")


@dataclass(frozen=True)
class GaussianUser:
    """Clicks near one of two cluster centers, one per label."""

    mean_a: tuple[float, float] = (-1.0, 0.0)
    mean_b: tuple[float, float] = (1.0, 0.0)
    sigma: float = 0.25
    flipped: bool = False

    def __post_init__(self):
        if self.mean_a == self.mean_b:
            raise ValueError("cluster means must differ")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class RandomClicker:
    """Clicks uniformly in a box, ignoring the display entirely."""

    low: tuple[float, float] = (-2.0, -2.0)
    high: tuple[float, float] = (2.0, 2.0)


UserModel = Union[ButtonUser, GaussianUser, RandomClicker]


def _reflect_across_bisector(x: np.ndarray, mean_a: np.ndarray,
                             mean_b: np.ndarray) -> np.ndarray:
    """Mirror a point through the perpendicular bisector of the two means.

    Maps each cluster's distribution exactly onto the other's, which is
    what makes flipped and unflipped runs step-for-step comparable.
    """
    mid = 0.5 * (mean_a + mean_b)
    u = (mean_b - mean_a) / np.linalg.norm(mean_b - mean_a)
    return x - 2.0 * np.dot(x - mid, u) * u


def gen_signal(user: UserModel, digit: int, pattern: DisplayPattern,
               rng: np.random.Generator) -> Signal:
    """The signal this user emits for ``digit`` under ``pattern``."""
    if isinstance(user, RandomClicker):
        pt = rng.uniform(np.asarray(user.low), np.asarray(user.high))
        return PointSignal(tuple(float(v) for v in pt))
    label = pattern_label(pattern, digit)
    if isinstance(user, ButtonUser):
        press = 0 if label is MeaningLabel.A else 1
        if user.flipped:
            press = 1 - press
        if user.error_rate > 0 and rng.random() < user.error_rate:
            press = 1 - press
        return ButtonPress(press)
    mean_a = np.asarray(user.mean_a)
    mean_b = np.asarray(user.mean_b)
    mu = mean_a if label is MeaningLabel.A else mean_b
    x = mu + user.sigma * rng.standard_normal(2)
    if user.flipped:
        x = _reflect_across_bisector(x, mean_a, mean_b)
    return PointSignal(tuple(float(v) for v in x))


@dataclass
class TrialResult:
    opened: bool
    steps_per_digit: tuple[int, ...]
    wrong_acceptances: int
    total_signals: int
    timeout: bool = False

    def __post_init__(self):
        # vault soundness: an opened vault implies a fully correct code
        if self.opened:
            assert self.wrong_acceptances == 0


def run_trial(config: SessionConfig, user: UserModel,
              rng: np.random.Generator,
              step_cap: int = DEFAULT_STEP_CAP) -> TrialResult:
    """Drive one session to a terminal status or the step cap."""
    session = CodeSession(config)
    steps: list[int] = []
    while (session.status is SessionStatus.IN_PROGRESS
           and session.step_index < step_cap):
        digit = config.code[min(session.digit_index, len(config.code) - 1)]
        signal = gen_signal(user, digit, session.current_pattern, rng)
        result = session.step(signal)
        for ev in result.events:
            if ev.kind == "digit_accepted":
                steps.append(ev.payload["steps"])
    wrong = sum(1 for i, d in enumerate(session.accepted)
                if d != config.code[i])
    opened = session.status is SessionStatus.OPENED
    assert not opened or tuple(session.accepted) == tuple(config.code)
    return TrialResult(
        opened=opened,
        steps_per_digit=tuple(steps),
        wrong_acceptances=wrong,
        total_signals=session.step_index,
        timeout=session.status is SessionStatus.IN_PROGRESS,
    )


@dataclass(frozen=True)
class BatchCell:
    """One simulated condition: a level plus a user description."""

    level: Level
    sigma: float = 0.25
    p_err: float = 0.0
    flipped: bool = False
    separation: float = 2.0    # distance between the two cluster means

    def user(self) -> UserModel:
        if self.level is Level.UNKNOWN_CONTINUOUS:
            half = self.separation / 2.0
            return GaussianUser(mean_a=(-half, 0.0), mean_b=(half, 0.0),
                                sigma=self.sigma, flipped=self.flipped)
        return ButtonUser(error_rate=self.p_err, flipped=self.flipped)


def _trial_seeds(master_seed: int, cell_index: int, trial: int) -> tuple[int, np.random.Generator]:
    ss = np.random.SeedSequence([master_seed, cell_index, trial])
    session_seed = int(ss.generate_state(1)[0])
    user_rng = np.random.Generator(np.random.PCG64(ss.spawn(1)[0]))
    return session_seed, user_rng


def run_batch(cells: Sequence[BatchCell], trials: int, seed: int,
              code: tuple[int, int, int, int] = (1, 2, 3, 4),
              engine_params=None, transfer: bool = True,
              step_cap: int = DEFAULT_STEP_CAP) -> list[dict]:
    """Per-cell aggregate metrics; deterministic given ``seed``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for ci, cell in enumerate(cells):
        results = []
        for t in range(trials):
            session_seed, user_rng = _trial_seeds(seed, ci, t)
            kwargs = {} if engine_params is None else {"engine": engine_params}
            config = SessionConfig(level=cell.level, code=code,
                                   seed=session_seed, transfer=transfer,
                                   **kwargs)
            results.append(run_trial(config, cell.user(), user_rng, step_cap))
        rows.append(_aggregate(cell, results))
    return rows


def _aggregate(cell: BatchCell, results: list[TrialResult]) -> dict:
    n = len(results)
    medians = []
    for k in range(4):
        vals = [r.steps_per_digit[k] for r in results
                if len(r.steps_per_digit) > k]
        medians.append(statistics.median(vals) if vals else float("nan"))
    return {
        "level": int(cell.level),
        "sigma": cell.sigma,
        "p_err": cell.p_err,
        "flipped": cell.flipped,
        "trials": n,
        "open_rate": sum(r.opened for r in results) / n,
        "median_steps_d1": medians[0],
        "median_steps_d2": medians[1],
        "median_steps_d3": medians[2],
        "median_steps_d4": medians[3],
        "wrong_accept_rate": sum(r.wrong_acceptances > 0 for r in results) / n,
        "timeout_rate": sum(r.timeout for r in results) / n,
    }


CSV_COLUMNS = ["level", "sigma", "p_err", "flipped", "trials", "open_rate",
               "median_steps_d1", "median_steps_d2", "median_steps_d3",
               "median_steps_d4", "wrong_accept_rate", "timeout_rate"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def write_json(rows: list[dict], path) -> None:
    sanitized = [
        {k: (None if isinstance(v, float) and v != v else v)
         for k, v in row.items()}
        for row in rows]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sanitized, fh, indent=2, sort_keys=True)
        fh.write("\n")
