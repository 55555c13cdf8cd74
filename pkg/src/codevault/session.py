"""The 4-digit vault protocol: digit subsessions, decoder transfer, events.

A session runs one digit at a time.  Level 1 knows what the buttons mean
and eliminates candidates directly.  Levels 4 and 5 run the consistency
engine for the first digit; once a decoder has been learned it can be
transferred, turning the remaining digits into a Bayes filter over the
ten hypotheses (still gated by the acceptance threshold).

Every session carries a JSONL-ready event log; replaying the logged
signals through a fresh session with the same seed reproduces the final
state bit for bit.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace as dc_replace
from typing import Optional

import numpy as np

from . import engine as eng
from . import planner as pln
from .classifier import ClassifierModel, predict_prob
from .engine import EngineParams, EngineState
from .planner import PlannerState
from .signals import (ButtonPress, DisplayPattern, DomainError, MeaningLabel,
                      SessionMode, Signal, pattern_from_json, pattern_label,
                      pattern_to_json, signal_from_json, signal_to_json,
                      validate_signal)

CODE_LENGTH = 4


class Level(enum.IntEnum):
    KNOWN_MEANINGS = 1       # colored buttons, meanings known
    UNKNOWN_DISCRETE = 4     # two anonymous buttons
    UNKNOWN_CONTINUOUS = 5   # free 2D clicks


class SessionStatus(enum.Enum):
    IN_PROGRESS = "InProgress"
    OPENED = "Opened"
    FAILED = "Failed"


class TerminalSessionError(RuntimeError):
    """A signal arrived after the session reached a terminal status."""


class ReplayError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    level: Level
    code: tuple[int, int, int, int]
    engine: EngineParams = field(default_factory=EngineParams)
    seed: int = 0
    reveal_weights: bool = False
    transfer: bool = True
    n_symbols: int = 10
    signal_dim: int = 2

    def __post_init__(self):
        if len(self.code) != CODE_LENGTH:
            raise DomainError("code must have exactly 4 digits")
        for d in self.code:
            if not (0 <= d < self.n_symbols):
                raise DomainError(f"code digit {d} outside the symbol set")

    @property
    def mode(self) -> SessionMode:
        if self.level is Level.UNKNOWN_CONTINUOUS:
            return SessionMode("continuous", dim=self.signal_dim)
        return SessionMode("discrete", n_buttons=2)


@dataclass(frozen=True)
class Event:
    kind: str
    payload: dict


@dataclass
class StepResult:
    events: list[Event]
    next_pattern: Optional[DisplayPattern]


def elimination_update(candidates: frozenset[int], pattern: DisplayPattern,
                       pressed: MeaningLabel) -> frozenset[int]:
    """Candidates compatible with pressing ``pressed`` under ``pattern``.

    May be empty (an inconsistent user); the session resets in that case.
    """
    return frozenset(d for d in candidates
                     if pattern_label(pattern, d) is pressed)


def transfer_update(posterior: np.ndarray, pattern: DisplayPattern,
                    signal: Signal, decoder: ClassifierModel,
                    clip: float = 0.0) -> np.ndarray:
    """One Bayes-filter step using the transferred decoder.

    ``clip`` bounds the per-step likelihood away from 0 and 1 so a single
    overconfident misprediction of the small-sample decoder cannot
    eliminate a digit irrecoverably.
    """
    p = predict_prob(decoder, signal)
    p = min(max(p, clip), 1.0 - clip)
    lik = np.array([p if pattern.labels[d] is MeaningLabel.A else 1.0 - p
                    for d in range(len(posterior))])
    post = posterior * lik
    return post / post.sum()


class CodeSession:
    """Single-writer vault session; steps must be serialized by the caller."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.status = SessionStatus.IN_PROGRESS
        self.digit_index = 0
        self.accepted: list[int] = []
        self.decoder: Optional[ClassifierModel] = None
        self.step_index = 0
        self.log: list[dict] = []
        self._rng = np.random.Generator(np.random.PCG64(config.seed))
        self._log("session_start", {
            "seed": config.seed,
            "level": int(config.level),
            "code": list(config.code),
            "reveal_weights": config.reveal_weights,
            "transfer": config.transfer,
            "beta": config.engine.beta,
            "theta": config.engine.theta,
            "min_steps": config.engine.min_steps,
        })
        self._reset_digit_state()
        self.current_pattern = self._emit_pattern()

    # -- internals --------------------------------------------------------

    def _log(self, kind: str, payload: dict) -> None:
        self.log.append({"t": self.step_index, "kind": kind, "payload": payload})

    def _reset_digit_state(self) -> None:
        cfg = self.config
        self.candidates = frozenset(range(cfg.n_symbols))
        self.engine: EngineState = eng.new_engine(cfg.engine, cfg.n_symbols, cfg.mode)
        self.planner: PlannerState = pln.new_planner(cfg.n_symbols)
        self.posterior = np.full(cfg.n_symbols, 1.0 / cfg.n_symbols)
        self.steps_this_digit = 0

    @property
    def _transfer_phase(self) -> bool:
        return (self.config.transfer and self.decoder is not None
                and self.config.level is not Level.KNOWN_MEANINGS)

    def _planner_weights(self) -> np.ndarray:
        n = self.config.n_symbols
        if self.config.level is Level.KNOWN_MEANINGS:
            w = np.zeros(n)
            for d in self.candidates:
                w[d] = 1.0 / len(self.candidates)
            return w
        if self._transfer_phase:
            return self.posterior
        if self.engine.steps == 0:
            return np.full(n, 1.0 / n)
        return eng.weights(self.engine)

    def _emit_pattern(self) -> DisplayPattern:
        if self.config.level is Level.KNOWN_MEANINGS:
            planner = dc_replace(self.planner, plausible=self.candidates)
        else:
            planner = self.planner
        pattern = pln.next_pattern(planner, self._planner_weights(), self._rng)
        self._log("pattern", pattern_to_json(pattern))
        return pattern

    def weights_view(self) -> Optional[np.ndarray]:
        """Hypothesis weights for the live visualization, if any exist yet."""
        if self.config.level is Level.KNOWN_MEANINGS:
            return None
        if self._transfer_phase:
            return self.posterior.copy()
        if self.engine.steps == 0:
            return np.full(self.config.n_symbols, 1.0 / self.config.n_symbols)
        return eng.weights(self.engine)

    # -- protocol ---------------------------------------------------------

    def step(self, signal: Signal) -> StepResult:
        if self.status is not SessionStatus.IN_PROGRESS:
            raise TerminalSessionError(f"session is {self.status.value}")
        validate_signal(signal, self.config.mode)
        self.step_index += 1
        self._log("signal", signal_to_json(signal))
        events: list[Event] = []
        pattern = self.current_pattern
        accepted_digit: Optional[int] = None

        if self.config.level is Level.KNOWN_MEANINGS:
            assert isinstance(signal, ButtonPress)
            pressed = MeaningLabel.A if signal.symbol == 0 else MeaningLabel.B
            remaining = elimination_update(self.candidates, pattern, pressed)
            self.planner = pln.record_pattern(self.planner, pattern)
            if not remaining:
                events.append(Event("inconsistency_reset", {}))
                self._log("inconsistency_reset", {})
                remaining = frozenset(range(self.config.n_symbols))
            self.candidates = remaining
            if len(remaining) == 1:
                accepted_digit = next(iter(remaining))
        elif not self._transfer_phase:
            self.engine = eng.ingest(self.engine, pattern, signal)
            self.planner = pln.record_pattern(self.planner, pattern)
            accepted_digit = eng.decide(self.engine,
                                        pln.identifiability(self.planner))
        else:
            self.posterior = transfer_update(self.posterior, pattern, signal,
                                             self.decoder,
                                             clip=self.config.engine.transfer_clip)
            self.planner = pln.record_pattern(self.planner, pattern)
            top = int(np.argmax(self.posterior))
            w = self.posterior[top]
            if w >= self.config.engine.theta and (self.posterior == w).sum() == 1:
                accepted_digit = top

        self.steps_this_digit += 1
        if accepted_digit is not None:
            events.extend(self._accept(accepted_digit))

        next_pattern = None
        if self.status is SessionStatus.IN_PROGRESS:
            next_pattern = self._emit_pattern()
        self.current_pattern = next_pattern
        return StepResult(events, next_pattern)

    def _accept(self, digit: int) -> list[Event]:
        events = [Event("digit_accepted",
                        {"digit": digit, "steps": self.steps_this_digit,
                         "position": self.digit_index})]
        self._log("digit_accepted", events[0].payload)
        if (self.digit_index == 0 and self.config.transfer
                and self.config.level is not Level.KNOWN_MEANINGS
                and self.engine.steps > 0):
            self.decoder = eng.learned_classifier(self.engine, digit)
        self.accepted.append(digit)
        self.digit_index += 1
        self._reset_digit_state()
        if len(self.accepted) == CODE_LENGTH:
            events.append(Event("code_complete", {}))
            self._log("code_complete", {})
            if tuple(self.accepted) == tuple(self.config.code):
                self.status = SessionStatus.OPENED
                kind = "vault_opened"
            else:
                self.status = SessionStatus.FAILED
                kind = "vault_failed"
            payload = {"state_hash": state_hash(self)}
            events.append(Event(kind, payload))
            self._log(kind, payload)
        return events


def start(config: SessionConfig) -> tuple[CodeSession, DisplayPattern]:
    session = CodeSession(config)
    return session, session.current_pattern


def state_hash(session: CodeSession) -> str:
    """Canonical digest of the decision-relevant session state."""
    doc = {
        "status": session.status.value,
        "digit_index": session.digit_index,
        "accepted": session.accepted,
        "step_index": session.step_index,
        "steps_this_digit": session.steps_this_digit,
        "candidates": sorted(session.candidates),
        "scores": [float(s).hex() for s in session.engine.scores],
        "posterior": [float(p).hex() for p in session.posterior],
    }
    raw = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(raw.encode()).hexdigest()


def config_from_start_record(payload: dict) -> SessionConfig:
    try:
        seed = payload["seed"]
        level = Level(payload["level"])
        code = tuple(payload["code"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ReplayError(f"bad session_start record: {exc}")
    params = EngineParams(beta=payload.get("beta", EngineParams.beta),
                          theta=payload.get("theta", EngineParams.theta),
                          min_steps=payload.get("min_steps", EngineParams.min_steps))
    return SessionConfig(level=level, code=code, engine=params, seed=seed,
                         reveal_weights=payload.get("reveal_weights", False),
                         transfer=payload.get("transfer", True))


def replay(lines) -> CodeSession:
    """Rebuild a session from JSONL event-log lines.

    Only the start record and the signal records drive the replay; a valid
    prefix of a log yields the corresponding intermediate state.
    """
    session: Optional[CodeSession] = None
    for i, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
            kind = record["kind"]
            payload = record["payload"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ReplayError(f"line {i}: malformed log record ({exc})")
        if session is None:
            if kind != "session_start":
                raise ReplayError(f"line {i}: log must start with session_start")
            if "seed" not in payload:
                raise ReplayError(f"line {i}: session_start record has no seed")
            session = CodeSession(config_from_start_record(payload))
        elif kind == "signal":
            try:
                session.step(signal_from_json(payload))
            except (ValueError, TerminalSessionError) as exc:
                raise ReplayError(f"line {i}: {exc}")
    if session is None:
        raise ReplayError("empty log")
    return session


def replay_file(path) -> CodeSession:
    with open(path, "r", encoding="utf-8") as fh:
        return replay(fh)
