"""Core value types: meaning labels, user signals and display patterns.

Everything here is an immutable value, shared by every other module.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union


class DomainError(ValueError):
    """A value outside the symbol set or an ill-formed pattern."""


class SignalValidationError(ValueError):
    """A signal incompatible with the session's mode.

    ``code`` is one of ``wrong_variant``, ``wrong_dimension``,
    ``non_finite``, ``unknown_button``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class MeaningLabel(enum.Enum):
    """One of the two meaning classes (rendered yellow/gray in the UI)."""

    A = "A"
    B = "B"

    @property
    def complement(self) -> "MeaningLabel":
        return MeaningLabel.B if self is MeaningLabel.A else MeaningLabel.A

    @property
    def index(self) -> int:
        return 0 if self is MeaningLabel.A else 1


LABELS = (MeaningLabel.A, MeaningLabel.B)


@dataclass(frozen=True)
class ButtonPress:
    """A discrete signal: one of a small set of answer buttons."""

    symbol: int


@dataclass(frozen=True)
class PointSignal:
    """A continuous signal: a d-dimensional feature vector."""

    features: tuple[float, ...]


Signal = Union[ButtonPress, PointSignal]


@dataclass(frozen=True)
class SessionMode:
    """What kind of signals a session accepts.

    kind: "discrete" (button presses among ``n_buttons`` symbols) or
    "continuous" (points of dimension ``dim``).
    """

    kind: str
    dim: int = 0
    n_buttons: int = 2

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise DomainError(f"unknown mode kind: {self.kind!r}")
        if self.kind == "continuous" and self.dim < 1:
            raise DomainError("continuous mode needs dim >= 1")


def validate_signal(signal: Signal, mode: SessionMode) -> None:
    """Raise SignalValidationError unless ``signal`` fits ``mode``."""
    if mode.kind == "discrete":
        if not isinstance(signal, ButtonPress):
            raise SignalValidationError(
                "wrong_variant", "discrete mode expects a button press")
        if not (0 <= signal.symbol < mode.n_buttons):
            raise SignalValidationError(
                "unknown_button", f"button {signal.symbol} out of range")
        return
    if not isinstance(signal, PointSignal):
        raise SignalValidationError(
            "wrong_variant", "continuous mode expects a point signal")
    if len(signal.features) != mode.dim:
        raise SignalValidationError(
            "wrong_dimension",
            f"expected {mode.dim} components, got {len(signal.features)}")
    for x in signal.features:
        if not math.isfinite(x):
            raise SignalValidationError(
                "non_finite", "signal contains a non-finite component")


@dataclass(frozen=True)
class DisplayPattern:
    """Per-step assignment of every digit to one of the two labels."""

    labels: tuple[MeaningLabel, ...]

    @property
    def n_symbols(self) -> int:
        return len(self.labels)

    def label_for(self, digit: int) -> MeaningLabel:
        if not (0 <= digit < len(self.labels)):
            raise DomainError(f"digit {digit} outside the symbol set")
        return self.labels[digit]

    def complement(self) -> "DisplayPattern":
        return DisplayPattern(tuple(l.complement for l in self.labels))

    def group(self, label: MeaningLabel) -> tuple[int, ...]:
        """Digits carrying ``label``, ascending."""
        return tuple(d for d, l in enumerate(self.labels) if l is label)

    @staticmethod
    def from_group_a(group_a, n_symbols: int = 10) -> "DisplayPattern":
        a = set(group_a)
        for d in a:
            if not (0 <= d < n_symbols):
                raise DomainError(f"digit {d} outside the symbol set")
        return DisplayPattern(tuple(
            MeaningLabel.A if d in a else MeaningLabel.B
            for d in range(n_symbols)))


def pattern_label(pattern: DisplayPattern, digit: int) -> MeaningLabel:
    """The label ``pattern`` assigns to ``digit``."""
    return pattern.label_for(digit)


def complement_pattern(pattern: DisplayPattern) -> DisplayPattern:
    """Flip every digit's label; an involution."""
    return pattern.complement()


# --- JSON wire encodings -------------------------------------------------

def pattern_to_json(pattern: DisplayPattern) -> dict:
    return {"A": list(pattern.group(MeaningLabel.A)),
            "B": list(pattern.group(MeaningLabel.B))}


def pattern_from_json(obj: dict, n_symbols: int = 10) -> DisplayPattern:
    try:
        a = obj["A"]
        b = obj["B"]
    except (KeyError, TypeError):
        raise DomainError("pattern object needs 'A' and 'B' digit lists")
    if sorted(list(a) + list(b)) != list(range(n_symbols)):
        raise DomainError("pattern must cover each digit exactly once")
    return DisplayPattern.from_group_a(a, n_symbols)


def signal_to_json(signal: Signal) -> dict:
    if isinstance(signal, ButtonPress):
        return {"button": signal.symbol}
    return {"point": list(signal.features)}


def signal_from_json(obj: dict) -> Signal:
    if not isinstance(obj, dict):
        raise SignalValidationError("wrong_variant", "signal must be an object")
    if "button" in obj:
        sym = obj["button"]
        if not isinstance(sym, int) or isinstance(sym, bool):
            raise SignalValidationError("wrong_variant", "button must be an integer")
        return ButtonPress(sym)
    if "point" in obj:
        pt = obj["point"]
        if not isinstance(pt, (list, tuple)) or not pt:
            raise SignalValidationError("wrong_dimension", "point must be a non-empty array")
        try:
            feats = tuple(float(x) for x in pt)
        except (TypeError, ValueError):
            raise SignalValidationError("wrong_variant", "point components must be numbers")
        return PointSignal(feats)
    raise SignalValidationError("wrong_variant", "signal needs 'button' or 'point'")
