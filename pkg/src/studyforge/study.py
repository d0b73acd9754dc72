"""Study/trial data model and the ask-tell lifecycle.

A study owns an ordered list of trials over a fixed search space and
optimization direction. Samplers propose parameter assignments (ask),
objectives report intermediate values, and outcomes are recorded exactly
once (tell). All randomness is derived from the study seed and the trial
id, so replaying the same call sequence reproduces the study bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import OrderingError, StateError, ValidationError

MAXIMIZE = "maximize"
MINIMIZE = "minimize"
DIRECTIONS = (MAXIMIZE, MINIMIZE)

# Distribution kinds
UNIFORM = "uniform-float"
LOG_UNIFORM = "log-uniform-float"
INT_CATEGORICAL = "int-categorical"
CHOICE = "choice"
BOOLEAN = "boolean"

_CONTINUOUS_KINDS = (UNIFORM, LOG_UNIFORM)
_DISCRETE_KINDS = (INT_CATEGORICAL, CHOICE, BOOLEAN)


@dataclass(frozen=True)
class Distribution:
    """One hyperparameter's search domain.

    Continuous kinds use [low, high] inclusive bounds; discrete kinds use
    an ordered, duplicate-free tuple of choices. Booleans are the fixed
    two-element choice (False, True).
    """

    kind: str
    low: float = 0.0
    high: float = 0.0
    choices: tuple = ()

    def __post_init__(self):
        if self.kind not in _CONTINUOUS_KINDS + _DISCRETE_KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        if self.kind in _CONTINUOUS_KINDS:
            if not (math.isfinite(self.low) and math.isfinite(self.high)):
                raise ValidationError("bounds must be finite")
            if not self.low < self.high:
                raise ValidationError(
                    f"low must be < high, got [{self.low}, {self.high}]"
                )
            if self.kind == LOG_UNIFORM and self.low <= 0:
                raise ValidationError("log-uniform requires low > 0")
        elif self.kind == BOOLEAN:
            object.__setattr__(self, "choices", (False, True))
        else:
            if not self.choices:
                raise ValidationError("discrete distribution needs choices")
            if len(set(self.choices)) != len(self.choices):
                raise ValidationError("choices must be duplicate-free")
            if self.kind == INT_CATEGORICAL and not all(
                isinstance(c, int) and not isinstance(c, bool) for c in self.choices
            ):
                raise ValidationError("int-categorical choices must be integers")

    @property
    def is_discrete(self) -> bool:
        return self.kind in _DISCRETE_KINDS

    @property
    def is_log(self) -> bool:
        return self.kind == LOG_UNIFORM

    def contains(self, value) -> bool:
        if self.is_discrete:
            return any(value == c and type(value) is type(c) for c in self.choices)
        return (
            isinstance(value, (int, float))
            and math.isfinite(value)
            and self.low <= value <= self.high
        )


def uniform(low: float, high: float) -> Distribution:
    return Distribution(UNIFORM, low=low, high=high)


def log_uniform(low: float, high: float) -> Distribution:
    return Distribution(LOG_UNIFORM, low=low, high=high)


def int_categorical(choices: Iterable[int]) -> Distribution:
    return Distribution(INT_CATEGORICAL, choices=tuple(choices))


def choice(choices: Iterable[str]) -> Distribution:
    return Distribution(CHOICE, choices=tuple(choices))


def boolean() -> Distribution:
    return Distribution(BOOLEAN)


class SearchSpace:
    """Ordered map of parameter name -> Distribution."""

    def __init__(self, entries: dict[str, Distribution]):
        if not entries:
            raise ValidationError("search space must not be empty")
        for name, dist in entries.items():
            if not isinstance(name, str) or not name:
                raise ValidationError(f"invalid parameter name {name!r}")
            if not isinstance(dist, Distribution):
                raise ValidationError(f"parameter {name!r}: not a Distribution")
        self.entries: dict[str, Distribution] = dict(entries)

    @property
    def names(self) -> list[str]:
        return list(self.entries)

    def __getitem__(self, name: str) -> Distribution:
        return self.entries[name]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, SearchSpace) and self.entries == other.entries

    def validate_assignment(self, params: dict[str, Any]) -> None:
        """Check that params covers every entry exactly once, in-domain."""
        if set(params) != set(self.entries):
            missing = set(self.entries) - set(params)
            extra = set(params) - set(self.entries)
            raise ValidationError(
                f"assignment mismatch (missing={sorted(missing)}, extra={sorted(extra)})"
            )
        for name, dist in self.entries.items():
            if not dist.contains(params[name]):
                raise ValidationError(
                    f"parameter {name!r}: value {params[name]!r} outside domain"
                )

    def to_dict(self) -> dict:
        out = {}
        for name, d in self.entries.items():
            if d.kind == BOOLEAN:
                out[name] = {"kind": d.kind}
            elif d.is_discrete:
                out[name] = {"kind": d.kind, "choices": list(d.choices)}
            else:
                out[name] = {"kind": d.kind, "low": d.low, "high": d.high}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        entries = {}
        for name, spec in data.items():
            kind = spec["kind"]
            if kind == BOOLEAN:
                entries[name] = boolean()
            elif kind in (INT_CATEGORICAL, CHOICE):
                entries[name] = Distribution(kind, choices=tuple(spec["choices"]))
            else:
                entries[name] = Distribution(kind, low=spec["low"], high=spec["high"])
        return cls(entries)


class TrialState(str, enum.Enum):
    RUNNING = "running"
    COMPLETE = "complete"
    PRUNED = "pruned"
    FAILED = "failed"


@dataclass
class TrialRecord:
    trial_id: int
    params: dict[str, Any]
    state: TrialState = TrialState.RUNNING
    final_value: float | None = None
    intermediates: list[tuple[int, float]] = field(default_factory=list)

    def last_intermediate(self) -> tuple[int, float] | None:
        return self.intermediates[-1] if self.intermediates else None

    def intermediate_at(self, step: int) -> float | None:
        for s, v in self.intermediates:
            if s == step:
                return v
        return None


class Study:
    """One optimization campaign; single-writer, sequential trial ids."""

    def __init__(self, space: SearchSpace, direction: str, seed: int):
        if direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")
        if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        self.space = space
        self.direction = direction
        self.seed = seed
        self.trials: list[TrialRecord] = []

    # rng streams: (seed, trial_id, lane) so sampling and objective draws
    # never share a stream and replay is exact regardless of interleaving.
    def rng_for(self, trial_id: int, lane: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, trial_id, lane])

    def _get_running(self, trial_id: int) -> TrialRecord:
        if not 0 <= trial_id < len(self.trials):
            raise StateError(f"unknown trial id {trial_id}")
        trial = self.trials[trial_id]
        if trial.state is not TrialState.RUNNING:
            raise StateError(
                f"trial {trial_id} is {trial.state.value}, expected running"
            )
        return trial

    def ask(self, sampler) -> TrialRecord:
        trial_id = len(self.trials)
        params = sampler.suggest(self, self.rng_for(trial_id, lane=0))
        self.space.validate_assignment(params)
        trial = TrialRecord(trial_id=trial_id, params=params)
        self.trials.append(trial)
        return trial

    def tell(
        self,
        trial_id: int,
        value: float | None = None,
        state: TrialState | None = None,
    ) -> TrialRecord:
        """Record the trial outcome: a final value, or pruned/failed."""
        trial = self._get_running(trial_id)
        if value is not None:
            if state is not None and state is not TrialState.COMPLETE:
                raise StateError("value given but state is not complete")
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"final value must be finite, got {value!r}")
            trial.state = TrialState.COMPLETE
            trial.final_value = float(value)
        elif state in (TrialState.PRUNED, TrialState.FAILED):
            trial.state = state
        else:
            raise StateError("tell needs a value or a pruned/failed state")
        return trial

    def report_intermediate(self, trial_id: int, step: int, value: float) -> None:
        trial = self._get_running(trial_id)
        if not isinstance(step, int) or step < 0:
            raise ValidationError(f"step must be a non-negative integer, got {step!r}")
        if not math.isfinite(value):
            raise ValidationError(f"intermediate value must be finite, got {value!r}")
        if trial.intermediates and step <= trial.intermediates[-1][0]:
            raise OrderingError(
                f"step {step} not greater than last step {trial.intermediates[-1][0]}"
            )
        trial.intermediates.append((step, float(value)))

    def completed_trials(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.state is TrialState.COMPLETE]

    def best_trial(self) -> TrialRecord:
        """Extremal complete trial per direction; ties go to the lowest id."""
        completed = self.completed_trials()
        if not completed:
            raise StateError("study has no complete trials")
        if self.direction == MAXIMIZE:
            return max(completed, key=lambda t: (t.final_value, -t.trial_id))
        return min(completed, key=lambda t: (t.final_value, t.trial_id))


def create_study(space: SearchSpace, direction: str, seed: int) -> Study:
    return Study(space, direction, seed)


def is_improvement(direction: str, new: float, old: float | None) -> bool:
    """Strict improvement of `new` over `old` under the direction."""
    if old is None:
        return True
    return new > old if direction == MAXIMIZE else new < old


def meets_threshold(direction: str, value: float, threshold: float) -> bool:
    return value >= threshold if direction == MAXIMIZE else value <= threshold
