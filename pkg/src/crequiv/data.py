"""Observation records, two-group samples and censoring specifications."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .hazards import IntensityFamily, cumulative_intensity, intensity

CSV_HEADER = ("group", "time", "state")


class DataError(ValueError):
    """Malformed or invalid observation data."""


@dataclass(frozen=True)
class Observation:
    time: float
    state: int

    def __post_init__(self):
        if not self.time > 0:
            raise DataError(f"nonpositive time {self.time}")
        if self.state < 0:
            raise DataError(f"negative state {self.state}")

    @property
    def censored(self) -> bool:
        return self.state == 0


@dataclass(frozen=True, eq=False)
class Sample:
    """Possibly censored competing-risks observations for one group.

    ``states`` holds 0 for a censored record and ``j`` for an observed
    transition into absorbing state ``j``.
    """

    times: np.ndarray
    states: np.ndarray
    k: int
    horizon: float
    group: int = 1

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=np.int64)
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        if times.ndim != 1 or times.shape != states.shape:
            raise DataError("times and states must be 1-d arrays of equal length")
        if times.size == 0:
            raise DataError("a sample needs at least one observation")
        if self.k < 1:
            raise DataError(f"k must be at least 1, got {self.k}")
        if not self.horizon > 0:
            raise DataError(f"horizon must be positive, got {self.horizon}")
        if np.any(~(times > 0)) or np.any(~np.isfinite(times)):
            raise DataError("all times must be positive and finite")
        if np.any(states < 0) or np.any(states > self.k):
            raise DataError(f"states must lie in 0..{self.k}")

    @classmethod
    def from_observations(cls, observations, k, horizon, group=1) -> "Sample":
        obs = list(observations)
        return cls(
            np.array([o.time for o in obs], dtype=float),
            np.array([o.state for o in obs], dtype=np.int64),
            k,
            horizon,
            group,
        )

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def observations(self) -> list[Observation]:
        return [Observation(float(t), int(s)) for t, s in zip(self.times, self.states)]

    def events(self, j: int) -> np.ndarray:
        """Observed transition times into state ``j`` (1-based)."""
        return self.times[self.states == j]

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.states == 0))

    def administrative_mask(self) -> np.ndarray:
        """Censored at exactly the horizon, i.e. end of follow-up."""
        return (self.states == 0) & (self.times == self.horizon)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.k == other.k
            and self.horizon == other.horizon
            and self.group == other.group
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.states, other.states)
        )

    def __len__(self):
        return self.n

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "k": self.k,
            "horizon": self.horizon,
            "observations": [{"time": float(t), "state": int(s)} for t, s in zip(self.times, self.states)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Sample":
        obs = d["observations"]
        return cls(
            np.array([o["time"] for o in obs], dtype=float),
            np.array([o["state"] for o in obs], dtype=np.int64),
            int(d["k"]),
            float(d["horizon"]),
            int(d["group"]),
        )


@dataclass(frozen=True)
class EventCounts:
    events: tuple[int, ...]
    censored: int
    exposure: float

    @property
    def n(self) -> int:
        return sum(self.events) + self.censored


def event_counts(sample: Sample) -> EventCounts:
    d = tuple(int(np.count_nonzero(sample.states == j)) for j in range(1, sample.k + 1))
    return EventCounts(d, int(np.count_nonzero(sample.states == 0)), float(sample.times.sum()))


# --- censoring -------------------------------------------------------------


@dataclass(frozen=True)
class Administrative:
    """Fixed end of follow-up at ``horizon`` days."""

    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"administrative horizon must be positive, got {self.horizon}")

    def __str__(self):
        return f"admin:{self.horizon:g}"


@dataclass(frozen=True)
class Parametric:
    """Random right-censoring with a parametric censoring-time law.

    The law is described through its hazard, so ``g = h * exp(-H)`` and
    ``G = 1 - exp(-H)``. ``hazard=None`` means the law is estimated from the
    data (of the given ``family``).
    """

    family: str = "exponential"
    hazard: IntensityFamily | None = None

    def density(self, t):
        h = self._require()
        return intensity(h, t) * np.exp(-cumulative_intensity(h, t))

    def log_density(self, t):
        h = self._require()
        with np.errstate(divide="ignore"):
            return np.log(intensity(h, t)) - cumulative_intensity(h, t)

    def cdf(self, t):
        return -np.expm1(-cumulative_intensity(self._require(), t))

    def _require(self) -> IntensityFamily:
        if self.hazard is None:
            raise ValueError("censoring law has not been fitted")
        return self.hazard

    def __str__(self):
        if self.hazard is None:
            return f"fit:{self.family}"
        if self.hazard.family == "exponential":
            return f"exp:{self.hazard.params[0]:g}"
        return f"{self.hazard}"


CensoringModel = Union[Administrative, Parametric]


def parse_censoring(text: str) -> CensoringModel:
    """Parse ``admin:<tau>``, ``exp:<rate>`` or ``fit:<family>``."""
    from .hazards import canonical_family, exponential

    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "admin":
            return Administrative(float(arg))
        if kind == "exp":
            rate = float(arg)
            if not rate > 0:
                raise ValueError
            return Parametric("exponential", exponential(rate))
        if kind == "fit":
            return Parametric(canonical_family(arg or "exponential"), None)
    except ValueError:
        pass
    raise ValueError(f"bad censoring spec {text!r}; expected admin:<tau>, exp:<rate> or fit:<family>")


# --- CSV / JSON ------------------------------------------------------------


def read_csv(path, k: int, horizon: float | None = None, administrative: bool = False) -> dict[int, Sample]:
    """Read a ``group,time,state`` file into one ``Sample`` per group.

    ``horizon`` defaults to the largest observed time. With
    ``administrative=True`` every time must lie in ``(0, horizon]``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_csv(fh.read(), k, horizon, administrative)


def parse_csv(text: str, k: int, horizon: float | None = None, administrative: bool = False) -> dict[int, Sample]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise DataError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")
    rows: dict[int, list[tuple[float, int]]] = {1: [], 2: []}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"row {lineno}: expected 3 fields, got {len(row)}")
        try:
            group = int(row[0])
            time = float(row[1])
            state = int(row[2])
        except ValueError:
            raise DataError(f"row {lineno}: malformed row {row!r}") from None
        if group not in rows:
            raise DataError(f"row {lineno}: unknown group label {group}")
        if not np.isfinite(time) or time <= 0:
            raise DataError(f"nonpositive time at row {lineno}")
        if state < 0 or state > k:
            raise DataError(f"row {lineno}: state {state} outside 0..{k}")
        if administrative and horizon is not None and time > horizon:
            raise DataError(f"row {lineno}: time {time} beyond horizon {horizon}")
        rows[group].append((time, state))

    if horizon is None:
        all_times = [t for g in rows.values() for t, _ in g]
        if not all_times:
            raise DataError("no observations")
        horizon = max(all_times)
    out = {}
    for g, recs in rows.items():
        if recs:
            out[g] = Sample(
                np.array([r[0] for r in recs]), np.array([r[1] for r in recs], dtype=np.int64), k, horizon, g
            )
    return out


def format_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in samples:
        for t, st in zip(s.times, s.states):
            w.writerow([s.group, repr(float(t)), int(st)])
    return buf.getvalue()


def write_csv(samples, path) -> None:
    Path(path).write_text(format_csv(samples), encoding="utf-8")


def write_json(samples, path) -> None:
    Path(path).write_text(json.dumps([s.to_dict() for s in samples], indent=2), encoding="utf-8")
