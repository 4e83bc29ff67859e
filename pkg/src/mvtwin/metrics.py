"""Waveform error metrics and their aggregation over Monte-Carlo trials.

Both metrics are normalized by the RMS of the reference waveform over the
same window: the average error is the RMS of the deviation, the point
error the largest absolute deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSignalError, WindowError
from .waveform import SampledWaveform, Window, resolve_window

QUANTITIES = ("V", "I", "P", "Q", "f_v", "f_i")
FREQUENCY_QUANTITIES = ("f_v", "f_i")
METRICS = ("avg", "max_point")


def _aligned(x_d, x_r, window: Window):
    if isinstance(x_d, SampledWaveform) or isinstance(x_r, SampledWaveform):
        if not (isinstance(x_d, SampledWaveform) and isinstance(x_r, SampledWaveform)):
            raise TypeError("pass two SampledWaveforms or two arrays")
        if x_d.fs != x_r.fs:
            raise ValueError(f"sampling rates differ: {x_d.fs} vs {x_r.fs}")
        x_d, x_r = x_d.samples, x_r.samples
    d = np.asarray(x_d, dtype=float)
    r = np.asarray(x_r, dtype=float)
    if d.shape != r.shape:
        raise ValueError(f"length mismatch: {d.shape} vs {r.shape}")
    sl = resolve_window(window, r.shape[-1])
    return d[..., sl], r[..., sl]


def _ref_rms(r: np.ndarray, floor: float) -> float:
    ref = float(np.sqrt(np.mean(r * r)))
    if not ref > floor:
        raise DegenerateSignalError(f"reference RMS {ref:g} not above floor {floor:g}")
    return ref


def avg_error(x_d, x_r, window: Window = None, floor: float = 0.0) -> float:
    d, r = _aligned(x_d, x_r, window)
    ref = _ref_rms(r, floor)
    return float(np.sqrt(np.mean((d - r) ** 2)) / ref)


def max_point_error(x_d, x_r, window: Window = None, floor: float = 0.0) -> float:
    d, r = _aligned(x_d, x_r, window)
    ref = _ref_rms(r, floor)
    return float(np.max(np.abs(d - r)) / ref)


def event_window(
    fs: float,
    event_time: float,
    cycles_each_side: int = 2,
    f0: float = 50.0,
    n_samples: int | None = None,
) -> slice:
    """Sample range covering ``cycles_each_side`` cycles around an event."""
    if cycles_each_side <= 0:
        raise WindowError("window must span at least one cycle on each side")
    half = cycles_each_side / f0
    start = int(round((event_time - half) * fs))
    stop = int(round((event_time + half) * fs))
    if start < 0 or (n_samples is not None and stop > n_samples):
        raise WindowError(f"event window [{start}, {stop}) exceeds the record")
    return slice(start, stop)


@dataclass
class QuantityError:
    avg: float
    max_point: float | None = None
    low_signal: bool = False


@dataclass
class TrialErrors:
    trial: int
    errors: dict[str, QuantityError] = field(default_factory=dict)

    def __getitem__(self, quantity: str) -> QuantityError:
        return self.errors[quantity]

    def value(self, quantity: str, metric: str) -> float | None:
        q = self.errors[quantity]
        return q.avg if metric == "avg" else q.max_point


@dataclass
class Cell:
    """Running (avg, max, min) of one metric; ``avg`` skips low-signal trials."""

    count: int = 0
    total: float = 0.0
    maximum: float = -math.inf
    minimum: float = math.inf
    flagged: int = 0

    def add(self, value: float, low_signal: bool = False) -> None:
        self.maximum = max(self.maximum, value)
        self.minimum = min(self.minimum, value)
        if low_signal:
            self.flagged += 1
        else:
            self.count += 1
            self.total += value

    def merge(self, other: "Cell") -> "Cell":
        return Cell(self.count + other.count, self.total + other.total,
                    max(self.maximum, other.maximum), min(self.minimum, other.minimum),
                    self.flagged + other.flagged)

    @property
    def avg(self) -> float:
        return self.total / self.count if self.count else math.nan

    @property
    def max(self) -> float:
        return self.maximum

    @property
    def min(self) -> float:
        return self.minimum


@dataclass
class ScenarioStats:
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    n_trials: int = 0
    meta: dict = field(default_factory=dict)

    def cell(self, quantity: str, metric: str = "avg") -> Cell:
        return self.cells[(quantity, metric)]

    def add(self, trial: TrialErrors) -> None:
        self.n_trials += 1
        for q, err in trial.errors.items():
            for metric in METRICS:
                val = err.avg if metric == "avg" else err.max_point
                if val is None:
                    continue
                self.cells.setdefault((q, metric), Cell()).add(val, err.low_signal)

    def merge(self, other: "ScenarioStats") -> "ScenarioStats":
        out = ScenarioStats(n_trials=self.n_trials + other.n_trials, meta=dict(self.meta))
        for key in self.cells.keys() | other.cells.keys():
            a = self.cells.get(key, Cell())
            b = other.cells.get(key, Cell())
            out.cells[key] = a.merge(b)
        return out

    def rows(self):
        """``(quantity, metric, statistic, value)`` tuples in table order."""
        order = {q: i for i, q in enumerate(QUANTITIES)}
        for (q, metric) in sorted(self.cells, key=lambda k: (order.get(k[0], 99), k[0], k[1])):
            c = self.cells[(q, metric)]
            for stat in ("avg", "max", "min"):
                yield q, metric, stat, getattr(c, stat)
            yield q, metric, "flagged", float(c.flagged)


def aggregate(trials) -> ScenarioStats:
    trials = list(trials)
    if not trials:
        raise ValueError("aggregate needs at least one trial")
    stats = ScenarioStats()
    for t in trials:
        stats.add(t)
    return stats


def confidence_halfwidth(values, confidence: float = 0.99) -> float:
    """Normal-approximation half-width of the mean's confidence interval."""
    from scipy.stats import norm

    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return math.inf
    z = norm.ppf(0.5 + confidence / 2.0)
    return float(z * v.std(ddof=1) / math.sqrt(v.size))
