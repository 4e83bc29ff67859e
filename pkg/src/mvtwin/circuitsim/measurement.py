"""Measurement-device model: resampling plus bounded random error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..waveform import SampledWaveform

NOISE_MODES = ("sample", "gain")


@dataclass
class MeasurementModel:
    """Sampling device with multiplicative error uniform in ``[-a, +a]``.

    ``mode="sample"`` draws a fresh error for every sample. ``mode="gain"``
    draws one error per channel and record, i.e. a constant magnitude
    (calibration) error, which is how instrument accuracy classes are
    usually specified.
    """

    fs: float
    voltage_accuracy: float = 0.001
    current_accuracy: float = 0.01
    seed: int | np.random.SeedSequence | None = 0
    mode: str = "sample"

    def __post_init__(self):
        if not self.fs > 0:
            raise ConfigurationError("fs must be positive")
        if self.voltage_accuracy < 0 or self.current_accuracy < 0:
            raise ConfigurationError("accuracies must be non-negative")
        if self.mode not in NOISE_MODES:
            raise ConfigurationError(f"mode must be one of {NOISE_MODES}")
        self.rng = np.random.default_rng(self.seed)

    def accuracy(self, unit: str) -> float:
        return self.voltage_accuracy if unit == "V" else self.current_accuracy

    def sample_times(self, t_end: float, t0: float = 0.0) -> np.ndarray:
        n = int(np.floor((t_end - t0) * self.fs + 1e-9)) + 1
        return t0 + np.arange(n) / self.fs

    def resample(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.size < 2:
            raise ConfigurationError("need at least two internal samples")
        internal_fs = 1.0 / (t[1] - t[0])
        if self.fs * 2.0 > internal_fs * (1 + 1e-9):
            raise ConfigurationError(
                f"fs={self.fs:g} Hz exceeds half the internal rate {internal_fs:g} Hz")
        ts = self.sample_times(t[-1], t[0])
        return np.interp(ts, t, x)

    def perturb(self, x: np.ndarray, unit: str) -> np.ndarray:
        a = self.accuracy(unit)
        if a == 0.0:
            return x.copy()
        if self.mode == "sample":
            err = self.rng.uniform(-a, a, size=x.shape)
        else:
            err = self.rng.uniform(-a, a, size=x.shape[:-1] + (1,))
        return x * (1.0 + err)

    def measure(self, t: np.ndarray, x: np.ndarray, unit: str = "V") -> SampledWaveform:
        """Sample one internal-step signal; consumes the model's RNG stream."""
        y = self.perturb(self.resample(t, x), unit)
        return SampledWaveform(self.fs, y, t0=float(t[0]), unit=unit)

    def measure_many(self, t: np.ndarray, xs: np.ndarray, unit: str = "V") -> np.ndarray:
        """Sample a stack of signals ``(k, n_internal)``; returns ``(k, n)``."""
        y = np.stack([self.resample(t, x) for x in np.atleast_2d(xs)])
        return self.perturb(y, unit)
