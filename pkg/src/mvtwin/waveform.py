"""Sampled signals and the quantities derived from them.

Everything here is a pure function of immutable inputs. Windows are given
either as a ``slice`` of sample indices, a ``(start, stop)`` tuple, or
``None`` for the whole record.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    DegenerateSignalError,
    InsufficientDataError,
    ShapeError,
    WindowError,
)

Window = Union[slice, tuple[int, int], None]

# amplitude below which a fundamental phasor has no meaningful angle
PHASOR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SampledWaveform:
    """Uniformly sampled real signal; sample ``n`` sits at ``t0 + n / fs``."""

    fs: float
    samples: np.ndarray
    t0: float = 0.0
    unit: str = ""

    def __post_init__(self):
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        arr = np.array(self.samples, dtype=float, copy=True).ravel()
        if arr.size == 0:
            raise ValueError("samples must be non-empty")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def window(self, window: Window) -> np.ndarray:
        return self.samples[resolve_window(window, self.n)]

    def with_samples(self, samples) -> "SampledWaveform":
        return SampledWaveform(self.fs, samples, self.t0, self.unit)

    def __neg__(self) -> "SampledWaveform":
        return self.with_samples(-self.samples)

    def __mul__(self, c: float) -> "SampledWaveform":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ThreePhaseFrame:
    """Three-phase voltages and currents on one transformer side.

    Arrays have shape ``(3, N)`` (or ``(3,)`` for a single sample), rows in
    A, B, C order. ``u_ll`` holds AB, BC, CA. ``u`` is ``None`` when the
    winding connection does not define phase-to-neutral voltages.
    """

    u_ll: np.ndarray
    i: np.ndarray
    u: np.ndarray | None = None

    def __post_init__(self):
        for name in ("u_ll", "i", "u"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float)
            if arr.shape[0] != 3:
                raise ShapeError(f"{name} must have three rows, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided DFT in sinusoid-amplitude scaling.

    A sinusoid ``a*cos(2*pi*f*t + phi)`` with ``f`` on a bin reports
    ``a*exp(1j*phi)`` at that bin. ``leakage`` is set when the window did
    not span a whole number of fundamental cycles.
    """

    freqs: np.ndarray
    amplitudes: np.ndarray
    n_samples: int
    leakage: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 0.0

    def magnitude_at(self, freq: float) -> float:
        k = int(round(freq / self.df))
        if not 0 <= k < self.freqs.size:
            raise WindowError(f"{freq} Hz is outside the spectrum")
        return float(abs(self.amplitudes[k]))

    def harmonic(self, order: int, f0: float = 50.0) -> complex:
        return complex(self.amplitudes[int(round(order * f0 / self.df))])


def resolve_window(window: Window, n: int) -> slice:
    if window is None:
        return slice(0, n)
    if isinstance(window, slice):
        if window.step not in (None, 1):
            raise WindowError("strided windows are not supported")
        start = 0 if window.start is None else window.start
        stop = n if window.stop is None else window.stop
    else:
        start, stop = window
    if start < 0 or stop > n or stop <= start:
        raise WindowError(f"window [{start}, {stop}) invalid for {n} samples")
    return slice(int(start), int(stop))


def _pair(u: SampledWaveform, i: SampledWaveform, window: Window):
    if u.fs != i.fs or u.n != i.n or u.t0 != i.t0:
        raise ShapeError(
            f"signals differ: fs {u.fs}/{i.fs}, length {u.n}/{i.n}, t0 {u.t0}/{i.t0}"
        )
    sl = resolve_window(window, u.n)
    return u.samples[sl], i.samples[sl]


def rms(w: SampledWaveform, window: Window = None) -> float:
    x = w.window(window)
    return float(np.sqrt(np.mean(x * x)))


def active_power(u: SampledWaveform, i: SampledWaveform, window: Window = None) -> float:
    """Mean of the instantaneous product over the window.

    Only equals the physical active power when the window spans a whole
    number of fundamental cycles.
    """
    x, y = _pair(u, i, window)
    return float(np.mean(x * y))


def fundamental_phasor(x: np.ndarray, fs: float, f0: float) -> complex:
    """Peak-amplitude phasor of the ``f0`` component by single-bin projection."""
    n = np.arange(x.size)
    return complex(2.0 / x.size * np.sum(x * np.exp(-2j * np.pi * f0 * n / fs)))


def reactive_power(
    u: SampledWaveform,
    i: SampledWaveform,
    window: Window = None,
    f0: float | None = None,
) -> float:
    """Fundamental-frequency reactive power, positive for lagging current.

    ``f0`` defaults to the zero-crossing estimate of ``u``; pass it
    explicitly for windows shorter than ten cycles.
    """
    x, y = _pair(u, i, window)
    if f0 is None:
        f0 = estimate_frequency(u.with_samples(x))
    U1 = fundamental_phasor(x, u.fs, f0)
    I1 = fundamental_phasor(y, u.fs, f0)
    if abs(U1) < PHASOR_FLOOR or abs(I1) < PHASOR_FLOOR:
        raise DegenerateSignalError("fundamental amplitude below numeric floor")
    # peak phasors: |U1||I1|/2 == U_rms * I_rms
    return float(abs(U1) * abs(I1) / 2.0 * np.sin(np.angle(U1) - np.angle(I1)))


def zero_crossings(w: SampledWaveform) -> np.ndarray:
    """Times of positive-going zero crossings, linearly interpolated."""
    x = w.samples
    idx = np.flatnonzero((x[:-1] < 0.0) & (x[1:] >= 0.0))
    frac = x[idx] / (x[idx] - x[idx + 1])
    return w.t0 + (idx + frac) / w.fs


def estimate_frequency(w: SampledWaveform, periods: int = 10) -> float:
    """Frequency from ``periods + 1`` consecutive positive-going crossings."""
    tc = zero_crossings(w)
    if tc.size < periods + 1:
        raise InsufficientDataError(
            f"need {periods + 1} positive-going crossings, found {tc.size}"
        )
    return periods / float(tc[periods] - tc[0])


def spectrum(w: SampledWaveform, window: Window = None, f0: float = 50.0) -> Spectrum:
    x = w.window(window)
    n = x.size
    if n < 2:
        raise WindowError("spectrum needs at least two samples")
    amp = np.fft.rfft(x) / n
    amp[1:] *= 2.0
    if n % 2 == 0:
        amp[-1] /= 2.0
    cycles = n * f0 / w.fs
    leakage = abs(cycles - round(cycles)) > 1e-6 or round(cycles) == 0
    return Spectrum(np.fft.rfftfreq(n, 1.0 / w.fs), amp, n, leakage)


def spectrum_energy(s: Spectrum) -> float:
    """Sum of squared samples recovered from a :class:`Spectrum` (Parseval)."""
    a = np.abs(s.amplitudes) ** 2
    weights = np.full(a.size, 0.5)
    weights[0] = 1.0
    if s.n_samples % 2 == 0:
        weights[-1] = 1.0
    return float(s.n_samples * np.sum(weights * a))
