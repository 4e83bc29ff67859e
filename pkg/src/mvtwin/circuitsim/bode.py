"""Frequency response of the full T model versus the twin's lumped model.

Single-phase, everything referred to the MV winding, ideal source. Circuit
``"a"`` is the T model (series, shunt, series); circuit ``"b"`` puts the
whole series impedance behind a shunt at the source terminal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..twin import TransformerParams
from .scenario import rated_load

CIRCUITS = ("a", "b")


@dataclass(frozen=True)
class BodeTable:
    circuit: str
    freqs: np.ndarray
    voltage_gain: np.ndarray  # complex V_load / V_source
    current_gain: np.ndarray  # complex I_load / I_source

    @property
    def voltage_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.voltage_gain))

    @property
    def current_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.current_gain))

    @property
    def voltage_phase(self) -> np.ndarray:
        return np.degrees(np.angle(self.voltage_gain))

    @property
    def current_phase(self) -> np.ndarray:
        return np.degrees(np.angle(self.current_gain))


def _shunt(params: TransformerParams, w: np.ndarray) -> np.ndarray:
    # R_M || jwL_M; at DC the inductor shorts the branch
    zl = 1j * w * params.shunt_inductance
    with np.errstate(divide="ignore", invalid="ignore"):
        zm = params.shunt_resistance * zl / (params.shunt_resistance + zl)
    return np.where(w == 0, 0.0, zm)


def transfer_function(
    circuit: str,
    params: TransformerParams,
    load: tuple[float, float],
    freqs,
    series_scale: float = 1.0,
) -> BodeTable:
    """Source-to-load voltage and current gains of one circuit model.

    ``load`` is the LV per-phase series ``(R, L)``; it is referred to the MV
    winding through the tapped ratio. ``series_scale`` multiplies all series
    elements (0 gives the ideal-transformer limit).
    """
    if circuit not in CIRCUITS:
        raise ConfigurationError(f"circuit must be one of {CIRCUITS}")
    f = np.atleast_1d(np.asarray(freqs, dtype=float))
    if np.any(f < 0):
        raise ConfigurationError("frequencies must be non-negative")
    w = 2.0 * math.pi * f
    n2 = params.ratio**2
    el = params.winding_elements()
    zl = (load[0] + 1j * w * load[1]) * n2
    zm = _shunt(params, w)
    if circuit == "a":
        z2 = series_scale * (el["R2"] + 1j * w * el["L2"])
        z1 = series_scale * (el["R1"] + 1j * w * el["L1"]) * n2
        zb = z1 + zl
        zp = _parallel(zm, zb)
        vm = zp / (z2 + zp)
        vg = vm * zl / zb
        # i_load / i_source = zm / (zm + zb) (current divider)
        ig = _divide(zm, zm + zb)
    else:
        zs = series_scale * (params.series_resistance + 1j * w * params.series_inductance)
        vg = zl / (zs + zl)
        ig = _divide(zm, zm + zs + zl)
    return BodeTable(circuit, f, vg, ig)


def _parallel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a * b / (a + b)
    return np.where(a == 0, 0.0, out)


def _divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den == 0, 0.0, num / den)


def bode_pair(params: TransformerParams, load_fraction: float, freqs, pf: float = 0.8):
    """Tables for circuits ``a`` and ``b`` at a fraction of rated load."""
    load = rated_load(params, load_fraction, pf)
    return {c: transfer_function(c, params, load, freqs) for c in CIRCUITS}
