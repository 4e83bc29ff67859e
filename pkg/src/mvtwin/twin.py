"""Digital twin of a distribution transformer's MV terminals.

LV samples are referred to the MV side through the (tapped) winding ratio
and pushed through the discretized lumped-series model: a series R_S/L_S
branch followed by a shunt R_M/L_M branch at the MV terminal. Three
single-phase twins are then combined according to the vector group.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .waveform import ThreePhaseFrame

VECTOR_GROUPS = ("Yy0", "Dy1", "Dy11")
FAULT_TYPES = ("LG", "LL", "LLG", "none")
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class TransformerParams:
    """Nameplate and equivalent-circuit constants of a three-phase transformer.

    ``v1_rated``/``v2_rated`` are line-to-line LV/MV ratings and ``s_rated``
    the three-phase rating. Winding impedances are per-unit on the winding
    base; inductances are per-unit reactances at ``base_frequency``.
    """

    s_rated: float
    v1_rated: float
    v2_rated: float
    r1: float
    l1: float
    r2: float
    l2: float
    rm: float
    lm: float
    tap_ratio: float = 1.0
    vector_group: str = "Yy0"
    base_frequency: float = 50.0
    tap_range: tuple[float, float] = (0.9, 1.1)

    def __post_init__(self):
        if self.vector_group not in VECTOR_GROUPS:
            raise ConfigurationError(f"unknown vector group {self.vector_group!r}")
        for name in ("s_rated", "v1_rated", "v2_rated", "r1", "l1", "r2", "l2",
                     "rm", "lm", "tap_ratio", "base_frequency"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigurationError(f"{name} must be positive and finite, got {val}")
        if not self.v1_rated < self.v2_rated:
            raise ConfigurationError("side 1 must be the LV side (v1_rated < v2_rated)")

    @property
    def delta_mv(self) -> bool:
        return self.vector_group.startswith("D")

    @property
    def mv_winding_voltage(self) -> float:
        """Rated RMS voltage across one MV winding."""
        return self.v2_rated if self.delta_mv else self.v2_rated / SQRT3

    @property
    def lv_winding_voltage(self) -> float:
        return self.v1_rated / SQRT3

    @property
    def winding_ratio(self) -> float:
        """Untapped MV/LV turns ratio of one phase unit."""
        return self.mv_winding_voltage / self.lv_winding_voltage

    @property
    def ratio(self) -> float:
        return self.winding_ratio * self.tap_ratio

    @property
    def z_base(self) -> float:
        """Base impedance of one MV winding (ohm)."""
        return self.mv_winding_voltage**2 / (self.s_rated / 3.0)

    @property
    def z_base_lv(self) -> float:
        return self.lv_winding_voltage**2 / (self.s_rated / 3.0)

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.base_frequency

    # MV-referred lumped constants; the LV winding is referred through the
    # tapped ratio, so these move with the tap.
    @property
    def series_resistance(self) -> float:
        return (self.r2 + self.r1 * self.tap_ratio**2) * self.z_base

    @property
    def series_inductance(self) -> float:
        return (self.l2 + self.l1 * self.tap_ratio**2) * self.z_base / self.omega0

    @property
    def shunt_resistance(self) -> float:
        return self.rm * self.z_base

    @property
    def shunt_inductance(self) -> float:
        return self.lm * self.z_base / self.omega0

    def winding_elements(self) -> dict[str, float]:
        """Physical element values of the full T model of one phase unit."""
        return {
            "R1": self.r1 * self.z_base_lv,
            "L1": self.l1 * self.z_base_lv / self.omega0,
            "R2": self.r2 * self.z_base,
            "L2": self.l2 * self.z_base / self.omega0,
            "RM": self.shunt_resistance,
            "LM": self.shunt_inductance,
        }

    @property
    def rated_mv_line_current(self) -> float:
        return self.s_rated / (SQRT3 * self.v2_rated)

    @property
    def rated_lv_current(self) -> float:
        return self.s_rated / (SQRT3 * self.v1_rated)


SIM_50KVA = TransformerParams(
    s_rated=50e3, v1_rated=400.0, v2_rated=20e3,
    r1=0.0075, l1=0.02, r2=0.0075, l2=0.02, rm=500.0, lm=500.0,
    vector_group="Dy11",
)
FIELD_630KVA = TransformerParams(
    s_rated=630e3, v1_rated=400.0, v2_rated=20.5e3,
    r1=0.0035, l1=0.0233, r2=0.0035, l2=0.0233, rm=500.0, lm=500.0,
    vector_group="Dy11",
)


def set_tap(params: TransformerParams, tap_ratio: float) -> TransformerParams:
    lo, hi = params.tap_range
    if not lo <= tap_ratio <= hi:
        raise ConfigurationError(f"tap {tap_ratio} outside admissible range [{lo}, {hi}]")
    return replace(params, tap_ratio=tap_ratio)


def refer_to_mv(lv_u, lv_i, params: TransformerParams):
    a = params.ratio
    return lv_u * a, lv_i / a


@dataclass
class TwinState:
    prev_i1_referred: float = 0.0
    prev_u2: float = 0.0
    initialized: bool = False


def twin_step(
    state: TwinState,
    u1_ref: float,
    i1_ref: float,
    params: TransformerParams,
    fs: float,
    r_scale: float = 1.0,
) -> tuple[float, float, bool]:
    """Advance one sample. Returns ``(u2, i2, warmup)``.

    On the first sample there is no history; the difference terms are taken
    as zero and the output is flagged as warm-up.
    """
    if not fs > 0:
        raise ConfigurationError("fs must be positive")
    warmup = not state.initialized
    prev_i = i1_ref if warmup else state.prev_i1_referred
    u2 = (u1_ref + r_scale * params.series_resistance * i1_ref
          + params.series_inductance * (i1_ref - prev_i) * fs)
    prev_u = u2 if warmup else state.prev_u2
    i2 = (u2 / (r_scale * params.shunt_resistance)
          + (u2 - prev_u) / (params.shunt_inductance * fs) + i1_ref)
    state.prev_i1_referred = i1_ref
    state.prev_u2 = u2
    state.initialized = True
    return u2, i2, warmup


def twin_arrays(
    u1_ref: np.ndarray,
    i1_ref: np.ndarray,
    params: TransformerParams,
    fs: float,
    state: TwinState | None = None,
    r_scale: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`twin_step` over a block of referred samples.

    ``state`` (if given) supplies the history before the block and is
    updated to the end of it, so blocks can be chained.
    """
    u1 = np.asarray(u1_ref, dtype=float)
    i1 = np.asarray(i1_ref, dtype=float)
    state = TwinState() if state is None else state
    warmup = np.zeros(u1.shape, dtype=bool)
    prev_i = np.empty_like(i1)
    prev_i[1:] = i1[:-1]
    if state.initialized:
        prev_i[0] = state.prev_i1_referred
    else:
        prev_i[0] = i1[0]
        warmup[0] = True
    u2 = (u1 + r_scale * params.series_resistance * i1
          + params.series_inductance * (i1 - prev_i) * fs)
    prev_u = np.empty_like(u2)
    prev_u[1:] = u2[:-1]
    prev_u[0] = state.prev_u2 if state.initialized else u2[0]
    i2 = (u2 / (r_scale * params.shunt_resistance)
          + (u2 - prev_u) / (params.shunt_inductance * fs) + i1)
    state.prev_i1_referred = float(i1[-1])
    state.prev_u2 = float(u2[-1])
    state.initialized = True
    return u2, i2, warmup


@dataclass
class DigitalTwin:
    """Streaming three-phase twin for one transformer.

    Feed LV phase-to-neutral voltages and line currents, shape ``(3, N)``.
    Parameter swaps (tap changes) take effect at the next block boundary.
    """

    params: TransformerParams
    fs: float
    states: list[TwinState] = field(default_factory=lambda: [TwinState() for _ in range(3)])

    def set_params(self, params: TransformerParams) -> None:
        # the LV current is continuous across a tap change; re-refer its
        # history so the next difference term does not see a ratio jump
        scale = self.params.ratio / params.ratio
        for s in self.states:
            s.prev_i1_referred *= scale
        self.params = params

    def process(self, u_lv: np.ndarray, i_lv: np.ndarray, r_scale: float = 1.0):
        """Return the MV :class:`ThreePhaseFrame` and the warm-up mask."""
        u_lv = np.atleast_2d(np.asarray(u_lv, dtype=float))
        i_lv = np.atleast_2d(np.asarray(i_lv, dtype=float))
        u2 = np.empty_like(u_lv)
        i2 = np.empty_like(i_lv)
        warm = np.zeros(u_lv.shape[1], dtype=bool)
        for k in range(3):
            u1r, i1r = refer_to_mv(u_lv[k], i_lv[k], self.params)
            u2[k], i2[k], w = twin_arrays(u1r, i1r, self.params, self.fs,
                                          self.states[k], r_scale)
            warm |= w
        return compose_three_phase(u2, i2, self.params.vector_group), warm


def compose_three_phase(u2, i2, vector_group: str) -> ThreePhaseFrame:
    """Combine per-phase MV winding outputs into terminal quantities.

    For delta MV windings the phase voltages are the zero-sequence-free
    estimate ``(w_X - w_Y) / 3``: the winding voltages carry no common-mode
    component, so a neutral shift on the MV network is invisible here.
    """
    u2 = np.asarray(u2, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    if u2.shape[0] != 3 or i2.shape[0] != 3:
        raise ConfigurationError("expected three per-phase outputs")
    a, b, c = 0, 1, 2
    if vector_group == "Yy0":
        u = u2.copy()
        i = i2.copy()
        u_ll = np.stack([u[a] - u[b], u[b] - u[c], u[c] - u[a]])
    elif vector_group == "Dy1":
        # winding A spans terminals A->B
        i = np.stack([i2[a] - i2[c], i2[b] - i2[a], i2[c] - i2[b]])
        u = np.stack([u2[a] - u2[c], u2[b] - u2[a], u2[c] - u2[b]]) / 3.0
        u_ll = u2.copy()
    elif vector_group == "Dy11":
        # winding A spans terminals A->C
        i = np.stack([i2[a] - i2[b], i2[b] - i2[c], i2[c] - i2[a]])
        u = np.stack([u2[a] - u2[b], u2[b] - u2[c], u2[c] - u2[a]]) / 3.0
        u_ll = -np.stack([u2[b], u2[c], u2[a]])
    else:
        raise ConfigurationError(f"unknown vector group {vector_group!r}")
    return ThreePhaseFrame(u_ll=u_ll, i=i, u=u)


def winding_terminals(vector_group: str) -> list[tuple[int, int | None]]:
    """MV terminal pair ``(dot, other)`` of each winding; ``None`` is the star point."""
    if vector_group == "Yy0":
        return [(0, None), (1, None), (2, None)]
    if vector_group == "Dy1":
        return [(0, 1), (1, 2), (2, 0)]
    if vector_group == "Dy11":
        return [(0, 2), (1, 0), (2, 1)]
    raise ConfigurationError(f"unknown vector group {vector_group!r}")


class Observability(enum.Enum):
    FULLY_OBSERVABLE = "FullyObservable"
    PHASE_VOLTAGES_UNOBSERVABLE = "PhaseVoltagesUnobservable"


@dataclass(frozen=True)
class FaultContext:
    fault_type: str = "none"
    fault_side: str = "MV"
    substation_mv_grounded: bool = True
    tf_vector_group: str = "Dy11"
    tf_lv_grounded: bool = True
    tf_mv_grounded: bool = False

    def __post_init__(self):
        if self.fault_type not in FAULT_TYPES:
            raise ConfigurationError(f"unknown fault type {self.fault_type!r}")
        if self.fault_side not in ("MV", "LV"):
            raise ConfigurationError(f"unknown fault side {self.fault_side!r}")
        if self.tf_vector_group not in VECTOR_GROUPS:
            raise ConfigurationError(f"unknown vector group {self.tf_vector_group!r}")
        if self.tf_vector_group.startswith("D"):
            # a delta winding has no star point to ground
            object.__setattr__(self, "tf_mv_grounded", False)


def classify_fault_observability(ctx: FaultContext) -> Observability:
    """Predict whether MV phase voltages survive the fault in the twin.

    Line-to-line voltages, line currents and powers are always observable;
    only the zero-sequence part of the MV phase voltages can be lost.
    """
    if ctx.fault_type == "none":
        return Observability.FULLY_OBSERVABLE
    if ctx.fault_side == "LV":
        return Observability.PHASE_VOLTAGES_UNOBSERVABLE
    if ctx.fault_type == "LL" or not ctx.substation_mv_grounded:
        return Observability.FULLY_OBSERVABLE
    if ctx.tf_vector_group.startswith("D"):
        return Observability.PHASE_VOLTAGES_UNOBSERVABLE
    if ctx.tf_lv_grounded and ctx.tf_mv_grounded:
        return Observability.FULLY_OBSERVABLE
    return Observability.PHASE_VOLTAGES_UNOBSERVABLE
