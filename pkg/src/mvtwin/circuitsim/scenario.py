"""Test-bench circuit: source, MV line, three-phase transformer, LV load.

Each phase unit is the full T model: MV series R2/L2, magnetizing R_M || L_M
across the ideal winding, LV series R1/L1. The MV windings are wired star
or delta per the vector group; star points and the source neutral are
solidly grounded, coil-grounded or left floating. Floating points
keep a very large guard resistor to ground so the nodal matrix stays
regular.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import ConfigurationError
from ..twin import SQRT3, TransformerParams, winding_terminals
from .netlist import (GROUND, IdealTransformer, Inductor, Netlist, Resistor, Switch,
                      VoltageSource)

PHASES = "abc"
GUARD_OHM = 1e8
FAULT_OHM = 1e-3
LINE_R = 2.0
LINE_L = 1e-3
GROUNDING = ("solid", "petersen", "none")


def load_harmonic_profile(path=None) -> list[tuple[int, float]]:
    """Read an ``order,percent`` table; returns ``(order, fraction)`` pairs."""
    if path is None:
        text = resources.files("mvtwin.data").joinpath("harmonics_default.csv").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out = []
    for rec in csv.DictReader(rows):
        order = int(rec["order"])
        frac = float(rec["percent"]) / 100.0
        if order < 2 or frac < 0:
            raise ConfigurationError(f"bad harmonic row {rec}")
        out.append((order, frac))
    return out


@dataclass
class SourceSpec:
    """Three-phase source EMF (phase-to-neutral peak amplitude)."""

    amplitude: float
    frequency: float = 50.0
    phase: float = 0.0
    harmonics: list[tuple[int, float, float]] = field(default_factory=list)
    asymmetry: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def nominal(cls, v_ll: float, **kw) -> "SourceSpec":
        return cls(amplitude=v_ll * math.sqrt(2.0) / SQRT3, **kw)

    def components(self, k: int) -> list[tuple[float, float, float]]:
        theta = self.phase - 2.0 * math.pi * k / 3.0
        amp = self.amplitude * self.asymmetry[k]
        comps = [(self.frequency, amp, theta)]
        for order, frac, ph in self.harmonics:
            if order < 2:
                raise ConfigurationError("harmonic orders start at 2")
            comps.append((order * self.frequency, amp * frac, order * theta + ph))
        return comps


@dataclass
class FaultSpec:
    fault_type: str = "LG"
    side: str = "MV"
    time: float = 0.2
    phases: str = "ab"
    resistance: float = FAULT_OHM

    def __post_init__(self):
        if self.fault_type not in ("LG", "LL", "LLG"):
            raise ConfigurationError(f"unknown fault type {self.fault_type!r}")
        if self.side not in ("MV", "LV"):
            raise ConfigurationError(f"unknown fault side {self.side!r}")
        self.resistance = max(self.resistance, FAULT_OHM)


@dataclass
class CircuitSpec:
    """Fully drawn description of one simulated test case.

    Loads are per-phase ``(R, L)`` on the LV side; ``load_post`` takes over
    at ``event_time``. ``tap_steps`` are ``(time, tap_ratio)`` pairs.
    """

    params: TransformerParams
    source: SourceSpec
    load_pre: list[tuple[float, float]]
    load_post: list[tuple[float, float]] | None = None
    event_time: float | None = None
    source_grounding: str = "solid"
    petersen_inductance: float = 1.0
    tf_mv_grounded: bool = False
    tf_lv_grounded: bool = True
    fault: FaultSpec | None = None
    tap_steps: tuple[tuple[float, float], ...] = ()
    line_r: float = LINE_R
    line_l: float = LINE_L

    def validate(self) -> None:
        if self.source_grounding not in GROUNDING:
            raise ConfigurationError(f"source_grounding must be one of {GROUNDING}")
        if self.params.delta_mv and self.tf_mv_grounded:
            raise ConfigurationError("a delta MV winding has no star point to ground")
        if len(self.load_pre) != 3 or (self.load_post is not None and len(self.load_post) != 3):
            raise ConfigurationError("loads need one (R, L) pair per phase")
        if (self.load_post is None) != (self.event_time is None):
            raise ConfigurationError("load_post and event_time must be given together")
        for R, L in self.load_pre + (self.load_post or []):
            if not (R > 0 and L > 0):
                raise ConfigurationError("load R and L must be positive")
        if self.source_grounding == "petersen" and not self.petersen_inductance > 0:
            raise ConfigurationError("petersen coil needs a positive inductance")


def build_scenario_circuit(spec: CircuitSpec) -> Netlist:
    """Netlist of the test bench; ``netlist.meta['probes']`` names the measurements."""
    spec.validate()
    p = spec.params
    el = p.winding_elements()
    net = Netlist()

    src_n = {"solid": GROUND}.get(spec.source_grounding, "src_n")
    if spec.source_grounding == "petersen":
        net.add(Inductor("Lpc", "src_n", GROUND, spec.petersen_inductance))
    elif spec.source_grounding == "none":
        net.add(Resistor("Rg_src", "src_n", GROUND, GUARD_OHM))

    for k, ph in enumerate(PHASES):
        net.add(VoltageSource(f"E_{ph}", f"src_{ph}", src_n, spec.source.components(k)))
        net.add(Resistor(f"Rln_{ph}", f"src_{ph}", f"ln_{ph}", spec.line_r))
        net.add(Inductor(f"Lln_{ph}", f"ln_{ph}", f"mv_{ph}", spec.line_l))

    mv_star = GROUND if spec.tf_mv_grounded else "mv_n"
    lv_star = GROUND if spec.tf_lv_grounded else "lv_n"
    if not p.delta_mv and not spec.tf_mv_grounded:
        net.add(Resistor("Rg_mv", "mv_n", GROUND, GUARD_OHM))
    if not spec.tf_lv_grounded:
        net.add(Resistor("Rg_lv", "lv_n", GROUND, GUARD_OHM))

    ratio_steps = tuple((t, p.winding_ratio * tap) for t, tap in spec.tap_steps)
    for k, (dot, other) in enumerate(winding_terminals(p.vector_group)):
        ph = PHASES[k]
        top = f"mv_{PHASES[dot]}"
        bottom = mv_star if other is None else f"mv_{PHASES[other]}"
        net.add(Resistor(f"R2_{ph}", top, f"w2_{ph}", el["R2"]))
        net.add(Inductor(f"L2_{ph}", f"w2_{ph}", f"wm_{ph}", el["L2"]))
        net.add(Resistor(f"RM_{ph}", f"wm_{ph}", bottom, el["RM"]))
        net.add(Inductor(f"LM_{ph}", f"wm_{ph}", bottom, el["LM"]))
        net.add(IdealTransformer(f"T_{ph}", f"wm_{ph}", bottom, f"lvi_{ph}", lv_star,
                                 p.ratio, ratio_steps))
        net.add(Resistor(f"R1_{ph}", f"lvi_{ph}", f"w1_{ph}", el["R1"]))
        net.add(Inductor(f"L1_{ph}", f"w1_{ph}", f"lv_{ph}", el["L1"]))

        R0, L0 = spec.load_pre[k]
        r_steps = l_steps = ()
        if spec.load_post is not None:
            R1_, L1_ = spec.load_post[k]
            r_steps = ((spec.event_time, R1_),)
            l_steps = ((spec.event_time, L1_),)
        net.add(Resistor(f"RL_{ph}", f"lv_{ph}", f"ld_{ph}", R0, r_steps))
        net.add(Inductor(f"LL_{ph}", f"ld_{ph}", lv_star, L0, l_steps))

    if spec.fault is not None:
        _add_fault(net, spec.fault)

    # phase voltages are taken against ground whenever the MV network has a
    # ground reference, otherwise against the source star point
    grounded_mv = spec.source_grounding != "none" or spec.tf_mv_grounded
    mv_ref = GROUND if grounded_mv else "src_n"
    probes = {}
    for k, ph in enumerate(PHASES):
        nxt = PHASES[(k + 1) % 3]
        probes[f"lv_u_{ph}"] = ("v", f"lv_{ph}", lv_star)
        probes[f"lv_ug_{ph}"] = ("v", f"lv_{ph}", GROUND)
        probes[f"lv_i_{ph}"] = ("i", f"L1_{ph}")
        probes[f"mv_u_{ph}"] = ("v", f"mv_{ph}", mv_ref)
        probes[f"mv_ull_{ph}"] = ("v", f"mv_{ph}", f"mv_{nxt}")
        probes[f"mv_wi_{ph}"] = ("i", f"L2_{ph}")
        probes[f"line_i_{ph}"] = ("i", f"Lln_{ph}")
    net.meta["probes"] = probes
    net.meta["spec"] = spec
    return net


def _add_fault(net: Netlist, fault: FaultSpec) -> None:
    prefix = "mv" if fault.side == "MV" else "lv"
    a, b = fault.phases[0], fault.phases[1]
    if fault.fault_type == "LG":
        pairs = [(f"{prefix}_{a}", GROUND)]
    elif fault.fault_type == "LL":
        pairs = [(f"{prefix}_{a}", f"{prefix}_{b}")]
    else:
        pairs = [(f"{prefix}_{a}", GROUND), (f"{prefix}_{b}", GROUND)]
    for n, (x, y) in enumerate(pairs):
        net.add(Switch(f"F{n}", x, y, close_time=fault.time, r_on=fault.resistance))


def terminal_currents(winding_currents: np.ndarray, vector_group: str) -> np.ndarray:
    """MV terminal currents (into the transformer) from the winding currents."""
    w = np.asarray(winding_currents, dtype=float)
    out = np.zeros_like(w)
    for k, (dot, other) in enumerate(winding_terminals(vector_group)):
        out[dot] += w[k]
        if other is not None:
            out[other] -= w[k]
    return out


def rated_load(params: TransformerParams, fraction: float = 1.0, pf: float = 0.8):
    """Per-phase series ``(R, L)`` drawing ``fraction`` of rated S at ``pf`` lagging."""
    z = params.v1_rated**2 / (fraction * params.s_rated)
    return z * pf, z * math.sqrt(1.0 - pf * pf) / params.omega0

