"""Linear lumped-element netlists and their modified nodal equations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, TopologyError

GROUND = "gnd"
# switch conductances below this count as open
OPEN = 0.0


@dataclass
class Resistor:
    name: str
    a: str
    b: str
    R: float
    steps: tuple[tuple[float, float], ...] = ()

    def value(self, t: float) -> float:
        v = self.R
        for t_step, new in self.steps:
            if t >= t_step:
                v = new
        return v


@dataclass
class Inductor:
    name: str
    a: str
    b: str
    L: float
    steps: tuple[tuple[float, float], ...] = ()

    def value(self, t: float) -> float:
        v = self.L
        for t_step, new in self.steps:
            if t >= t_step:
                v = new
        return v


@dataclass
class VoltageSource:
    """``v_a - v_b = step + sum(amp * sin(2*pi*f*t + phase))``.

    ``step`` switches on at t = 0; sinusoidal components are assumed to have
    been running forever (the simulation starts in their steady state).
    """

    name: str
    a: str
    b: str
    components: list[tuple[float, float, float]] = field(default_factory=list)
    step: float = 0.0

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.step, dtype=float)
        for f, amp, ph in self.components:
            out += amp * np.sin(2.0 * math.pi * f * t + ph)
        return out

    def phasor(self, f: float) -> complex:
        return sum(amp * np.exp(1j * ph) for ff, amp, ph in self.components
                   if math.isclose(ff, f, rel_tol=1e-12))


@dataclass
class IdealTransformer:
    """``v(p1) - v(p2) = ratio * (v(s1) - v(s2))``, power conserving."""

    name: str
    p1: str
    p2: str
    s1: str
    s2: str
    ratio: float
    steps: tuple[tuple[float, float], ...] = ()

    def value(self, t: float) -> float:
        v = self.ratio
        for t_step, new in self.steps:
            if t >= t_step:
                v = new
        return v


@dataclass
class Switch:
    """Resistive switch, closed on ``[close_time, open_time)``."""

    name: str
    a: str
    b: str
    close_time: float = math.inf
    open_time: float = math.inf
    r_on: float = 1e-3

    def conductance(self, t: float) -> float:
        return 1.0 / self.r_on if self.close_time <= t < self.open_time else OPEN


Element = Resistor | Inductor | VoltageSource | IdealTransformer | Switch


@dataclass
class Netlist:
    elements: list = field(default_factory=list)
    ground: str = GROUND
    meta: dict = field(default_factory=dict)

    def add(self, element) -> None:
        if any(e.name == element.name for e in self.elements):
            raise ConfigurationError(f"duplicate element name {element.name!r}")
        self.elements.append(element)

    def __getitem__(self, name: str):
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    def of_type(self, kind) -> list:
        return [e for e in self.elements if isinstance(e, kind)]

    @property
    def nodes(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.elements:
            terms = (e.p1, e.p2, e.s1, e.s2) if isinstance(e, IdealTransformer) else (e.a, e.b)
            for n in terms:
                if n != self.ground:
                    seen.setdefault(n, None)
        return list(seen)

    def event_times(self) -> list[float]:
        times = set()
        for e in self.elements:
            if isinstance(e, Switch):
                times.update(t for t in (e.close_time, e.open_time) if math.isfinite(t))
            elif isinstance(e, (Resistor, Inductor, IdealTransformer)):
                times.update(t for t, _ in e.steps)
        return sorted(t for t in times if t > 0)

    def check_reachable(self) -> None:
        """Every node must connect to ground through some element."""
        adj: dict[str, set[str]] = {}

        def link(x, y):
            adj.setdefault(x, set()).add(y)
            adj.setdefault(y, set()).add(x)

        for e in self.elements:
            if isinstance(e, IdealTransformer):
                link(e.p1, e.p2)
                link(e.s1, e.s2)
            else:
                link(e.a, e.b)
        seen = {self.ground}
        stack = [self.ground]
        while stack:
            for m in adj.get(stack.pop(), ()):
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        missing = [n for n in self.nodes if n not in seen]
        if missing:
            raise TopologyError(f"nodes without a path to ground: {missing}")


class MNA:
    """Index bookkeeping and matrix stamps for one netlist.

    Unknowns are node voltages, then voltage-source currents, then
    ideal-transformer primary currents.
    """

    def __init__(self, netlist: Netlist):
        self.netlist = netlist
        self.nodes = netlist.nodes
        self.node_index = {n: i for i, n in enumerate(self.nodes)}
        self.sources = netlist.of_type(VoltageSource)
        self.transformers = netlist.of_type(IdealTransformer)
        self.inductors = netlist.of_type(Inductor)
        self.resistors = netlist.of_type(Resistor)
        self.switches = netlist.of_type(Switch)
        nn = len(self.nodes)
        self.size = nn + len(self.sources) + len(self.transformers)
        self.src_row = {s.name: nn + k for k, s in enumerate(self.sources)}
        self.tf_row = {t.name: nn + len(self.sources) + k for k, t in enumerate(self.transformers)}
        # inductor incidence: v_L = D @ x
        self.D = np.zeros((len(self.inductors), self.size))
        for k, ind in enumerate(self.inductors):
            self._incidence(self.D[k], ind.a, ind.b)
        # history/current injection: b += Bh @ h, h flowing a -> b inside the inductor
        self.Bh = -self.D.T.copy()
        self.Bs = np.zeros((self.size, len(self.sources)))
        for k, s in enumerate(self.sources):
            self.Bs[self.src_row[s.name], k] = 1.0

    def idx(self, node: str) -> int:
        return -1 if node == self.netlist.ground else self.node_index[node]

    def _incidence(self, row: np.ndarray, a: str, b: str) -> None:
        ia, ib = self.idx(a), self.idx(b)
        if ia >= 0:
            row[ia] += 1.0
        if ib >= 0:
            row[ib] -= 1.0

    def _stamp_g(self, Y, a: str, b: str, g) -> None:
        ia, ib = self.idx(a), self.idx(b)
        if ia >= 0:
            Y[ia, ia] += g
        if ib >= 0:
            Y[ib, ib] += g
        if ia >= 0 and ib >= 0:
            Y[ia, ib] -= g
            Y[ib, ia] -= g

    def matrix(self, t: float, inductor_admittance, dtype=float) -> np.ndarray:
        """Nodal matrix with element values at time ``t``.

        ``inductor_admittance(L)`` returns the companion conductance (transient)
        or the complex admittance (phasor) of an inductor.
        """
        Y = np.zeros((self.size, self.size), dtype=dtype)
        for r in self.resistors:
            self._stamp_g(Y, r.a, r.b, 1.0 / r.value(t))
        for s in self.switches:
            g = s.conductance(t)
            if g != OPEN:
                self._stamp_g(Y, s.a, s.b, g)
        for ind in self.inductors:
            self._stamp_g(Y, ind.a, ind.b, inductor_admittance(ind.value(t)))
        for s in self.sources:
            row = self.src_row[s.name]
            for node, sign in ((s.a, 1.0), (s.b, -1.0)):
                i = self.idx(node)
                if i >= 0:
                    Y[i, row] += sign
                    Y[row, i] += sign
        for tf in self.transformers:
            row = self.tf_row[tf.name]
            n = tf.value(t)
            for node, kcl, kvl in ((tf.p1, 1.0, 1.0), (tf.p2, -1.0, -1.0),
                                   (tf.s1, -n, -n), (tf.s2, n, n)):
                i = self.idx(node)
                if i >= 0:
                    Y[i, row] += kcl
                    Y[row, i] += kvl
        return Y

    def inductances(self, t: float) -> np.ndarray:
        return np.array([ind.value(t) for ind in self.inductors])

    def current_probe(self, name: str, t: float):
        """Row vectors ``(ox, oh)`` with element current ``= ox @ x + oh @ h``.

        Positive current flows from terminal ``a`` to ``b`` through the
        element (for sources and transformers: into the ``+``/``p1`` terminal).
        ``h`` is the inductor history vector; the inductor conductance at
        ``t`` is folded in by the caller via :meth:`inductor_current_rows`.
        """
        ox = np.zeros(self.size)
        oh = np.zeros(len(self.inductors))
        e = self.netlist[name]
        if isinstance(e, Resistor):
            self._incidence(ox, e.a, e.b)
            ox /= e.value(t)
        elif isinstance(e, Switch):
            self._incidence(ox, e.a, e.b)
            ox *= e.conductance(t)
        elif isinstance(e, VoltageSource):
            ox[self.src_row[name]] = 1.0
        elif isinstance(e, IdealTransformer):
            ox[self.tf_row[name]] = 1.0
        elif isinstance(e, Inductor):
            k = self.inductors.index(e)
            oh[k] = 1.0
            ox = None  # conductance-dependent, see inductor_current_rows
        return ox, oh

    def voltage_probe(self, a: str, b: str) -> np.ndarray:
        ox = np.zeros(self.size)
        self._incidence(ox, a, b)
        return ox


def check_conditioning(Y: np.ndarray, limit: float = 1e14) -> None:
    cond = np.linalg.cond(Y)
    if not np.isfinite(cond) or cond > limit:
        raise TopologyError(f"nodal matrix is singular (condition number {cond:.3g}); "
                            "look for a floating subnetwork")
