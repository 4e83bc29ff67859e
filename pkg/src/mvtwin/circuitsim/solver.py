"""Fixed-step trapezoidal transient solver and complex phasor solver.

Inductors use the trapezoidal companion model ``i(t+dt) = G v(t+dt) + h(t)``
with ``G = dt / (2L)`` and ``h = i + G v``. Between switching events the
nodal matrix is constant, so the step reduces to a small linear recurrence
on the history vector, run by a compiled kernel. After each event two
backward-Euler half steps (same matrix) damp the trapezoidal ringing.
The run starts in the exact sinusoidal steady state of the discretized
network, so periodic sources produce periodic trajectories from t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import TopologyError
from .netlist import MNA, Netlist, check_conditioning

Probe = tuple  # ("v", a, b) or ("i", element_name)


@numba.njit(cache=True)
def _recurrence(A, C, OA, OC, g2, h, E, out):
    """Advance the history vector over ``E.shape[0]`` steps.

    ``v_L = A h + C e``, ``out = OA h + OC e``, ``h += g2 * v_L``.
    Returns the last ``v_L``; ``h`` is updated in place.
    """
    nl = h.shape[0]
    ns = E.shape[1]
    no = OA.shape[0]
    vl = np.zeros(nl)
    for k in range(E.shape[0]):
        for r in range(no):
            acc = 0.0
            for c in range(nl):
                acc += OA[r, c] * h[c]
            for c in range(ns):
                acc += OC[r, c] * E[k, c]
            out[k, r] = acc
        for r in range(nl):
            acc = 0.0
            for c in range(nl):
                acc += A[r, c] * h[c]
            for c in range(ns):
                acc += C[r, c] * E[k, c]
            vl[r] = acc
        for r in range(nl):
            h[r] += g2[r] * vl[r]
    return vl


@dataclass
class SimResult:
    t: np.ndarray
    signals: dict[str, np.ndarray]
    dt: float
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.signals[name]


def _probe_rows(mna: MNA, probes: dict[str, Probe], t: float, g: np.ndarray):
    no = len(probes)
    Ox = np.zeros((no, mna.size))
    Oh = np.zeros((no, len(mna.inductors)))
    for r, spec in enumerate(probes.values()):
        if spec[0] == "v":
            Ox[r] = mna.voltage_probe(spec[1], spec[2])
        elif spec[0] == "i":
            ox, oh = mna.current_probe(spec[1], t)
            if ox is None:
                k = int(np.argmax(oh))
                ox = g[k] * mna.D[k]
            Ox[r] = ox
            Oh[r] = oh
        else:
            raise ValueError(f"unknown probe kind {spec[0]!r}")
    return Ox, Oh


def phasor_solve(netlist: Netlist, f: float, t: float = 0.0,
                 warp_dt: float | None = None, mna: MNA | None = None) -> np.ndarray:
    """Complex MNA solution for the ``f`` Hz source components.

    With ``warp_dt`` the inductor reactance is the one the trapezoidal rule
    realizes at that step, giving the discrete-time steady state.
    """
    mna = mna or MNA(netlist)
    w = 2.0 * math.pi * f
    if f == 0.0:
        def adm(L):
            return 1e12
    elif warp_dt is None:
        def adm(L):
            return 1.0 / (1j * w * L)
    else:
        x_scale = 2.0 / warp_dt * math.tan(w * warp_dt / 2.0)

        def adm(L):
            return 1.0 / (1j * x_scale * L)
    Y = mna.matrix(t, adm, dtype=complex)
    b = np.zeros(mna.size, dtype=complex)
    for k, s in enumerate(mna.sources):
        b[mna.src_row[s.name]] = s.phasor(f)
    try:
        return np.linalg.solve(Y, b)
    except np.linalg.LinAlgError as exc:
        raise TopologyError(f"singular phasor matrix at {f} Hz") from exc


def source_frequencies(netlist: Netlist) -> list[float]:
    freqs = []
    for s in netlist.elements:
        for f, _, _ in getattr(s, "components", ()):
            if not any(math.isclose(f, g, rel_tol=1e-12) for g in freqs):
                freqs.append(f)
    return freqs


def _steady_state(mna: MNA, netlist: Netlist, t: float, dt: float):
    """Time-domain unknowns and inductor currents at ``t`` (sources' sinusoids)."""
    x = np.zeros(mna.size)
    il = np.zeros(len(mna.inductors))
    for f in source_frequencies(netlist):
        X = phasor_solve(netlist, f, 0.0, warp_dt=dt, mna=mna)
        w = 2.0 * math.pi * f
        rot = np.exp(1j * w * t)
        xs = X * rot
        x += xs.imag
        # i_L = V_L / (j X_L) with the warped reactance
        x_scale = 2.0 / dt * math.tan(w * dt / 2.0)
        vl = mna.D @ xs
        il += (vl / (1j * x_scale * mna.inductances(0.0))).imag
    return x, il


def _source_values(mna: MNA, t: float) -> np.ndarray:
    return np.array([float(s(np.array([t]))[0]) for s in mna.sources])


def _be_halfsteps(mna: MNA, Yinv, Ox, Oh, g, il, t: float, dt: float):
    """Two backward-Euler half steps from ``t``; returns ``(h, out, il)`` at ``t + dt``."""
    for frac in (0.5, 1.0):
        x = Yinv @ (mna.Bh @ il + mna.Bs @ _source_values(mna, t + frac * dt))
        vl = mna.D @ x
        out = Ox @ x + Oh @ il
        il = g * vl + il
    return il + g * vl, out, il


def simulate(
    netlist: Netlist,
    dt: float,
    duration: float,
    probes: dict[str, Probe],
    max_dt: float = 2e-6,
) -> SimResult:
    """Run the transient and return the probed signals on the ``dt`` grid.

    Probes are ``("v", a, b)`` for ``v(a) - v(b)`` or ``("i", name)`` for an
    element current. Event times are snapped to the step grid; the new
    element values apply to every step after the snapped instant.
    """
    if dt > max_dt * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the {max_dt} s limit")
    netlist.check_reachable()
    mna = MNA(netlist)
    n_steps = int(round(duration / dt))
    t = np.arange(n_steps + 1) * dt
    ns = len(mna.sources)
    E = np.zeros((t.size, ns))
    for k, s in enumerate(mna.sources):
        E[:, k] = s(t)
    out = np.zeros((t.size, len(probes)))
    nl = len(mna.inductors)

    events = sorted({int(round(te / dt)) for te in netlist.event_times()} - {0})
    events = [k for k in events if k < n_steps]
    has_step = any(s.step != 0.0 for s in mna.sources)

    if has_step:
        x = np.zeros(mna.size)
        il = np.zeros(nl)
        restart = {0, *events}
    else:
        x, il = _steady_state(mna, netlist, 0.0, dt)
        restart = set(events)
    g0 = dt / (2.0 * mna.inductances(0.0))
    Ox, Oh = _probe_rows(mna, probes, 0.0, g0)
    out[0] = Ox @ x + Oh @ (il - g0 * (mna.D @ x))
    h = il + g0 * (mna.D @ x)

    k0 = 0
    for kb in events + [n_steps]:
        tm = t[k0] + 0.5 * dt
        g = dt / (2.0 * mna.inductances(tm))
        Y = mna.matrix(tm, lambda L: dt / (2.0 * L))
        check_conditioning(Y)
        Yinv = np.linalg.inv(Y)
        Ox, Oh = _probe_rows(mna, probes, tm, g)
        if k0 in restart:
            h, out[k0 + 1], il = _be_halfsteps(mna, Yinv, Ox, Oh, g, il, t[k0], dt)
            k0 += 1
        if kb > k0:
            A = mna.D @ Yinv @ mna.Bh
            C = mna.D @ Yinv @ mna.Bs
            OA = Ox @ Yinv @ mna.Bh + Oh
            OC = Ox @ Yinv @ mna.Bs
            seg = np.zeros((kb - k0, len(probes)))
            vl = _recurrence(A, C, OA, OC, 2.0 * g, h,
                             np.ascontiguousarray(E[k0 + 1:kb + 1]), seg)
            out[k0 + 1:kb + 1] = seg
            il = h - g * vl
        k0 = kb
    return SimResult(t, {name: out[:, r].copy() for r, name in enumerate(probes)}, dt)
