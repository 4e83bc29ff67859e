"""Monte-Carlo trial pipeline: draw, simulate, measure, run the twin, score."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, replace

import numpy as np

from ..circuitsim.measurement import MeasurementModel
from ..circuitsim.scenario import (PHASES, CircuitSpec, FaultSpec, SourceSpec,
                                   build_scenario_circuit, load_harmonic_profile,
                                   rated_load, terminal_currents)
from ..circuitsim.solver import simulate
from ..errors import DegenerateSignalError, InsufficientDataError, TwinError
from ..metrics import QuantityError, TrialErrors, avg_error, event_window, max_point_error
from ..twin import DigitalTwin, ThreePhaseFrame, set_tap
from ..waveform import SampledWaveform, estimate_frequency
from .scenarios import ScenarioConfig

LOAD_R_RANGE = (0.75, 5.25)
LOAD_L_RANGE = (1.5e-3, 17e-3)
RATED_SPREAD = 0.1
LOW_SIGNAL_FRACTION = 0.05
FREQ_EVENT_CYCLES = 6
F0 = 50.0


class StageError(TwinError):
    """Failure inside one pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


def _seed(*parts) -> np.random.SeedSequence:
    words = [zlib.crc32(p.encode()) if isinstance(p, str) else int(p) for p in parts]
    return np.random.SeedSequence(words)


def circuit_rng(cfg: ScenarioConfig, trial: int) -> np.random.Generator:
    # keyed on the family so all sampling rates of a case see the same circuit
    return np.random.default_rng(_seed(cfg.seed, cfg.family, trial, 0))


def measurement_seed(cfg: ScenarioConfig, trial: int) -> np.random.SeedSequence:
    # instrument errors belong to the meter, not to its sampling rate, so the
    # rates of one family are compared with paired draws
    return _seed(cfg.seed, cfg.family, trial, 1)


def _draw_load(rng) -> tuple[float, float]:
    return float(rng.uniform(*LOAD_R_RANGE)), float(rng.uniform(*LOAD_L_RANGE))


def _z50(load) -> float:
    R, L = load
    return abs(complex(R, 2 * math.pi * F0 * L))


def draw_circuit(cfg: ScenarioConfig, rng: np.random.Generator) -> CircuitSpec:
    """Random operating conditions of one trial."""
    p = cfg.params
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    if cfg.load_mode == "rated":
        R0, L0 = rated_load(p)
        k = float(rng.uniform(1 - RATED_SPREAD, 1 + RATED_SPREAD))
        pre = [(R0 * k, L0 * k)] * 3
        post_one = None
    elif cfg.load_asymmetry:
        pre = [_draw_load(rng) for _ in PHASES]
        post_one = None
    else:
        a = _draw_load(rng)
        b = _draw_load(rng)
        if cfg.has_event:
            lo, hi = sorted((a, b), key=_z50)
            a, post_one = (lo, hi) if cfg.load_trajectory == "increase" else (hi, lo)
        else:
            post_one = None
        pre = [a] * 3
    post = [post_one] * 3 if post_one is not None else None

    asym = (1.0, 1.0, 1.0)
    if cfg.source_asymmetry > 0:
        s = cfg.source_asymmetry
        asym = tuple(float(x) for x in rng.uniform(1 - s, 1 + s, size=3))
    harmonics = [(h, frac, 0.0) for h, frac in load_harmonic_profile()] if cfg.harmonics else []
    source = SourceSpec.nominal(p.v2_rated, phase=phase, harmonics=harmonics, asymmetry=asym)

    fault = None
    if cfg.fault_type != "none":
        fault = FaultSpec(cfg.fault_type, cfg.fault_side, cfg.fault_time)
    taps = (cfg.tap_step,) if cfg.tap_step else ()
    return CircuitSpec(
        params=p, source=source, load_pre=pre, load_post=post,
        event_time=cfg.event_time if post is not None else None,
        source_grounding=cfg.source_grounding, tf_mv_grounded=cfg.tf_mv_grounded,
        tf_lv_grounded=cfg.tf_lv_grounded, fault=fault, tap_steps=taps,
    )


@dataclass
class SimulatedTrial:
    """Internal-step waveforms of one trial, each array shaped ``(3, n)``."""

    t: np.ndarray
    lv_u: np.ndarray
    lv_i: np.ndarray
    mv_ull: np.ndarray
    mv_u: np.ndarray
    mv_i: np.ndarray
    spec: CircuitSpec


def simulate_trial(cfg: ScenarioConfig, trial: int, spec: CircuitSpec | None = None
                   ) -> SimulatedTrial:
    """Simulate one trial; ``spec`` overrides the random draw."""
    try:
        if spec is None:
            spec = draw_circuit(cfg, circuit_rng(cfg, trial))
        net = build_scenario_circuit(spec)
    except Exception as exc:
        raise StageError("build", exc) from exc
    probes = net.meta["probes"]
    lv_key = "lv_u" if cfg.lv_voltage_reference == "neutral" else "lv_ug"
    wanted = {}
    for key in (lv_key, "lv_i", "mv_ull", "mv_u", "mv_wi"):
        for ph in PHASES:
            wanted[f"{key}_{ph}"] = probes[f"{key}_{ph}"]
    try:
        res = simulate(net, cfg.dt, cfg.duration, wanted)
    except Exception as exc:
        raise StageError("simulate", exc) from exc

    def stack(key):
        return np.stack([res[f"{key}_{ph}"] for ph in PHASES])

    return SimulatedTrial(
        t=res.t, lv_u=stack(lv_key), lv_i=stack("lv_i"), mv_ull=stack("mv_ull"),
        mv_u=stack("mv_u"), mv_i=terminal_currents(stack("mv_wi"), cfg.vector_group),
        spec=spec,
    )


@dataclass
class TrialWaveforms:
    """Sampled twin output and reference at ``fs`` for one trial."""

    fs: float
    twin: ThreePhaseFrame
    ref: ThreePhaseFrame
    lv_u: np.ndarray
    lv_i: np.ndarray


def sample_trial(cfg: ScenarioConfig, sim: SimulatedTrial, trial: int) -> TrialWaveforms:
    try:
        dev = MeasurementModel(cfg.fs, cfg.voltage_accuracy, cfg.current_accuracy,
                               seed=measurement_seed(cfg, trial), mode=cfg.noise_mode)
        u = dev.measure_many(sim.t, sim.lv_u, "V")
        i = dev.measure_many(sim.t, sim.lv_i, "A")
        clean = MeasurementModel(cfg.fs, 0.0, 0.0)
        ref = ThreePhaseFrame(u_ll=clean.measure_many(sim.t, sim.mv_ull),
                              i=clean.measure_many(sim.t, sim.mv_i),
                              u=clean.measure_many(sim.t, sim.mv_u))
    except Exception as exc:
        raise StageError("measure", exc) from exc
    try:
        twin = run_twin(cfg, u, i)
    except Exception as exc:
        raise StageError("twin", exc) from exc
    return TrialWaveforms(cfg.fs, twin, ref, u, i)


def run_twin(cfg: ScenarioConfig, u: np.ndarray, i: np.ndarray) -> ThreePhaseFrame:
    dt = DigitalTwin(cfg.params, cfg.fs)
    if not cfg.tap_step:
        frame, _ = dt.process(u, i)
        return frame
    # the sample at the switching instant still carries the old ratio
    k = _first_sample_at(cfg.tap_step[0], cfg.fs) + 1
    a, _ = dt.process(u[:, :k], i[:, :k])
    dt.set_params(set_tap(cfg.params, cfg.tap_step[1]))
    b, _ = dt.process(u[:, k:], i[:, k:])
    cat = lambda x, y: np.concatenate([x, y], axis=1)  # noqa: E731
    return ThreePhaseFrame(cat(a.u_ll, b.u_ll), cat(a.i, b.i), cat(a.u, b.u))


def _first_sample_at(t: float, fs: float) -> int:
    return int(math.ceil(t * fs - 1e-9))


def metric_window(cfg: ScenarioConfig, n: int) -> slice:
    """Samples scored for waveform and power metrics (warm-up sample excluded)."""
    if cfg.fault_type != "none":
        return slice(_first_sample_at(cfg.fault_time, cfg.fs), n)
    if cfg.tap_step:
        return slice(_first_sample_at(cfg.tap_step[0], cfg.fs), n)
    if cfg.has_event:
        return event_window(cfg.fs, cfg.event_time, 2, F0, n)
    return slice(1, n)


def frequency_window(cfg: ScenarioConfig, n: int) -> slice:
    if cfg.has_event:
        return event_window(cfg.fs, cfg.event_time, FREQ_EVENT_CYCLES, F0, n)
    return slice(_cycle(cfg.fs), n)


def _cycle(fs: float) -> int:
    return int(round(fs / F0))


def sliding_power(u: np.ndarray, i: np.ndarray, fs: float, f0: float = F0):
    """Per-phase one-cycle sliding P and fundamental Q, shape ``(3, n)``.

    Entries before the first full cycle are NaN.
    """
    N = int(round(fs / f0))
    n = u.shape[-1]
    P = np.full(u.shape, np.nan)
    Q = np.full(u.shape, np.nan)
    prod = np.cumsum(np.concatenate([np.zeros(u.shape[:-1] + (1,)), u * i], axis=-1), axis=-1)
    P[..., N - 1:] = (prod[..., N:] - prod[..., :-N]) / N
    rot = np.exp(-2j * np.pi * f0 * np.arange(n) / fs)

    def phasors(x):
        c = np.cumsum(np.concatenate([np.zeros(x.shape[:-1] + (1,)), x * rot], axis=-1), axis=-1)
        return 2.0 / N * (c[..., N:] - c[..., :-N])

    U = phasors(u)
    Ic = phasors(i)
    Q[..., N - 1:] = 0.5 * np.imag(U * np.conj(Ic))
    return P, Q


def _wave_error(d: np.ndarray, r: np.ndarray, win: slice) -> QuantityError:
    # pooled over the three phases: a collapsed phase must not dominate
    return QuantityError(avg_error(d, r, win), max_point_error(d, r, win))


def _power_error(d: np.ndarray, r: np.ndarray, win: slice, floor: float) -> QuantityError:
    ref_rms = float(np.sqrt(np.mean(r[win] ** 2)))
    low = ref_rms < floor
    try:
        return QuantityError(avg_error(d, r, win), max_point_error(d, r, win), low)
    except DegenerateSignalError:
        return QuantityError(math.inf, math.inf, True)


def _freq_error(d: np.ndarray, r: np.ndarray, fs: float, win: slice) -> QuantityError:
    fd = estimate_frequency(SampledWaveform(fs, d[win]))
    fr = estimate_frequency(SampledWaveform(fs, r[win]))
    return QuantityError(abs(fd - fr) / fr)


def score_trial(cfg: ScenarioConfig, w: TrialWaveforms, trial: int) -> TrialErrors:
    """Error metrics for V, I, P, Q, f_v, f_i plus phase-voltage and per-phase powers."""
    n = w.ref.i.shape[-1]
    win = metric_window(cfg, n)
    pwin = slice(max(win.start, _cycle(cfg.fs)), win.stop)
    s = cfg.params.s_rated
    errs = {
        "V": _wave_error(w.twin.u_ll, w.ref.u_ll, win),
        "I": _wave_error(w.twin.i, w.ref.i, win),
        "V_ph": _wave_error(w.twin.u, w.ref.u, win),
    }
    Pd, Qd = sliding_power(w.twin.u, w.twin.i, cfg.fs)
    Pr, Qr = sliding_power(w.ref.u, w.ref.i, cfg.fs)
    floor = LOW_SIGNAL_FRACTION * s
    errs["P"] = _power_error(Pd.sum(0), Pr.sum(0), pwin, floor)
    errs["Q"] = _power_error(Qd.sum(0), Qr.sum(0), pwin, floor)
    for name, d, r in (("P_ph", Pd, Pr), ("Q_ph", Qd, Qr)):
        per = [_power_error(d[k], r[k], pwin, floor / 3) for k in range(3)]
        errs[name] = QuantityError(float(np.mean([e.avg for e in per])),
                                   float(np.max([e.max_point for e in per])),
                                   any(e.low_signal for e in per))
    fwin = frequency_window(cfg, n)
    for name, d, r in (("f_v", w.twin.u_ll[0], w.ref.u_ll[0]), ("f_i", w.twin.i[0], w.ref.i[0])):
        try:
            errs[name] = _freq_error(d, r, cfg.fs, fwin)
        except InsufficientDataError:
            # offset-dominated fault currents may not cross zero often enough;
            # the cell is left out rather than scored
            continue
        except Exception as exc:
            raise StageError("frequency", exc) from exc
    return TrialErrors(trial, errs)


def run_trial(cfg: ScenarioConfig, trial: int) -> TrialErrors:
    """Full pipeline for one trial index; deterministic in ``(cfg, trial)``."""
    sim = simulate_trial(cfg, trial)
    return score_trial(cfg, sample_trial(cfg, sim, trial), trial)


def run_trial_family(cfgs: list[ScenarioConfig], trial: int) -> list[TrialErrors]:
    """Score several configs of one family (differing only in ``fs``) off one simulation."""
    fam = {c.family for c in cfgs}
    if len(fam) != 1:
        raise ValueError(f"configs span several families: {sorted(fam)}")
    base = cfgs[0]
    for c in cfgs[1:]:
        if replace(c, id=base.id, fs=base.fs, trials=base.trials) != base:
            raise ValueError(f"{c.id} differs from {base.id} beyond the sampling rate")
    sim = simulate_trial(base, trial)
    return [score_trial(c, sample_trial(c, sim, trial), trial) for c in cfgs]
