"""Filtering-effect study and recorded-data comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..circuitsim.bode import BodeTable, bode_pair
from ..circuitsim.scenario import CircuitSpec, SourceSpec, load_harmonic_profile, rated_load
from ..errors import AlignmentError
from ..metrics import QuantityError, ScenarioStats, TrialErrors, avg_error, max_point_error
from ..twin import DigitalTwin, TransformerParams
from ..waveform import SampledWaveform, Spectrum, spectrum
from .pipeline import F0, sample_trial, simulate_trial, sliding_power
from .runner import RunReport, software_version
from .scenarios import ScenarioConfig

BODE_FREQS = np.arange(1, 201) * F0  # 50 Hz .. 10 kHz
ZOOM_ORDERS = tuple(range(20, 26))


@dataclass
class FilteringResult:
    bode: dict[float, dict[str, BodeTable]]
    spectra: dict[str, Spectrum]
    harmonics: list[dict] = field(default_factory=list)

    def zoom(self, orders=ZOOM_ORDERS) -> list[dict]:
        return [row for row in self.harmonics if row["order"] in orders]

    def gain_difference_db(self, load: float, quantity: str = "voltage") -> np.ndarray:
        a, b = self.bode[load]["a"], self.bode[load]["b"]
        attr = f"{quantity}_db"
        return np.abs(getattr(a, attr) - getattr(b, attr))


def filtering_study(
    params: TransformerParams,
    loads: tuple[float, ...] = (0.1, 1.0),
    fs: float = 30_000.0,
    freqs=BODE_FREQS,
    seed: int = 0,
    noise_mode: str = "gain",
    max_order: int = 40,
) -> FilteringResult:
    """Bode tables of both circuit models plus a twin-versus-reference spectrum.

    The time-domain part runs a load step from the first to the last entry
    of ``loads`` (fractions of rating, 0.8 lagging) with harmonics on, on a
    Yy0 bank grounded on both sides so every harmonic order reaches the
    phase voltages. Spectra cover the last ten cycles after the step.
    """
    bode = {fr: bode_pair(params, fr, freqs) for fr in loads}

    p = replace(params, vector_group="Yy0")
    cfg = ScenarioConfig(id="filtering", load_trajectory="increase", harmonics=True, fs=fs,
                         vector_group="Yy0", tf_mv_grounded=True, tf_lv_grounded=True,
                         noise_mode=noise_mode, seed=seed, params=p, trials=1)
    harmonics = [(h, frac, 0.0) for h, frac in load_harmonic_profile()]
    spec = CircuitSpec(
        params=p, source=SourceSpec.nominal(p.v2_rated, harmonics=harmonics),
        load_pre=[rated_load(p, loads[0])] * 3, load_post=[rated_load(p, loads[-1])] * 3,
        event_time=cfg.event_time, tf_mv_grounded=True, tf_lv_grounded=True,
    )
    w = sample_trial(cfg, simulate_trial(cfg, 0, spec), 0)
    n_win = int(round(10 * fs / F0))
    stop = n_win * (w.ref.u.shape[-1] // n_win)
    win = slice(stop - n_win, stop)
    spectra = {}
    for key, arr in (("twin_u", w.twin.u[0]), ("ref_u", w.ref.u[0]),
                     ("twin_i", w.twin.i[0]), ("ref_i", w.ref.i[0])):
        spectra[key] = spectrum(SampledWaveform(fs, arr[win]), f0=F0)

    rows = []
    for h in range(1, max_order + 1):
        row = {"order": h}
        for q in ("u", "i"):
            ref = abs(spectra[f"ref_{q}"].harmonic(h, F0))
            twin = abs(spectra[f"twin_{q}"].harmonic(h, F0))
            row[f"ref_{q}"] = ref
            row[f"twin_{q}"] = twin
            row[f"rel_diff_{q}"] = abs(twin - ref) / ref if ref > 0 else math.inf
        rows.append(row)
    return FilteringResult(bode, spectra, rows)


def _check_aligned(lv: dict, mv: dict) -> float:
    chans = list(lv.values()) + list(mv.values())
    fs = {c.fs for c in chans}
    n = {c.n for c in chans}
    t0 = {c.t0 for c in chans}
    if len(fs) != 1 or len(n) != 1 or len(t0) != 1:
        raise AlignmentError(f"recordings differ: fs {sorted(fs)}, lengths {sorted(n)}, "
                             f"start times {sorted(t0)}")
    return fs.pop()


def _stack(channels: dict, names) -> np.ndarray:
    missing = [n for n in names if n not in channels]
    if missing:
        raise AlignmentError(f"missing channels {missing}")
    return np.stack([channels[n].samples for n in names])


def field_compare(lv: dict, mv: dict, params: TransformerParams,
                  fs: float | None = None, scenario_id: str = "field") -> RunReport:
    """Score the twin driven by an LV recording against an MV recording.

    Per-phase V (phase voltages) and I errors plus total P and Q, all with
    the reference RMS in the denominator; ``*_nom`` variants divide by the
    nameplate phase voltage or current instead.
    """
    rate = _check_aligned(lv, mv)
    if fs is not None and not math.isclose(fs, rate, rel_tol=1e-12):
        raise AlignmentError(f"declared fs {fs:g} Hz but recordings are at {rate:g} Hz")
    u_lv = _stack(lv, ("uA", "uB", "uC"))
    i_lv = _stack(lv, ("iA", "iB", "iC"))
    u_mv = _stack(mv, ("uA", "uB", "uC"))
    i_mv = _stack(mv, ("iA", "iB", "iC"))
    frame, _ = DigitalTwin(params, rate).process(u_lv, i_lv)

    win = slice(1, u_mv.shape[-1])
    v_nom = params.v2_rated / math.sqrt(3.0)
    i_nom = params.rated_mv_line_current
    errs = {}
    for k, ph in enumerate("ABC"):
        for name, d, r, nom in (("V", frame.u[k], u_mv[k], v_nom), ("I", frame.i[k], i_mv[k], i_nom)):
            errs[f"{name}_{ph}"] = _safe(d, r, win)
            dev = d[win] - r[win]
            errs[f"{name}_{ph}_nom"] = QuantityError(float(np.sqrt(np.mean(dev**2)) / nom),
                                                     float(np.max(np.abs(dev)) / nom))
    n_cycle = int(round(rate / F0))
    if u_mv.shape[-1] > n_cycle:
        Pd, Qd = sliding_power(frame.u, frame.i, rate)
        Pr, Qr = sliding_power(u_mv, i_mv, rate)
        pwin = slice(n_cycle, u_mv.shape[-1])
        for name, d, r in (("P", Pd.sum(0), Pr.sum(0)), ("Q", Qd.sum(0), Qr.sum(0))):
            errs[name] = _safe(d, r, pwin)
            dev = d[pwin] - r[pwin]
            errs[f"{name}_nom"] = QuantityError(
                float(np.sqrt(np.mean(dev**2)) / params.s_rated),
                float(np.max(np.abs(dev)) / params.s_rated))
    stats = ScenarioStats()
    stats.add(TrialErrors(0, errs))
    prov = {"scenario_id": scenario_id, "fs": rate, "samples": int(u_mv.shape[-1]),
            "vector_group": params.vector_group, "tap_ratio": params.tap_ratio,
            "seed": None, "dt": 1.0 / rate, "version": software_version()}
    return RunReport(scenario_id, stats, prov, artifacts={"twin": frame})


def _safe(d, r, win) -> QuantityError:
    ref = float(np.sqrt(np.mean(np.asarray(r)[win] ** 2)))
    if ref == 0.0:
        same = bool(np.all(np.asarray(d)[win] == 0.0))
        return QuantityError(0.0 if same else math.inf, 0.0 if same else math.inf, True)
    return QuantityError(avg_error(d, r, win), max_point_error(d, r, win))
