import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvtwin.errors import ConfigurationError
from mvtwin.twin import (SIM_50KVA, DigitalTwin, FaultContext, Observability, TransformerParams,
                         TwinState, classify_fault_observability, compose_three_phase, refer_to_mv,
                         set_tap, twin_arrays, twin_step)
from oracles import (SIM_LS, SIM_RATIO, SIM_RS, phase_err_deg, project, rated_lv_phasors,
                     rel_mag_err, sample_phasor, twin_phasors)

YY = replace(SIM_50KVA, vector_group="Yy0")
UNOBS = Observability.PHASE_VOLTAGES_UNOBSERVABLE
OBS = Observability.FULLY_OBSERVABLE


def balanced(ph, fs, n, f=50.0):
    return np.stack([sample_phasor(ph, fs, n, f, -2 * math.pi * k / 3) for k in range(3)])


# -- parameters and referral ------------------------------------------------

def test_physical_constants_match_nameplate_arithmetic():
    p = SIM_50KVA
    assert p.series_resistance == pytest.approx(SIM_RS)
    assert p.series_inductance == pytest.approx(SIM_LS)
    assert p.winding_ratio == pytest.approx(SIM_RATIO)


@pytest.mark.parametrize("field, value", [("r1", 0.0), ("lm", -1.0), ("tap_ratio", 0.0),
                                          ("vector_group", "Yd5"), ("v1_rated", 30e3)])
def test_params_validation(field, value):
    with pytest.raises(ConfigurationError):
        replace(SIM_50KVA, **{field: value})


def test_refer_to_mv_rated_ratio():
    u, i = refer_to_mv(400.0, 50.0, YY)
    assert (u, i) == pytest.approx((20000.0, 1.0))


def test_refer_to_mv_with_tap():
    u, _ = refer_to_mv(400.0, 50.0, set_tap(YY, 1.05))
    assert u == pytest.approx(21000.0)


def test_set_tap_identity_and_round_trip():
    assert set_tap(YY, 1.0) == YY
    assert set_tap(set_tap(YY, 1.05), 1.0) == YY


def test_set_tap_outside_range():
    with pytest.raises(ConfigurationError):
        set_tap(YY, 1.2)


def test_tap_scales_voltage_without_series_drop():
    fs = 10_000.0
    u = balanced(325.0, fs, 400)
    zero = np.zeros_like(u)
    a, _ = DigitalTwin(YY, fs).process(u, zero)
    b, _ = DigitalTwin(set_tap(YY, 1.05), fs).process(u, zero)
    assert np.allclose(b.u, 1.05 * a.u, rtol=1e-12, atol=1e-9)


def test_tap_rescales_referred_impedance():
    tapped = set_tap(YY, 1.1)
    expected = (YY.r2 + YY.r1 * 1.1**2) * YY.z_base
    assert tapped.series_resistance == pytest.approx(expected)


# -- single-phase discretization --------------------------------------------

def test_first_sample_is_warmup_only():
    u2, i2, warm = twin_arrays(np.ones(5), np.ones(5), YY, 10_000.0)
    assert warm.tolist() == [True, False, False, False, False]


def test_step_and_block_agree():
    rng = np.random.default_rng(3)
    u1 = rng.normal(size=50) * 1e4
    i1 = rng.normal(size=50)
    u_blk, i_blk, _ = twin_arrays(u1, i1, YY, 30_000.0)
    st_ = TwinState()
    out = np.array([twin_step(st_, a, b, YY, 30_000.0)[:2] for a, b in zip(u1, i1)])
    assert np.allclose(out[:, 0], u_blk, rtol=1e-13)
    assert np.allclose(out[:, 1], i_blk, rtol=1e-13)


def test_chained_blocks_equal_single_pass():
    rng = np.random.default_rng(4)
    u = rng.normal(size=(3, 300)) * 300
    i = rng.normal(size=(3, 300)) * 50
    whole, _ = DigitalTwin(SIM_50KVA, 10_000.0).process(u, i)
    tw = DigitalTwin(SIM_50KVA, 10_000.0)
    a, _ = tw.process(u[:, :123], i[:, :123])
    b, _ = tw.process(u[:, 123:], i[:, 123:])
    assert np.allclose(np.concatenate([a.i, b.i], axis=1), whole.i, rtol=1e-13, atol=1e-15)


def test_tap_change_keeps_lv_current_history():
    # continuous LV signals: after the swap the voltage must match a twin
    # that ran at the new tap from the start, with no one-sample spike
    fs = 10_000.0
    t = np.arange(400) / fs
    u = np.stack([230 * np.sin(2 * math.pi * 50 * t - k * 2 * math.pi / 3) for k in range(3)])
    i = np.stack([70 * np.sin(2 * math.pi * 50 * t - k * 2 * math.pi / 3 - 0.6) for k in range(3)])
    tapped = set_tap(SIM_50KVA, 1.05)
    ref, _ = DigitalTwin(tapped, fs).process(u, i)
    tw = DigitalTwin(SIM_50KVA, fs)
    tw.process(u[:, :200], i[:, :200])
    tw.set_params(tapped)
    after, _ = tw.process(u[:, 200:], i[:, 200:])
    assert np.allclose(after.u, ref.u[:, 200:], rtol=1e-12, atol=1e-9)


def test_resistance_scale_hook():
    u1, i1 = np.zeros(4), np.full(4, 2.0)
    u2, _, _ = twin_arrays(u1, i1, YY, 10_000.0, r_scale=1.5)
    assert u2[-1] == pytest.approx(1.5 * YY.series_resistance * 2.0)


def test_all_zero_input_gives_zero_frame():
    frame, _ = DigitalTwin(SIM_50KVA, 5000.0).process(np.zeros((3, 20)), np.zeros((3, 20)))
    assert not frame.u.any() and not frame.i.any() and not frame.u_ll.any()


def test_rejects_nonpositive_rate():
    with pytest.raises(ConfigurationError):
        twin_step(TwinState(), 1.0, 1.0, YY, 0.0)


def test_phasor_oracle_at_30khz():
    fs = 30_000.0
    n = int(fs / 50 * 10)
    U, I = rated_lv_phasors()
    u1, i1 = refer_to_mv(sample_phasor(U, fs, n), sample_phasor(I, fs, n), SIM_50KVA)
    u2, i2, _ = twin_arrays(u1, i1, SIM_50KVA, fs)
    win = slice(int(fs / 50), n)
    U2o, I2o = twin_phasors(U, I)
    U2, I2 = project(u2[win], fs), project(i2[win], fs)
    assert rel_mag_err(U2, U2o) < 2e-3 and phase_err_deg(U2, U2o) < 0.1
    assert rel_mag_err(I2, I2o) < 2e-3 and phase_err_deg(I2, I2o) < 0.1


def test_discretization_error_decreases_with_rate():
    U, I = rated_lv_phasors()
    U2o, _ = twin_phasors(U, I)
    errs = []
    for fs in (5_000.0, 10_000.0, 30_000.0, 52_000.0):
        n = int(fs / 50 * 10)
        u1, i1 = refer_to_mv(sample_phasor(U, fs, n), sample_phasor(I, fs, n), SIM_50KVA)
        u2, _, _ = twin_arrays(u1, i1, SIM_50KVA, fs)
        errs.append(abs(project(u2[int(fs / 50):], fs) - U2o) / abs(U2o))
    assert errs == sorted(errs, reverse=True) and errs[-1] < errs[0]


@pytest.mark.parametrize("h", [3, 5, 7, 13, 25])
def test_harmonic_pass_through(h):
    # harmonic currents follow from a rated 0.8-lagging RL load, as in a real recording
    fs = max(20 * h * 50.0, 10_000.0)
    n = int(fs / 50 * 4)
    r, x = 2.56, 1.92
    U = complex(400 * math.sqrt(2 / 3))
    Uh = 0.05 * U
    Ih = Uh / (r + 1j * h * x)
    u_lv = sample_phasor(U, fs, n) + sample_phasor(Uh, fs, n, f=50.0 * h)
    i_lv = sample_phasor(U / (r + 1j * x), fs, n) + sample_phasor(Ih, fs, n, f=50.0 * h)
    u1, i1 = refer_to_mv(u_lv, i_lv, SIM_50KVA)
    u2, _, _ = twin_arrays(u1, i1, SIM_50KVA, fs)
    got = project(u2[int(fs / 50):], fs, 50.0 * h)
    want, _ = twin_phasors(Uh, Ih, w=2 * math.pi * 50.0 * h)
    assert rel_mag_err(got, want) < 0.01


@settings(max_examples=50, deadline=None)
@given(a=arrays(float, (2, 3, 16), elements=st.floats(-1e3, 1e3)),
       b=arrays(float, (2, 3, 16), elements=st.floats(-1e3, 1e3)),
       group=st.sampled_from(["Yy0", "Dy1", "Dy11"]))
def test_linearity(a, b, group):
    p = replace(SIM_50KVA, vector_group=group)
    fa, _ = DigitalTwin(p, 10_000.0).process(a[0], a[1])
    fb, _ = DigitalTwin(p, 10_000.0).process(b[0], b[1])
    fs_, _ = DigitalTwin(p, 10_000.0).process(a[0] + b[0], a[1] + b[1])
    scale = 1.0 + np.abs(fa.u).max() + np.abs(fb.u).max()
    assert np.allclose(fs_.u, fa.u + fb.u, atol=1e-9 * scale)
    assert np.allclose(fs_.i, fa.i + fb.i, atol=1e-9 * (1 + np.abs(fa.i).max() + np.abs(fb.i).max()))


# -- vector groups -----------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(x=arrays(float, (2, 3, 8), elements=st.floats(-1e4, 1e4)))
def test_yy0_composition_is_identity(x):
    fr = compose_three_phase(x[0], x[1], "Yy0")
    assert np.array_equal(fr.u, x[0]) and np.array_equal(fr.i, x[1])


def test_dy11_line_current_magnitude_and_lead():
    fs, n = 10_000.0, 200
    M = 1.7
    i2 = balanced(M, fs, n)
    fr = compose_three_phase(np.zeros_like(i2), i2, "Dy11")
    ia = project(fr.i[0], fs)
    i2a = project(i2[0], fs)
    assert abs(ia) == pytest.approx(math.sqrt(3) * M, rel=1e-9)
    assert math.degrees(np.angle(ia / i2a)) == pytest.approx(30.0, abs=1e-9)


def test_dy1_line_current_lags():
    fs, n = 10_000.0, 200
    i2 = balanced(1.0, fs, n)
    fr = compose_three_phase(np.zeros_like(i2), i2, "Dy1")
    assert math.degrees(np.angle(project(fr.i[0], fs) / project(i2[0], fs))) == pytest.approx(
        -30.0, abs=1e-9)


@pytest.mark.parametrize("group", ["Dy1", "Dy11"])
def test_triplen_currents_cancel_in_delta(group):
    fs, n = 30_000.0, 600
    fund = balanced(10.0, fs, n)
    third = sample_phasor(2.0 + 1.0j, fs, n, f=150.0)
    fr = compose_three_phase(np.zeros((3, n)), fund + third, group)
    for k in range(3):
        ratio = abs(project(fr.i[k], fs, 150.0)) / abs(project(fr.i[k], fs))
        assert ratio < 1e-6


def test_delta_phase_voltage_estimate_is_zero_sequence_free():
    fs, n = 10_000.0, 200
    w = balanced(20e3 * math.sqrt(2), fs, n) + 500.0
    fr = compose_three_phase(w, np.zeros_like(w), "Dy11")
    assert np.allclose(fr.u.sum(axis=0), 0.0, atol=1e-8)


# -- fault observability -----------------------------------------------------

def ctx(ft, side="MV", sub=True, group="Dy11", lv=True, mv=False):
    return FaultContext(ft, side, sub, group, lv, mv)


@pytest.mark.parametrize("c, expected", [
    (ctx("LG"), UNOBS),
    (ctx("LLG"), UNOBS),
    (ctx("LL"), OBS),
    (ctx("LG", sub=False), OBS),
    (ctx("LLG", sub=False), OBS),
    (ctx("LG", group="Dy11", lv=False), UNOBS),
    (ctx("LG", group="Yy0", lv=True, mv=True), OBS),
    (ctx("LLG", group="Yy0", lv=True, mv=True), OBS),
    (ctx("LG", group="Yy0", lv=True, mv=False), UNOBS),
    (ctx("LG", group="Yy0", lv=False, mv=True), UNOBS),
    (ctx("LG", group="Yy0", lv=False, mv=False), UNOBS),
    (ctx("LL", group="Yy0", lv=False, mv=False), OBS),
])
def test_observability_truth_table(c, expected):
    assert classify_fault_observability(c) is expected


@pytest.mark.parametrize("ft", ["LG", "LL", "LLG"])
def test_lv_faults_hide_phase_voltages(ft):
    assert classify_fault_observability(ctx(ft, side="LV", sub=False)) is UNOBS


def test_no_fault_is_observable():
    assert classify_fault_observability(ctx("none")) is OBS


def test_delta_side_never_reports_grounded():
    assert FaultContext("LG", "MV", True, "Dy1", True, True).tf_mv_grounded is False


def test_fault_context_validation():
    with pytest.raises(ConfigurationError):
        FaultContext("LLL")
    with pytest.raises(ConfigurationError):
        FaultContext("LG", "HV")


def test_custom_params_construct():
    p = TransformerParams(100e3, 400.0, 10e3, 0.01, 0.03, 0.01, 0.03, 400.0, 400.0)
    assert p.vector_group == "Yy0" and p.ratio == pytest.approx(25.0)
