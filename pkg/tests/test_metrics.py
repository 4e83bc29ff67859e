import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvtwin.errors import DegenerateSignalError, WindowError
from mvtwin.metrics import (Cell, QuantityError, ScenarioStats, TrialErrors, aggregate, avg_error,
                            confidence_halfwidth, event_window, max_point_error)
from mvtwin.waveform import SampledWaveform

finite = st.floats(-1e3, 1e3, allow_nan=False)
signal = arrays(float, 64, elements=finite).filter(lambda r: np.sqrt(np.mean(r * r)) > 1e-3)


def test_constant_offset_closed_form():
    t = np.arange(600) / 30_000.0
    r = 100 * np.sin(2 * math.pi * 50 * t)
    X = np.sqrt(np.mean(r * r))
    assert avg_error(r + 3.0, r) == pytest.approx(3.0 / X, rel=1e-12)


def test_scaled_copy():
    r = np.sin(np.linspace(0, 6, 101)) + 0.2
    assert avg_error(1.01 * r, r) == pytest.approx(0.01, rel=1e-12)


def test_identical_signals_give_zero():
    r = np.arange(1.0, 10.0)
    assert avg_error(r, r) == 0.0 and max_point_error(r, r) == 0.0


def test_zero_reference_is_degenerate():
    with pytest.raises(DegenerateSignalError):
        avg_error(np.ones(4), np.zeros(4))


def test_floor_guard():
    with pytest.raises(DegenerateSignalError):
        max_point_error(np.ones(4), np.full(4, 0.1), floor=0.5)


def test_length_mismatch():
    with pytest.raises(ValueError):
        avg_error(np.ones(4), np.ones(5))


def test_waveform_inputs_need_same_rate():
    with pytest.raises(ValueError):
        avg_error(SampledWaveform(10.0, np.ones(3)), SampledWaveform(20.0, np.ones(3)))
    assert avg_error(SampledWaveform(10.0, np.full(3, 2.0)), SampledWaveform(10.0, np.ones(3))) == 1.0


def test_window_applies_to_last_axis():
    r = np.ones((3, 10))
    d = r.copy()
    d[:, :2] = 5.0
    assert avg_error(d, r, slice(2, 10)) == 0.0


@pytest.mark.parametrize("fs, expected", [(30_000.0, (4800, 7200)), (10_000.0, (1600, 2400))])
def test_event_window(fs, expected):
    w = event_window(fs, 0.2, 2)
    assert (w.start, w.stop) == expected


def test_event_window_bounds():
    with pytest.raises(WindowError):
        event_window(10_000.0, 0.01, 2)
    with pytest.raises(WindowError):
        event_window(10_000.0, 0.2, 2, n_samples=2000)
    with pytest.raises(WindowError):
        event_window(10_000.0, 0.2, 0)


def _trial(k, v, low=False):
    return TrialErrors(k, {"V": QuantityError(v, 2 * v), "P": QuantityError(10 * v, 20 * v, low)})


def test_aggregate_statistics():
    stats = aggregate([_trial(0, 0.01), _trial(1, 0.03), _trial(2, 0.02)])
    c = stats.cell("V")
    assert (c.avg, c.max, c.min) == pytest.approx((0.02, 0.03, 0.01))
    assert stats.cell("V", "max_point").max == pytest.approx(0.06)
    assert stats.n_trials == 3


def test_low_signal_trials_leave_the_average():
    stats = aggregate([_trial(0, 0.01), _trial(1, 5.0, low=True)])
    p = stats.cell("P")
    assert p.avg == pytest.approx(0.1)
    assert p.max == pytest.approx(50.0)
    assert p.flagged == 1


def test_all_flagged_average_is_nan():
    assert math.isnan(aggregate([_trial(0, 1.0, low=True)]).cell("P").avg)


def test_aggregate_needs_trials():
    with pytest.raises(ValueError):
        aggregate([])


def test_merge_equals_joint_aggregation():
    ts = [_trial(k, 0.01 * (k + 1), low=(k == 2)) for k in range(5)]
    merged = aggregate(ts[:2]).merge(aggregate(ts[2:]))
    joint = aggregate(ts)
    for key, c in joint.cells.items():
        m = merged.cells[key]
        assert (m.count, m.flagged) == (c.count, c.flagged)
        assert (m.avg, m.max, m.min) == pytest.approx((c.avg, c.max, c.min))


def test_rows_cover_every_statistic():
    rows = list(aggregate([_trial(0, 0.01)]).rows())
    assert rows[0][:3] == ("V", "avg", "avg")
    assert {r[2] for r in rows} == {"avg", "max", "min", "flagged"}


def test_confidence_halfwidth():
    assert confidence_halfwidth([1.0]) == math.inf
    assert confidence_halfwidth([2.0] * 10) == 0.0
    v = np.array([1.0, 2.0, 3.0, 4.0])
    expected = 2.5758293035489 * v.std(ddof=1) / 2.0
    assert confidence_halfwidth(v, 0.99) == pytest.approx(expected, rel=1e-9)


# -- properties ---------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(r=signal, noise=arrays(float, 64, elements=finite),
       k=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
def test_scale_invariance(r, noise, k):
    d = r + 0.1 * noise
    assert avg_error(k * d, k * r) == pytest.approx(avg_error(d, r), rel=1e-9, abs=1e-12)
    assert max_point_error(k * d, k * r) == pytest.approx(max_point_error(d, r), rel=1e-9,
                                                          abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(r=signal, noise=arrays(float, 64, elements=finite))
def test_max_point_dominates_average(r, noise):
    d = r + noise
    assert max_point_error(d, r) >= avg_error(d, r) * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(r=signal, c=finite)
def test_offset_identity(r, c):
    X = math.sqrt(float(np.mean(r * r)))
    assert avg_error(r + c, r) == pytest.approx(abs(c) / X, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(vals=st.lists(st.tuples(st.floats(0, 10), st.booleans()), min_size=1, max_size=20),
       seed=st.integers(0, 2**16))
def test_aggregate_permutation_invariant_and_ordered(vals, seed):
    trials = [_trial(k, v, low) for k, (v, low) in enumerate(vals)]
    perm = list(np.random.default_rng(seed).permutation(len(trials)))
    a = aggregate(trials)
    b = aggregate([trials[j] for j in perm])
    for key, c in a.cells.items():
        o = b.cells[key]
        assert (c.count, c.flagged, c.max, c.min) == (o.count, o.flagged, o.max, o.min)
        assert (math.isnan(c.avg) and math.isnan(o.avg)) or c.avg == pytest.approx(o.avg)
        if c.count:
            assert c.min <= c.avg * (1 + 1e-12) and c.avg <= c.max * (1 + 1e-12)


def test_cell_defaults():
    c = Cell()
    assert c.count == 0 and math.isnan(c.avg)


def test_scenario_stats_skips_missing_metric():
    s = ScenarioStats()
    s.add(TrialErrors(0, {"f_v": QuantityError(1e-5)}))
    assert ("f_v", "avg") in s.cells and ("f_v", "max_point") not in s.cells
