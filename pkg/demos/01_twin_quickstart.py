"""Drive the digital twin with synthetic LV measurements.

Run with ``python3 demos/01_twin_quickstart.py``.
"""

# %% A balanced, rated, 0.8-lagging load seen from the 400 V side
import math

import numpy as np

from mvtwin import DigitalTwin
from mvtwin.twin import SIM_50KVA, set_tap
from mvtwin.waveform import SampledWaveform, active_power, estimate_frequency, rms

fs = 30_000.0
t = np.arange(int(0.3 * fs)) / fs
v_peak = math.sqrt(2) * 400 / math.sqrt(3)
i_peak = math.sqrt(2) * SIM_50KVA.rated_lv_current
shift = [-2 * math.pi * k / 3 for k in range(3)]
u_lv = np.stack([v_peak * np.cos(2 * math.pi * 50 * t + s) for s in shift])
i_lv = np.stack([i_peak * np.cos(2 * math.pi * 50 * t + s - math.acos(0.8)) for s in shift])

# %% Estimate the 20 kV terminals
twin = DigitalTwin(SIM_50KVA, fs)
mv, warm = twin.process(u_lv, i_lv)
print(f"{SIM_50KVA.vector_group}: series R {SIM_50KVA.series_resistance:.0f} ohm, "
      f"L {SIM_50KVA.series_inductance:.2f} H (MV side)")

last = slice(-int(fs / 50) * 5, None)
u_ab = SampledWaveform(fs, mv.u_ll[0][last])
print(f"MV line voltage  {rms(u_ab) / 1e3:8.3f} kV rms")
print(f"MV line current  {rms(SampledWaveform(fs, mv.i[0][last])):8.3f} A rms")
p = sum(active_power(SampledWaveform(fs, mv.u[k][last]), SampledWaveform(fs, mv.i[k][last]))
        for k in range(3))
print(f"MV active power  {p / 1e3:8.2f} kW")
print(f"frequency        {estimate_frequency(SampledWaveform(fs, mv.u_ll[0])):8.4f} Hz")
print(f"warm-up samples  {int(warm.sum())}")

# %% A tap change mid-stream: history carries over, only the ratio moves
twin.set_params(set_tap(SIM_50KVA, 1.05))
after, _ = twin.process(u_lv, i_lv)
print(f"after tap 1.05   {rms(SampledWaveform(fs, after.u_ll[0][last])) / 1e3:8.3f} kV rms")
