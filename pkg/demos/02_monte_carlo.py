"""Small Monte-Carlo run over the normal-operation catalogue.

Every trial simulates the grid with the trapezoidal circuit solver, samples
the LV side through a noisy instrument model, feeds the twin and scores its
MV estimate against the simulated MV terminals. Twenty trials per family keep it
to about a minute; the CLI's ``run-matrix`` does the same at full size.
"""

# %%
import time

from mvtwin.harness.runner import render_table, run_many
from mvtwin.harness.scenarios import normal_scenarios

cfgs = [c for c in normal_scenarios(trials=20) if c.load_trajectory != "decrease"]
t0 = time.perf_counter()
reports = run_many(cfgs, progress=lambda r: print(f"  done {r.scenario_id}", flush=True))
print(f"{len(reports)} scenarios in {time.perf_counter() - t0:.0f} s\n")

# %% Average RMS error (percent of reference RMS)
print(render_table(reports, metric="avg"))

# %% Worst single-sample deviation
print(render_table(reports, metric="max_point", quantities=("V", "I")))
