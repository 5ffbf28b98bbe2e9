"""How many memories to retrieve: too few miss drifted styles, too many dilute.

Uses a drift-heavy world (emotions change often, no pull to Neutral) and
longer sessions, so the bank fills up and k matters.
"""
from dataclasses import replace

from evoenroll.experiment import SimConfig, sweep
from evoenroll.pipeline import Hyper
from evoenroll.simulation import DriftParams

base = SimConfig()
sim = replace(base, session=replace(base.session, n_segments=100,
                                    drift=DriftParams(stay=0.3, neutral_pull=0.0)))
rows = sweep(sim, Hyper(tau=0.5), "k", [1, 3, 12, 24, 48, 64], sessions=4, seed=0)
for row in rows:
    label = "static" if row.value is None else f"k={row.value}"
    print(f"{label:>7}: mean SI-SDRi {row.summary['mean_si_sdri']:6.2f} dB, NSR {row.summary['nsr']:5.1f}%")
