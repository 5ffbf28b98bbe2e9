"""Sweep the reliability threshold and watch memory poisoning appear at low tau.

With tau=0 every estimate, right or wrong, enters the bank, and wrong
ones get retrieved again later. A moderate tau filters them out, while
tau=1 freezes the bank and reproduces the static baseline exactly.
"""
from evoenroll.experiment import SimConfig, sweep
from evoenroll.pipeline import Hyper

rows = sweep(SimConfig(), Hyper(), "tau", [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0], sessions=10, seed=0)
print(f"{'tau':>5} {'mode':<7} {'SI-SDRi':>8} {'NSR %':>7} {'SI-SDRiC':>9}")
for row in rows:
    s = row.summary
    tau = "-" if row.value is None else f"{row.value:.1f}"
    print(f"{tau:>5} {row.mode:<7} {s['mean_si_sdri']:8.2f} {s['nsr']:7.1f} {s['si_sdric']:9.2f}")
