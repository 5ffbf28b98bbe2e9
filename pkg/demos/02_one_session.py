"""One simulated session, evolving enrollment next to the static baseline.

Prints a per-step trace: which emotion the target is in, what the gate
decided, and the SI-SDRi each mode achieved on the same mixture.
"""
from evoenroll.experiment import SimConfig, gen_sessions, run_one
from evoenroll.pipeline import Hyper
from evoenroll.simulation import EMOTIONS

sim = SimConfig()
session = gen_sessions(sim, 1, seed=5)[0]
print(f"enrollment emotion: {EMOTIONS[session.enrollment.truth.emotion]}, {len(session)} mixtures")

evolve, state = run_one(session, sim, Hyper(tau=0.5, k=3), "evolve", return_state=True)
static = run_one(session, sim, Hyper(), "static")

print(f"{'n':>3} {'emotion':<9} {'c_n':>6} {'gate':<9} {'bank':>4} {'evolve':>8} {'static':>8}")
for emo, a, b in zip(session.emotions, evolve, static):
    print(f"{a.step:>3} {EMOTIONS[emo]:<9} {a.c_n:6.3f} {a.decision.value:<9} {a.bank_size:>4} "
          f"{a.si_sdri:8.2f} {b.si_sdri:8.2f}")

mean = lambda recs: sum(r.si_sdri for r in recs) / len(recs)
print(f"\nmean SI-SDRi: evolve {mean(evolve):.2f} dB, static {mean(static):.2f} dB")
print(f"final bank holds {len(state.bank)} entries")
