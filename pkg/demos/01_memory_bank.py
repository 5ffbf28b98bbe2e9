"""The memory bank by hand: gate an estimate, then curate a full bank.

Builds embeddings with known cosines so every number printed can be
checked by hand.
"""
import numpy as np

from evoenroll.embedding import Attribute, normalize
from evoenroll.memory import MemoryEntry, admit, evict_most_redundant, new_bank, redundancy_scores
from evoenroll.segment import Segment


def entry(name, spk, emo=None, step=0):
    emo = spk if emo is None else emo
    return MemoryEntry(Segment(name, np.ones(8)), normalize(spk, Attribute.SPEAKER),
                       normalize(emo, Attribute.EMOTION), step)


# an estimate along e0 and three stored entries at cosines 0.47, 0.32, 0.51
e = np.eye(4)
est = entry("estimate", e[0])
stored = [s * e[0] + np.sqrt(1 - s * s) * e[i + 1] for i, s in enumerate((0.47, 0.32, 0.51))]
bank = new_bank(entry("r", stored[0]), capacity=8)
for step, vec in enumerate(stored[1:], start=1):
    bank = bank.with_entries(bank.entries + (entry(f"m{step}", vec, step=step),))

for tau in (0.6, 0.5):
    _, decision, c_n = admit(bank, est, tau, current_step=10)
    print(f"tau={tau}: c_n={c_n:.2f} -> {decision.value}")

# redundancy: each entry's mean similarity to the others, speaker + alpha * emotion
rng = np.random.default_rng(1)
base = rng.standard_normal(6)
bank = new_bank(entry("r", base, rng.standard_normal(6)), capacity=5, alpha=1.0)
for n in range(1, 5):
    cand = entry(f"m{n}", base + 0.6 * rng.standard_normal(6), rng.standard_normal(6))
    bank, decision, c_n = admit(bank, cand, 0.3, n)
    print(f"step {n}: {cand.segment_id} c_n={c_n:.3f} {decision.value}, bank size {len(bank)}")

print("omega:", dict(zip(bank.ids, np.round(redundancy_scores(bank), 3))))
smaller, gone = evict_most_redundant(bank)
print(f"most redundant non-anchor entry: {gone}; remaining {smaller.ids}")
