"""Feed precomputed embeddings through the binary table format.

Real encoders run elsewhere; their vectors arrive as an EVOEMB1 table keyed
by segment id. Here the "encoder" is the simulator's own noiseless latent,
which makes the effect of embedding noise visible.
"""
import tempfile
from pathlib import Path

from evoenroll.embedding import Attribute
from evoenroll.experiment import SimConfig, gen_sessions, make_embedders, make_extractor
from evoenroll.formats import EmbeddingTable, TableEmbedder, read_embedding_table, write_embedding_table
from evoenroll.pipeline import Embedders, Hyper, init_state, run_session
from evoenroll.metrics import summarize

sim = SimConfig()
session = gen_sessions(sim, 1, seed=3)[0]
segments = [session.enrollment, *session.mixtures]
table = EmbeddingTable(32, {s.id: s.truth.spk_vec for s in segments})

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "speaker.emb"
    write_embedding_table(path, table)
    loaded = read_embedding_table(path, expect_dim=32)
print(f"table: dim {loaded.dim}, {len(loaded)} vectors")

synthetic = make_embedders(sim)
# estimates are new segments the table has never seen, so they fall back
imported = Embedders(TableEmbedder(loaded, Attribute.SPEAKER, synthetic.speaker), synthetic.emotion)
for name, emb in (("synthetic", synthetic), ("table", imported)):
    recs = run_session(session.mixtures, session.targets, init_state(session.enrollment, emb, Hyper()),
                       make_extractor(sim), emb)
    s = summarize([r.si_sdri for r in recs])
    print(f"{name:>9}: mean SI-SDRi {s['mean_si_sdri']:.2f} dB, NSR {s['nsr']:.1f}%")
