import numpy as np
import pytest

from evoenroll.embedding import Attribute, normalize
from evoenroll.memory import MemoryBank, MemoryEntry
from evoenroll.segment import Segment


def make_entry(spk, emo=None, step=0, anchor=False, sid=None, n=16, fill=None):
    spk = np.asarray(spk, dtype=float)
    emo = spk if emo is None else np.asarray(emo, dtype=float)
    sid = sid or f"e{step}"
    samples = np.full(n, float(step + 1) if fill is None else fill)
    return MemoryEntry(Segment(sid, samples), normalize(spk, Attribute.SPEAKER),
                       normalize(emo, Attribute.EMOTION), step, anchor)


def make_bank(spk_rows, emo_rows=None, capacity=64, alpha=1.0):
    """Bank whose entry 0 is the anchor and entry i was admitted at step i."""
    emo_rows = spk_rows if emo_rows is None else emo_rows
    entries = [make_entry(s, e, step=i, anchor=(i == 0), sid=f"m{i}")
               for i, (s, e) in enumerate(zip(spk_rows, emo_rows))]
    return MemoryBank(tuple(entries), capacity, alpha)


def unit_rows_with_gram(gram):
    """Unit vectors whose pairwise cosines are ``gram`` (must be positive definite)."""
    return np.linalg.cholesky(np.asarray(gram, dtype=float))


def gram_for_redundancy(omegas):
    """Gram matrix with unit diagonal whose off-diagonal row means are ``omegas``.

    Uses G_ij = x_i + x_j, so row i sums to (n - 2) x_i + sum(x).
    """
    s = (len(omegas) - 1) * np.asarray(omegas, dtype=float)
    n = len(s)
    total = s.sum() / (2 * n - 2)
    x = (s - total) / (n - 2)
    g = x[:, None] + x[None, :]
    np.fill_diagonal(g, 1.0)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
