import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evoenroll.embedding import Attribute, AttributeMismatch, normalize
from evoenroll.retrieval import EmptyBank, retrieve_context, top_k_by_attribute
from evoenroll.memory import MemoryBank
from conftest import make_bank
from oracles import cos, top_k_oracle


def spk(v):
    return normalize(v, Attribute.SPEAKER)


def emo(v):
    return normalize(v, Attribute.EMOTION)


def test_top_k_saturates(rng):
    rows = rng.standard_normal((4, 6))
    bank = make_bank(rows)
    q = spk(rng.standard_normal(6))
    got = top_k_by_attribute(bank, q, 10)
    sims = [cos(r, q.values) for r in rows]
    assert [e.segment_id for e in got] == [f"m{i}" for i in top_k_oracle(sims, list(range(4)), 4)]


def test_top_k_matches_sort_oracle(rng):
    rows = rng.standard_normal((5, 8))
    bank = make_bank(rows)
    q = spk(rng.standard_normal(8))
    sims = [cos(r, q.values) for r in rows]
    assert len(set(sims)) == 5
    got = [e.segment_id for e in top_k_by_attribute(bank, q, 3)]
    assert got == [f"m{i}" for i in top_k_oracle(sims, list(range(5)), 3)]


def test_top_k_tie_prefers_older():
    bank = make_bank([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    got = top_k_by_attribute(bank, spk([0.0, 1.0, 0.0]), 1)
    assert [e.segment_id for e in got] == ["m1"]


def test_top_k_uses_emotion_stream():
    bank = make_bank([[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]])
    assert top_k_by_attribute(bank, emo([1.0, 0.0]), 1)[0].segment_id == "m1"
    assert top_k_by_attribute(bank, spk([1.0, 0.0]), 1)[0].segment_id == "m0"


def test_errors():
    bank = make_bank([[1.0, 0.0]])
    with pytest.raises(ValueError):
        top_k_by_attribute(bank, spk([1.0, 0.0]), 0)
    with pytest.raises(EmptyBank):
        top_k_by_attribute(MemoryBank((), 4), spk([1.0, 0.0]), 1)
    with pytest.raises(AttributeMismatch):
        retrieve_context(bank, emo([1.0, 0.0]), emo([1.0, 0.0]), 1)


def test_identical_top_sets_give_k():
    rows = np.eye(6)[:5] + 0.1
    bank = make_bank(rows, rows)
    q = rows[2] + rows[3]
    got = retrieve_context(bank, spk(q), emo(q), 2)
    assert len(got) == 2 and set(got.ids) == {"m2", "m3"}


def test_disjoint_top_sets_give_2k():
    dim = 6
    e = np.eye(dim)
    spk_rows = [e[0], e[0] + 0.1 * e[5], e[1], e[1], e[1], e[1]]
    emo_rows = [e[2], e[2], e[3], e[3] + 0.1 * e[5], e[4], e[4]]
    bank = make_bank(spk_rows, emo_rows)
    got = retrieve_context(bank, spk(e[0]), emo(e[3]), 2)
    assert len(got) == 4
    assert set(got.ids) == {"m0", "m1", "m2", "m3"}


def test_anchor_only_bank_returns_anchor():
    bank = make_bank([[0.3, 0.4, 0.5]])
    for k in (1, 3, 64):
        got = retrieve_context(bank, spk([1.0, 0.0, 0.0]), emo([0.0, 0.0, 1.0]), k)
        assert got.ids == ["m0"] and got.entries[0].is_anchor
        assert len(got.without_anchor()) == 0


def test_order_is_combined_score(rng):
    rows_s, rows_e = rng.standard_normal((10, 6)), rng.standard_normal((10, 6))
    bank = make_bank(rows_s, rows_e, alpha=0.7)
    qs, qe = spk(rng.standard_normal(6)), emo(rng.standard_normal(6))
    got = retrieve_context(bank, qs, qe, 3)
    combined = [s + 0.7 * e for s, e in got.per_entry_scores]
    assert combined == sorted(combined, reverse=True)
    for entry, (s, e) in zip(got.entries, got.per_entry_scores):
        assert s == pytest.approx(cos(entry.spk_emb.values, qs.values), abs=1e-12)
        assert e == pytest.approx(cos(entry.emo_emb.values, qe.values), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(1, 12))
def test_union_property(seed, size, k):
    r = np.random.default_rng(seed)
    dim = 5
    bank = make_bank(r.standard_normal((size, dim)), r.standard_normal((size, dim)), alpha=float(r.uniform(0, 2)))
    qs, qe = spk(r.standard_normal(dim)), emo(r.standard_normal(dim))
    before = bank.ids
    got = retrieve_context(bank, qs, qe, k)
    again = retrieve_context(bank, qs, qe, k)
    steps = list(range(size))
    m_spk = {f"m{i}" for i in top_k_oracle([cos(e.spk_emb.values, qs.values) for e in bank], steps, k)}
    m_emo = {f"m{i}" for i in top_k_oracle([cos(e.emo_emb.values, qe.values) for e in bank], steps, k)}
    ids = got.ids
    assert len(set(ids)) == len(ids)
    assert set(ids) == m_spk | m_emo
    assert len(ids) <= size
    if size >= k:
        assert k <= len(ids) <= min(2 * k, size)
    assert bank.ids == before and again.ids == ids
