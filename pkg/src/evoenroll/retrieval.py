"""Dual-stream top-k retrieval over a memory bank, queried by the current mixture."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import Attribute, AttributeMismatch, DimensionMismatch, EmbeddingVec
from .memory import MemoryBank, MemoryEntry


class EmptyBank(ValueError):
    pass


@dataclass(frozen=True)
class RetrievedSet:
    entries: tuple
    per_entry_scores: tuple  # (spk_sim, emo_sim) per entry
    k_requested: int

    def __len__(self):
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.segment_id for e in self.entries]

    def without_anchor(self) -> "RetrievedSet":
        keep = [i for i, e in enumerate(self.entries) if not e.is_anchor]
        return RetrievedSet(tuple(self.entries[i] for i in keep),
                            tuple(self.per_entry_scores[i] for i in keep),
                            self.k_requested)


def _sims(bank: MemoryBank, query: EmbeddingVec) -> np.ndarray:
    mat = bank.spk_matrix if query.attribute is Attribute.SPEAKER else bank.emo_matrix
    if mat.shape[1] != query.dim:
        raise DimensionMismatch(f"bank dim {mat.shape[1]} vs query dim {query.dim}")
    return np.clip(mat @ query.values, -1.0, 1.0)


def _ranked(scores: np.ndarray, bank: MemoryBank) -> list[int]:
    steps = [e.admitted_at_step for e in bank.entries]
    return sorted(range(len(bank)), key=lambda i: (-scores[i], steps[i]))


def top_k_by_attribute(bank: MemoryBank, query: EmbeddingVec, k: int) -> list[MemoryEntry]:
    """The ``min(k, len(bank))`` most similar entries under the query's attribute."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(bank) == 0:
        raise EmptyBank("nothing to retrieve from")
    order = _ranked(_sims(bank, query), bank)
    return [bank.entries[i] for i in order[:k]]


def retrieve_context(bank: MemoryBank, mixture_spk_emb: EmbeddingVec,
                     mixture_emo_emb: EmbeddingVec, k: int) -> RetrievedSet:
    """Union of the speaker top-k and emotion top-k sets.

    The union holds between k and 2k entries. It is ordered by the combined
    relevance ``spk_sim + alpha * emo_sim`` (alpha taken from the bank), so
    the most pertinent history lands right after the anchor when the
    enrollment is assembled.
    """
    if mixture_spk_emb.attribute is not Attribute.SPEAKER:
        raise AttributeMismatch("speaker query expected")
    if mixture_emo_emb.attribute is not Attribute.EMOTION:
        raise AttributeMismatch("emotion query expected")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(bank) == 0:
        raise EmptyBank("nothing to retrieve from")

    spk = _sims(bank, mixture_spk_emb)
    emo = _sims(bank, mixture_emo_emb)
    chosen = set(_ranked(spk, bank)[:k]) | set(_ranked(emo, bank)[:k])
    combined = spk + bank.alpha * emo
    order = [i for i in _ranked(combined, bank) if i in chosen]
    return RetrievedSet(
        entries=tuple(bank.entries[i] for i in order),
        per_entry_scores=tuple((float(spk[i]), float(emo[i])) for i in order),
        k_requested=k,
    )
