"""Evolving memory bank with reliability-gated admission and redundancy-aware eviction.

Banks are immutable values: every update returns a new bank and leaves the
old one intact, so a session can keep snapshots for free.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .embedding import Attribute, AttributeMismatch, EmbeddingVec
from .segment import Segment


class Decision(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class BankError(ValueError):
    pass


class InvalidCapacity(BankError):
    pass


class BankTooSmall(BankError):
    pass


@dataclass(frozen=True, eq=False)
class MemoryEntry:
    segment: Segment
    spk_emb: EmbeddingVec
    emo_emb: EmbeddingVec
    admitted_at_step: int = 0
    is_anchor: bool = False
    # reliability score observed at admission; None for the anchor
    admitted_score: float | None = None

    def __post_init__(self):
        if self.spk_emb.attribute is not Attribute.SPEAKER:
            raise AttributeMismatch("spk_emb must be a speaker embedding")
        if self.emo_emb.attribute is not Attribute.EMOTION:
            raise AttributeMismatch("emo_emb must be an emotion embedding")
        if len(self.segment) == 0:
            raise ValueError("memory entries need a non-empty waveform")

    @property
    def segment_id(self) -> str:
        return self.segment.id

    @property
    def waveform(self) -> np.ndarray:
        return self.segment.samples


@dataclass(frozen=True, eq=False)
class MemoryBank:
    entries: tuple
    capacity: int
    alpha: float = 1.0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    @property
    def anchor(self) -> MemoryEntry:
        return next(e for e in self.entries if e.is_anchor)

    @property
    def ids(self) -> list[str]:
        return [e.segment_id for e in self.entries]

    @cached_property
    def spk_matrix(self) -> np.ndarray:
        return np.stack([e.spk_emb.values for e in self.entries])

    @cached_property
    def emo_matrix(self) -> np.ndarray:
        return np.stack([e.emo_emb.values for e in self.entries])

    def with_entries(self, entries) -> "MemoryBank":
        return MemoryBank(tuple(entries), self.capacity, self.alpha)


def new_bank(anchor_enrollment: MemoryEntry, capacity: int, alpha: float = 1.0) -> MemoryBank:
    if int(capacity) != capacity or capacity < 1:
        raise InvalidCapacity(f"capacity must be a positive integer, got {capacity!r}")
    if not alpha >= 0:
        raise ValueError(f"alpha must be non-negative, got {alpha!r}")
    anchor = replace(anchor_enrollment, is_anchor=True, admitted_at_step=0, admitted_score=None)
    return MemoryBank((anchor,), int(capacity), float(alpha))


def _pairwise(mat: np.ndarray) -> np.ndarray:
    s = np.clip(mat @ mat.T, -1.0, 1.0)
    # force exact symmetry so swapped entries score identically
    return 0.5 * (s + s.T)


def reliability_score(bank: MemoryBank, est_spk_emb: EmbeddingVec) -> float:
    """Nearest-neighbour speaker similarity of an estimate against the whole bank."""
    if est_spk_emb.attribute is not Attribute.SPEAKER:
        raise AttributeMismatch("reliability is scored on speaker embeddings only")
    if len(bank) == 0:
        raise BankTooSmall("empty bank")
    sims = np.clip(bank.spk_matrix @ est_spk_emb.values, -1.0, 1.0)
    return float(sims.max())


def redundancy_scores(bank: MemoryBank) -> np.ndarray:
    """Average combined speaker + alpha * emotion similarity of each entry to all others."""
    n = len(bank)
    if n < 2:
        raise BankTooSmall("redundancy needs at least two entries")
    combined = _pairwise(bank.spk_matrix) + bank.alpha * _pairwise(bank.emo_matrix)
    np.fill_diagonal(combined, 0.0)
    # fsum keeps row sums independent of where the zeroed diagonal sits
    return np.array([math.fsum(row) for row in combined]) / (n - 1)


def evict_most_redundant(bank: MemoryBank) -> tuple[MemoryBank, str]:
    """Drop the non-anchor entry with the highest redundancy score.

    Ties go against the oldest entry. The anchor is never a target, even
    when it is the most redundant member.
    """
    omega = redundancy_scores(bank)
    candidates = [i for i, e in enumerate(bank.entries) if not e.is_anchor]
    if not candidates:
        raise BankTooSmall("bank holds only the anchor")
    victim = min(candidates, key=lambda i: (-omega[i], bank.entries[i].admitted_at_step))
    evicted = bank.entries[victim]
    kept = bank.entries[:victim] + bank.entries[victim + 1:]
    return bank.with_entries(kept), evicted.segment_id


def admit(bank: MemoryBank, candidate: MemoryEntry, tau: float,
          current_step: int) -> tuple[MemoryBank, Decision, float]:
    """Gate ``candidate`` on its reliability score and store it if it passes.

    The candidate is accepted only if its score is strictly above ``tau``.
    A full bank first evicts its most redundant non-anchor entry. A bank of
    capacity 1 has nothing to evict, so it rejects everything.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    c_n = reliability_score(bank, candidate.spk_emb)
    if not c_n > tau:
        return bank, Decision.REJECTED, c_n
    last = max(e.admitted_at_step for e in bank.entries)
    if current_step <= last:
        raise ValueError(f"step {current_step} is not after the last admission at step {last}")
    if bank.is_full:
        if len(bank) < 2:
            return bank, Decision.REJECTED, c_n
        bank, _ = evict_most_redundant(bank)
    entry = replace(candidate, admitted_at_step=current_step, is_anchor=False, admitted_score=c_n)
    return bank.with_entries(bank.entries + (entry,)), Decision.ACCEPTED, c_n
