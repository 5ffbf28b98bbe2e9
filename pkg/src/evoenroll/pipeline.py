"""The evolving inference loop.

For each mixture: retrieve context from the bank, compose the enrollment,
run the extractor, score the estimate's reliability and curate the bank.
``static`` mode always conditions on the initial enrollment and never
touches the bank; ``oracle_label`` conditions on the ground-truth target.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, replace
from typing import Optional, Protocol, Sequence

import numpy as np

from . import metrics
from .embedding import Embedder
from .memory import Decision, MemoryBank, MemoryEntry, admit, new_bank, reliability_score
from .retrieval import RetrievedSet, retrieve_context
from .segment import SampleRateMismatch, Segment, concat_truth


class Mode(str, enum.Enum):
    EVOLVE = "evolve"
    STATIC = "static"
    ORACLE_LABEL = "oracle_label"


class AlignmentError(ValueError):
    pass


class Extractor(Protocol):
    def extract(self, mixture: Segment, enrollment: Segment) -> Segment: ...


@dataclass(frozen=True)
class Embedders:
    speaker: Embedder
    emotion: Embedder

    def entry(self, segment: Segment) -> MemoryEntry:
        return MemoryEntry(segment, self.speaker.embed(segment), self.emotion.embed(segment))


@dataclass(frozen=True)
class Hyper:
    tau: float = 0.5
    k: int = 3
    capacity: int = 64
    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class SessionState:
    initial_enrollment: Segment
    bank: MemoryBank
    hyper: Hyper
    mode: Mode = Mode.EVOLVE
    step: int = 0


@dataclass(frozen=True)
class StepRecord:
    step: int
    c_n: float
    decision: Decision
    bank_size: int
    enrollment_len: int
    estimate_id: str
    retrieved_ids: tuple = ()
    si_sdr: Optional[float] = None
    si_sdri: Optional[float] = None
    confused: Optional[bool] = None
    # identity check against the simulator's hidden truth; diagnostics only
    true_confused: Optional[bool] = None


def init_state(initial_enrollment: Segment, embedders: Embedders, hyper: Hyper = Hyper(),
               mode: Mode | str = Mode.EVOLVE) -> SessionState:
    bank = new_bank(embedders.entry(initial_enrollment), hyper.capacity, hyper.alpha)
    return SessionState(initial_enrollment, bank, hyper, Mode(mode))


def compose_enrollment(r: Segment, retrieved: RetrievedSet | Sequence[MemoryEntry]) -> Segment:
    """Concatenate the initial enrollment with the retrieved segments, in order.

    With nothing retrieved the initial enrollment itself is returned.
    """
    entries = list(getattr(retrieved, "entries", retrieved))
    if not entries:
        return r
    parts = [r] + [e.segment for e in entries]
    for p in parts:
        if p.sample_rate != r.sample_rate:
            raise SampleRateMismatch(f"{p.id} at {p.sample_rate} Hz, expected {r.sample_rate} Hz")
    digest = hashlib.sha1("\x1f".join(p.id for p in parts).encode()).hexdigest()[:12]
    return Segment(
        id=f"{r.id}+enr{digest}",
        samples=np.concatenate([p.samples for p in parts]),
        sample_rate=r.sample_rate,
        truth=concat_truth(parts),
    )


def _true_confused(mixture: Segment, estimate: Segment) -> Optional[bool]:
    if mixture.truth is None or not mixture.truth.is_mixture or estimate.truth is None:
        return None
    return estimate.truth.speaker_id != mixture.truth.sources[0].truth.speaker_id


def step(state: SessionState, mixture: Segment, extractor: Extractor, embedders: Embedders,
         ref: Optional[Segment] = None) -> tuple[Segment, StepRecord, SessionState]:
    if len(mixture) == 0:
        raise ValueError("empty mixture")
    n = state.step + 1
    bank = state.bank
    retrieved_ids: tuple = ()

    if state.mode is Mode.EVOLVE:
        found = retrieve_context(bank, embedders.speaker.embed(mixture),
                                 embedders.emotion.embed(mixture), state.hyper.k)
        if len(bank) == 1:
            # a lone anchor would only duplicate r
            found = found.without_anchor()
        retrieved_ids = tuple(found.ids)
        enrollment = compose_enrollment(state.initial_enrollment, found)
    elif state.mode is Mode.STATIC:
        enrollment = state.initial_enrollment
    else:
        if ref is None:
            raise AlignmentError("oracle_label mode needs the reference target")
        enrollment = ref

    estimate = extractor.extract(mixture, enrollment)
    if len(estimate) != len(mixture):
        raise AlignmentError(f"extractor returned {len(estimate)} samples for a {len(mixture)}-sample mixture")

    if state.mode is Mode.EVOLVE:
        candidate = embedders.entry(estimate)
        bank, decision, c_n = admit(bank, candidate, state.hyper.tau, n)
    else:
        c_n = reliability_score(bank, embedders.speaker.embed(estimate))
        decision = Decision.REJECTED

    scores = {}
    if ref is not None:
        ev = metrics.EvalRecord.score(estimate, mixture, ref)
        scores = dict(si_sdr=ev.si_sdr_est, si_sdri=ev.si_sdri, confused=ev.confused)

    record = StepRecord(
        step=n, c_n=c_n, decision=decision, bank_size=len(bank),
        enrollment_len=len(enrollment), estimate_id=estimate.id,
        retrieved_ids=retrieved_ids, true_confused=_true_confused(mixture, estimate), **scores,
    )
    return estimate, record, replace(state, bank=bank, step=n)


def iter_session(segments: Sequence[Segment], refs: Optional[Sequence[Segment]],
                 state0: SessionState, extractor: Extractor, embedders: Embedders):
    """Yield ``(estimate, record, state)`` after each mixture, in order."""
    if len(segments) == 0:
        raise ValueError("a session needs at least one mixture")
    if refs is not None and len(refs) != len(segments):
        raise AlignmentError(f"{len(refs)} references for {len(segments)} mixtures")
    state = state0
    for i, mixture in enumerate(segments):
        estimate, record, state = step(state, mixture, extractor, embedders,
                                       None if refs is None else refs[i])
        yield estimate, record, state


def run_session(segments: Sequence[Segment], refs: Optional[Sequence[Segment]],
                state0: SessionState, extractor: Extractor, embedders: Embedders,
                return_state: bool = False):
    """Fold :func:`step` over a session's mixtures.

    Returns the step records, plus the final state when ``return_state``.
    """
    records, state = [], state0
    for _, record, state in iter_session(segments, refs, state0, extractor, embedders):
        records.append(record)
    return (records, state) if return_state else records
