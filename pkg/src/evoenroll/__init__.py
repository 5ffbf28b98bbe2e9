"""Evolving enrollment memory for target speaker extraction.

The core loop lives in :mod:`evoenroll.pipeline`; :mod:`evoenroll.simulation`
provides a synthetic world (speakers, emotional drift, mixtures, a
confusion-prone oracle extractor) to exercise it without neural models.
"""
from .embedding import Attribute, EmbeddingVec, cosine_sim, normalize, relevance_distribution, similarity_matrix
from .memory import Decision, MemoryBank, MemoryEntry, admit, evict_most_redundant, new_bank, redundancy_scores, reliability_score
from .metrics import group_loss, nsr, si_sdr, si_sdri, si_sdric
from .pipeline import Embedders, Hyper, Mode, SessionState, StepRecord, compose_enrollment, init_state, run_session, step
from .retrieval import RetrievedSet, retrieve_context, top_k_by_attribute
from .segment import SAMPLE_RATE, Segment

__version__ = "0.1.0"

__all__ = [
    "Attribute", "EmbeddingVec", "cosine_sim", "normalize", "relevance_distribution", "similarity_matrix",
    "Decision", "MemoryBank", "MemoryEntry", "admit", "evict_most_redundant", "new_bank",
    "redundancy_scores", "reliability_score",
    "group_loss", "nsr", "si_sdr", "si_sdri", "si_sdric",
    "Embedders", "Hyper", "Mode", "SessionState", "StepRecord", "compose_enrollment", "init_state",
    "run_session", "step",
    "RetrievedSet", "retrieve_context", "top_k_by_attribute",
    "SAMPLE_RATE", "Segment",
]
