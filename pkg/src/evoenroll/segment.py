"""Audio segments and the latent ground truth the simulator attaches to them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SAMPLE_RATE = 8000


class SampleRateMismatch(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Truth:
    """Latent description of a segment, known only inside the simulator.

    ``spk_vec`` / ``emo_vec`` are the latent embeddings the synthetic
    embedders perturb. Mixtures additionally carry their constituent
    segments (target first, then the gain-scaled interferer) and the
    amplitude weights used to combine the latents. Concatenations keep
    their parts, in time order, with length weights.
    """

    speaker_id: Optional[str]
    emotion: Optional[int]
    spk_vec: np.ndarray
    emo_vec: np.ndarray
    sources: tuple = ()
    weights: tuple = ()
    parts: tuple = ()

    @property
    def is_mixture(self) -> bool:
        return len(self.sources) > 0


@dataclass(frozen=True, eq=False)
class Segment:
    id: str
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    truth: Optional[Truth] = field(default=None, repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def concat_truth(parts: list[Segment]) -> Optional[Truth]:
    """Length-weighted pooling of constituent latents, or None if any is unknown."""
    if any(p.truth is None for p in parts):
        return None
    n = np.array([len(p) for p in parts], dtype=np.float64)
    w = n / n.sum()
    spk = sum(wi * p.truth.spk_vec for wi, p in zip(w, parts))
    emo = sum(wi * p.truth.emo_vec for wi, p in zip(w, parts))
    speakers = {p.truth.speaker_id for p in parts}
    speaker = speakers.pop() if len(speakers) == 1 else None
    return Truth(speaker_id=speaker, emotion=None, spk_vec=spk, emo_vec=emo,
                 weights=tuple(float(x) for x in w), parts=tuple(parts))
