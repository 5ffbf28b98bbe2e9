"""Dense-vector math shared by the memory, retrieval and simulation layers.

Everything here is a pure function over immutable inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

ZERO_NORM = 1e-12


class Attribute(str, enum.Enum):
    SPEAKER = "speaker"
    EMOTION = "emotion"


class EmbeddingError(ValueError):
    pass


class ZeroVector(EmbeddingError):
    pass


class DimensionMismatch(EmbeddingError):
    pass


class AttributeMismatch(EmbeddingError):
    pass


class EmptyCandidates(EmbeddingError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingVec:
    """A unit-norm embedding tagged with the attribute it encodes.

    Build these through :func:`normalize`; the constructor only checks shape
    and rejects zero vectors, it does not rescale.
    """

    values: np.ndarray
    attribute: Attribute = field(default=Attribute.SPEAKER)

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).ravel()
        if arr.size < 2:
            raise DimensionMismatch(f"embedding needs at least 2 components, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise EmbeddingError("embedding contains non-finite values")
        if float(np.linalg.norm(arr)) <= ZERO_NORM:
            raise ZeroVector("zero vector cannot be an embedding")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "attribute", Attribute(self.attribute))

    @property
    def dim(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, EmbeddingVec):
            return NotImplemented
        return self.attribute == other.attribute and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.attribute, self.values.tobytes()))

    def __repr__(self):
        head = ", ".join(f"{v:.3f}" for v in self.values[:4])
        more = ", ..." if self.dim > 4 else ""
        return f"EmbeddingVec({self.attribute.value}, dim={self.dim}, [{head}{more}])"


def normalize(v, attribute: Attribute | str | None = None) -> EmbeddingVec:
    """Scale ``v`` to unit L2 norm.

    An :class:`EmbeddingVec` is already normalized and is returned with its
    values untouched, which keeps the operation idempotent bit-for-bit.
    """
    if isinstance(v, EmbeddingVec):
        if attribute is None or Attribute(attribute) == v.attribute:
            return v
        return EmbeddingVec(v.values, Attribute(attribute))
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size < 2:
        raise DimensionMismatch(f"embedding needs at least 2 components, got {arr.size}")
    norm = float(np.linalg.norm(arr))
    if not norm > ZERO_NORM:
        raise ZeroVector(f"cannot normalize vector with norm {norm:g}")
    return EmbeddingVec(arr / norm, Attribute(attribute or Attribute.SPEAKER))


def _check_pair(u: EmbeddingVec, v: EmbeddingVec) -> None:
    if u.attribute != v.attribute:
        raise AttributeMismatch(f"{u.attribute.value} vs {v.attribute.value}")
    if u.dim != v.dim:
        raise DimensionMismatch(f"dimension {u.dim} vs {v.dim}")


def cosine_sim(u: EmbeddingVec, v: EmbeddingVec) -> float:
    _check_pair(u, v)
    # elementwise product is commutative, so the sum is order-independent
    s = math.fsum(u.values * v.values)
    return min(1.0, max(-1.0, s))


def similarity_matrix(query: EmbeddingVec, candidates: Sequence[EmbeddingVec]) -> np.ndarray:
    """Cosine similarity of ``query`` against each candidate, clamped to [-1, 1]."""
    if len(candidates) == 0:
        raise EmptyCandidates("no candidates")
    for c in candidates:
        _check_pair(query, c)
    mat = np.stack([c.values for c in candidates])
    return np.clip(mat @ query.values, -1.0, 1.0)


def relevance_distribution(query: EmbeddingVec, candidates: Sequence[EmbeddingVec]) -> np.ndarray:
    """Softmax of raw cosine similarities (temperature 1)."""
    sims = similarity_matrix(query, candidates)
    # shifting by the max leaves the softmax unchanged and avoids overflow
    w = np.exp(sims - sims.max())
    return w / w.sum()


class Embedder(Protocol):
    """Anything that maps a segment to an embedding of one attribute."""

    attribute: Attribute

    def embed(self, segment) -> EmbeddingVec: ...
