"""Source-separation scores: SI-SDR, SI-SDRi, NSR, SI-SDRiC and the group loss.

SI-SDR is capped to [-80, 80] dB and both energies are floored at 1e-12 so
perfect reconstructions and silent errors stay finite. Signals are not
mean-removed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

SDR_CAP_DB = 80.0
ENERGY_FLOOR = 1e-12


class MetricError(ValueError):
    pass


class LengthMismatch(MetricError):
    pass


class ZeroReference(MetricError):
    pass


class EmptyList(MetricError):
    pass


class ShapeMismatch(MetricError):
    pass


def _samples(x) -> np.ndarray:
    return np.asarray(getattr(x, "samples", x), dtype=np.float64).ravel()


def si_sdr(est, ref) -> float:
    est, ref = _samples(est), _samples(ref)
    if est.shape != ref.shape:
        raise LengthMismatch(f"{est.size} vs {ref.size} samples")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ZeroReference("reference is all zeros")
    target = (float(np.dot(est, ref)) / ref_energy) * ref
    err = est - target
    num = max(float(np.dot(target, target)), ENERGY_FLOOR)
    den = max(float(np.dot(err, err)), ENERGY_FLOOR)
    return float(np.clip(10.0 * math.log10(num / den), -SDR_CAP_DB, SDR_CAP_DB))


def si_sdri(est, mix, ref) -> float:
    return si_sdr(est, ref) - si_sdr(mix, ref)


@dataclass(frozen=True)
class EvalRecord:
    si_sdr_est: float
    si_sdr_mix: float

    @property
    def si_sdri(self) -> float:
        return self.si_sdr_est - self.si_sdr_mix

    @property
    def confused(self) -> bool:
        return self.si_sdri < 0

    @classmethod
    def score(cls, est, mix, ref) -> "EvalRecord":
        return cls(si_sdr(est, ref), si_sdr(mix, ref))


def nsr(si_sdri_values: Sequence[float]) -> float:
    """Percentage of segments with strictly negative SI-SDRi."""
    vals = list(si_sdri_values)
    if not vals:
        raise EmptyList("NSR of an empty list")
    return 100.0 * sum(1 for v in vals if v < 0) / len(vals)


def si_sdric(si_sdri_values: Sequence[float]) -> Optional[float]:
    """Mean SI-SDRi over non-negative entries; None when every entry is negative."""
    vals = list(si_sdri_values)
    if not vals:
        raise EmptyList("SI-SDRiC of an empty list")
    correct = [v for v in vals if v >= 0]
    if not correct:
        return None
    return math.fsum(correct) / len(correct)


def neg_si_sdr(est, ref) -> float:
    return -si_sdr(est, ref)


def group_loss(estimates, refs, loss_fn: Callable = neg_si_sdr) -> float:
    """Mean of ``loss_fn`` over a batch of B groups of N segments each."""
    if len(estimates) != len(refs) or len(estimates) == 0:
        raise ShapeMismatch(f"batch sizes {len(estimates)} vs {len(refs)}")
    n = len(estimates[0])
    terms = []
    for est_group, ref_group in zip(estimates, refs):
        if len(est_group) != n or len(ref_group) != n or n == 0:
            raise ShapeMismatch("every group needs the same non-zero length N")
        terms.extend(loss_fn(e, r) for e, r in zip(est_group, ref_group))
    return math.fsum(terms) / len(terms)


def summarize(si_sdri_values: Sequence[float]) -> dict:
    vals = list(si_sdri_values)
    return {
        "n": len(vals),
        "mean_si_sdri": math.fsum(vals) / len(vals),
        "nsr": nsr(vals),
        "si_sdric": si_sdric(vals),
    }
