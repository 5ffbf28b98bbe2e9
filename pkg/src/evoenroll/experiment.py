"""Drive simulated sessions through the pipeline and aggregate the results."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import metrics
from .embedding import Attribute
from .pipeline import Embedders, Hyper, Mode, StepRecord, init_state, run_session
from .simulation import (ConfusionOracleParams, OracleExtractor, SessionConfig, SimSession,
                         SyntheticEmbedder, gen_session)


@dataclass(frozen=True)
class SimConfig:
    session: SessionConfig = SessionConfig()
    oracle: ConfusionOracleParams = ConfusionOracleParams()
    embed_noise: float = 0.1
    embed_seed: int = 0


def session_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def make_embedders(sim: SimConfig) -> Embedders:
    return Embedders(SyntheticEmbedder(Attribute.SPEAKER, sim.embed_noise, sim.embed_seed),
                     SyntheticEmbedder(Attribute.EMOTION, sim.embed_noise, sim.embed_seed))


def make_extractor(sim: SimConfig) -> OracleExtractor:
    return OracleExtractor(sim.oracle, sim.embed_noise, sim.embed_seed)


def gen_sessions(sim: SimConfig, sessions: int, seed: int) -> list[SimSession]:
    return [gen_session(sim.session, session_seed(seed, i)) for i in range(sessions)]


def run_one(session: SimSession, sim: SimConfig, hyper: Hyper, mode: Mode | str,
            embedders: Optional[Embedders] = None, return_state: bool = False):
    embedders = embedders or make_embedders(sim)
    state0 = init_state(session.enrollment, embedders, hyper, mode)
    return run_session(session.mixtures, session.targets, state0, make_extractor(sim), embedders,
                       return_state=return_state)


def run_many(sessions: Sequence[SimSession], sim: SimConfig, hyper: Hyper,
             mode: Mode | str) -> list[list[StepRecord]]:
    embedders = make_embedders(sim)
    return [run_one(s, sim, hyper, mode, embedders) for s in sessions]


def summarize_records(per_session: Iterable[Sequence[StepRecord]]) -> dict:
    """Pooled SI-SDRi mean, NSR and SI-SDRiC over every step of every session."""
    vals = [r.si_sdri for recs in per_session for r in recs]
    return metrics.summarize(vals)


@dataclass
class SweepRow:
    axis: str
    value: Optional[float]
    mode: str
    summary: dict = field(default_factory=dict)


def sweep(sim: SimConfig, base: Hyper, axis: str, values: Sequence, sessions: int, seed: int,
          include_static: bool = True) -> list[SweepRow]:
    """Evolve-mode summary per value of ``axis`` plus one static baseline row.

    Every value is evaluated on the same generated sessions.
    """
    if axis not in ("tau", "k"):
        raise ValueError(f"cannot sweep over {axis!r}")
    if len(values) == 0:
        raise ValueError("empty sweep")
    pool = gen_sessions(sim, sessions, seed)
    rows = []
    for v in values:
        hyper = replace(base, **{axis: type(getattr(base, axis))(v)})
        rows.append(SweepRow(axis, v, Mode.EVOLVE.value,
                             summarize_records(run_many(pool, sim, hyper, Mode.EVOLVE))))
    if include_static:
        rows.append(SweepRow(axis, None, Mode.STATIC.value,
                             summarize_records(run_many(pool, sim, base, Mode.STATIC))))
    return rows
