"""Acceptance gate: the eleven criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see ``conftest.py``). Run alone with

    pytest tests/test_acceptance.py -v
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from evoenroll import cli
from evoenroll.embedding import Attribute, normalize
from evoenroll.experiment import SimConfig, gen_sessions, run_many, summarize_records
from evoenroll.memory import Decision, admit, evict_most_redundant, redundancy_scores, reliability_score
from evoenroll.metrics import nsr, si_sdr, si_sdric
from evoenroll.pipeline import Hyper, Mode
from evoenroll.retrieval import retrieve_context
from evoenroll.simulation import EMOTIONS, DriftParams, SessionConfig
from conftest import gram_for_redundancy, make_bank, make_entry, unit_rows_with_gram
from oracles import cos, evict_oracle, redundancy_loop, si_sdr_mp, top_k_oracle

RESULTS = {}


def check(n, ok, detail, started=None):
    took = f" [{time.perf_counter() - started:.1f}s]" if started is not None else ""
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}{took}"
    RESULTS[n] = line
    print(line)
    assert ok, line


DEFAULT = SimConfig()


@pytest.fixture(scope="module")
def default_pool():
    return gen_sessions(DEFAULT, 20, seed=0)


@pytest.fixture(scope="module")
def default_nsr(default_pool):
    """NSR per mode on the 20 default sessions, plus total runtime."""
    t0 = time.perf_counter()
    runs = {
        "tau=0.0": (Hyper(tau=0.0), Mode.EVOLVE),
        "tau=0.5": (Hyper(tau=0.5), Mode.EVOLVE),
        "static": (Hyper(), Mode.STATIC),
        "oracle_label": (Hyper(), Mode.ORACLE_LABEL),
    }
    out = {name: summarize_records(run_many(default_pool, DEFAULT, h, m))["nsr"] for name, (h, m) in runs.items()}
    return out, time.perf_counter() - t0


def test_c01_classifier_worked_example():
    t0 = time.perf_counter()
    est = np.eye(4)[0]
    rows = [s * est + np.sqrt(1 - s * s) * np.eye(4)[i + 1] for i, s in enumerate((0.47, 0.32, 0.51))]
    bank = make_bank(rows)
    c = reliability_score(bank, normalize(est, Attribute.SPEAKER))
    _, d_hi, _ = admit(bank, make_entry(est, sid="est"), 0.6, 10)
    _, d_lo, _ = admit(bank, make_entry(est, sid="est"), 0.5, 10)
    ok = abs(c - 0.51) < 1e-12 and d_hi is Decision.REJECTED and d_lo is Decision.ACCEPTED
    check(1, ok, f"c_n={c:.12f}, tau=0.6 -> {d_hi.value}, tau=0.5 -> {d_lo.value}", t0)


def test_c02_eviction_worked_example():
    t0 = time.perf_counter()
    omegas = [0.5, 0.34, 0.57, 0.67, 0.75]
    half = 0.5 * gram_for_redundancy(omegas)
    np.fill_diagonal(half, 1.0)
    rows = unit_rows_with_gram(half)
    bank = make_bank(rows, rows, alpha=1.0)
    om = redundancy_scores(bank)
    _, evicted = evict_most_redundant(bank)
    ok = np.allclose(om[1:], omegas[1:], atol=1e-12) and evicted == "m4"
    check(2, ok, f"non-anchor omega={np.round(om[1:], 12).tolist()}, evicted entry with {om[4]:.2f}", t0)


def test_c03_static_equivalence():
    t0 = time.perf_counter()
    sim = replace(DEFAULT, session=replace(DEFAULT.session, n_segments=25, duration_s=1.0))
    pool = gen_sessions(sim, 20, seed=2024)
    fields = lambda r: (r.si_sdr, r.si_sdri, r.confused, r.true_confused, r.c_n, r.enrollment_len)
    static = run_many(pool, sim, Hyper(), Mode.STATIC)
    frozen = run_many(pool, sim, Hyper(tau=1.0), Mode.EVOLVE)
    mismatched = sum(fields(a) != fields(b) for sa, sb in zip(static, frozen) for a, b in zip(sa, sb))
    n = sum(map(len, static))
    check(3, mismatched == 0, f"{n - mismatched}/{n} step records identical over 20 sessions", t0)


def test_c04_memory_poisoning(default_nsr):
    got, took = default_nsr
    gap = got["tau=0.0"] - got["tau=0.5"]
    ok = gap >= 5.0 and got["tau=0.5"] < got["static"]
    check(4, ok, f"NSR tau=0: {got['tau=0.0']:.1f}%, tau=0.5: {got['tau=0.5']:.1f}%, static: "
                 f"{got['static']:.1f}% (gap {gap:.1f} pp, need >= 5) [{took:.1f}s for all modes]")


def test_c05_k_sweep_interior_maximum():
    t0 = time.perf_counter()
    drift = DriftParams(stay=0.3, neutral_pull=0.0)
    sim = replace(DEFAULT, session=replace(DEFAULT.session, n_segments=100, drift=drift))
    pool = gen_sessions(sim, 10, seed=0)
    grid = [1, 3, 12, 24, 48, 64]
    means = [summarize_records(run_many(pool, sim, Hyper(tau=0.5, k=k), Mode.EVOLVE))["mean_si_sdri"] for k in grid]
    best = int(np.argmax(means))
    ok = 0 < best < len(grid) - 1 and means[best] > means[-1]
    shown = ", ".join(f"k={k}: {m:.2f}" for k, m in zip(grid, means))
    check(5, ok, f"mean SI-SDRi {shown} dB; max at k={grid[best]}", t0)


def test_c06_oracle_label_top_line(default_nsr):
    got, _ = default_nsr
    top = got["oracle_label"]
    others = {k: v for k, v in got.items() if k != "oracle_label"}
    ok = top <= 1.0 and all(top <= v for v in others.values())
    check(6, ok, f"oracle_label NSR {top:.2f}% (limit 1%), others "
                 + ", ".join(f"{k}: {v:.1f}%" for k, v in others.items()))


def test_c07_redundancy_brute_force():
    t0 = time.perf_counter()
    r = np.random.default_rng(7)
    worst, wrong = 0.0, 0
    for _ in range(500):
        size, alpha, dim = int(r.integers(2, 17)), float(r.uniform(0, 2)), int(r.integers(2, 12))
        spk, emo = r.standard_normal((size, dim)), r.standard_normal((size, dim))
        bank = make_bank(spk, emo, alpha=alpha)
        expect = redundancy_loop(spk, emo, alpha)
        worst = max(worst, float(np.max(np.abs(redundancy_scores(bank) - expect))))
        if size >= 2:
            _, evicted = evict_most_redundant(bank)
            idx = evict_oracle(expect, [i == 0 for i in range(size)], list(range(size)))
            wrong += evicted != f"m{idx}"
    check(7, worst < 1e-9 and wrong == 0, f"500 banks: max |omega - oracle| = {worst:.2e}, "
                                           f"{wrong} eviction mismatches", t0)


def test_c08_retrieval_union_bounds():
    t0 = time.perf_counter()
    r = np.random.default_rng(8)
    bad = 0
    for _ in range(1000):
        size, k, dim = int(r.integers(1, 33)), int(r.integers(1, 17)), int(r.integers(2, 10))
        bank = make_bank(r.standard_normal((size, dim)), r.standard_normal((size, dim)), alpha=float(r.uniform(0, 2)))
        qs = normalize(r.standard_normal(dim), Attribute.SPEAKER)
        qe = normalize(r.standard_normal(dim), Attribute.EMOTION)
        ids = set(retrieve_context(bank, qs, qe, k).ids)
        steps = list(range(size))
        m_spk = {f"m{i}" for i in top_k_oracle([cos(e.spk_emb.values, qs.values) for e in bank], steps, k)}
        m_emo = {f"m{i}" for i in top_k_oracle([cos(e.emo_emb.values, qe.values) for e in bank], steps, k)}
        ok = m_spk <= ids and m_emo <= ids and len(ids) <= size
        if size >= k:
            ok = ok and k <= len(ids) <= min(2 * k, size)
        bad += not ok
    check(8, bad == 0, f"{1000 - bad}/1000 random queries satisfy the union bounds", t0)


def test_c09_metric_oracle():
    t0 = time.perf_counter()
    r = np.random.default_rng(9)
    worst_mp = worst_scale = 0.0
    for _ in range(1000):
        n = int(r.integers(16, 128))
        ref = r.standard_normal(n)
        est = r.uniform(-2, 2) * ref + r.uniform(0.01, 3) * r.standard_normal(n)
        val = si_sdr(est, ref)
        worst_mp = max(worst_mp, abs(val - si_sdr_mp(est, ref)))
        a = float(r.choice([-1, 1]) * 10 ** r.uniform(-3, 3))
        worst_scale = max(worst_scale, abs(si_sdr(a * est, ref) - val))
    vals = [5.0, -3.0, 2.0, -1.0]
    exact = nsr(vals) == 50.0 and si_sdric(vals) == 3.5
    ok = worst_mp < 1e-6 and worst_scale < 1e-6 and exact
    check(9, ok, f"max |si_sdr - mpmath| = {worst_mp:.1e} dB, max scale drift = {worst_scale:.1e} dB, "
                 f"(5,-3,2,-1) -> NSR {nsr(vals)}, SI-SDRiC {si_sdric(vals)}", t0)


def test_c10_initial_emotion_robustness():
    t0 = time.perf_counter()
    evolve, static = {}, {}
    for emotion in EMOTIONS:
        sim = replace(DEFAULT, session=replace(DEFAULT.session, init_enrollment_emotion=emotion))
        pool = gen_sessions(sim, 50, seed=0)
        evolve[emotion] = summarize_records(run_many(pool, sim, Hyper(), Mode.EVOLVE))["mean_si_sdri"]
        static[emotion] = summarize_records(run_many(pool, sim, Hyper(), Mode.STATIC))["mean_si_sdri"]
    spread = lambda d: max(d.values()) - min(d.values())
    ok = spread(evolve) < spread(static)
    table = "; ".join(f"{e}: {evolve[e]:.2f}/{static[e]:.2f}" for e in EMOTIONS)
    check(10, ok, f"spread evolve {spread(evolve):.2f} dB < static {spread(static):.2f} dB "
                  f"(evolve/static per init: {table})", t0)


def test_c11_round_trip(tmp_path):
    t0 = time.perf_counter()
    d = tmp_path / "session"
    code = cli.main(["export-session", "--segments", "20", "--seed", "11", "--out", str(d)])
    in_process = {}
    for line in (d / "records.csv").read_text().splitlines()[1:]:
        name, _, sdr, sdri, *_ = line.split(",")
        in_process[name] = (float(sdr), float(sdri))
    rows, failures = cli.cmd_score(d / "est", d / "ref", d / "mix", tmp_path / "score.csv")
    worst = max(max(abs(ev.si_sdr_est - in_process[name][0]), abs(ev.si_sdri - in_process[name][1]))
                for name, ev in rows)
    ok = code == 0 and not failures and len(rows) == 20 and worst <= 0.01
    check(11, ok, f"{len(rows)} files rescored from 16-bit WAV, max deviation {worst:.2e} dB (limit 0.01)", t0)
