"""Command line front end: simulated runs and sweeps, WAV scoring, table import, exports.

Exit codes: 0 ok, 2 bad configuration, 3 I/O failure, 4 partial scoring
failure, 5 malformed input file.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import formats, metrics
from .embedding import Attribute
from .experiment import (SimConfig, gen_sessions, make_embedders, make_extractor,
                         summarize_records, sweep)
from .pipeline import Embedders, Hyper, Mode, init_state, iter_session
from .simulation import ConfusionOracleParams, DriftParams, SessionConfig, emotion_index

log = logging.getLogger("evoenroll")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PARTIAL, EXIT_FORMAT = 0, 2, 3, 4, 5

RUN_COLUMNS = ["session_id", "step", "mode", "tau", "k", "capacity", "alpha", "c_n", "decision",
               "bank_size", "enrollment_len", "si_sdr", "si_sdri", "confused", "true_confused"]
SWEEP_COLUMNS = ["axis", "value", "mode", "tau", "k", "capacity", "alpha", "sessions",
                 "mean_si_sdri", "nsr", "si_sdric"]
SCORE_COLUMNS = ["file", "si_sdr_est", "si_sdr_mix", "si_sdri", "confused"]

CAP_NOTE = f"# si_sdr capped to [-{metrics.SDR_CAP_DB:g}, {metrics.SDR_CAP_DB:g}] dB, energy floor {metrics.ENERGY_FLOOR:g}"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "evolve"
    tau: float = 0.5
    k: int = 3
    capacity: int = 64
    alpha: float = 1.0
    sessions: int = 1
    seed: int = 0
    segments: int = 50
    duration: float = 2.0
    sir_db: float = 0.0
    init_emotion: Optional[str] = None
    stay: float = DriftParams.stay
    neutral_pull: float = DriftParams.neutral_pull
    interferer_similarity: float = SessionConfig.interferer_similarity
    embed_noise: float = SimConfig.embed_noise
    slope: float = ConfusionOracleParams.slope
    attention: float = ConfusionOracleParams.attention
    spk_table: Optional[str] = None
    emo_table: Optional[str] = None
    out: Optional[str] = None
    dump_bank: Optional[str] = None

    def validate(self) -> "RunConfig":
        try:
            Mode(self.mode)
        except ValueError:
            raise ConfigError(f"unknown mode {self.mode!r}") from None
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        for name in ("k", "capacity", "sessions", "segments"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if not 0.0 <= self.stay <= 1.0 or not 0.0 <= self.neutral_pull <= 1.0:
            raise ConfigError("stay and neutral_pull must lie in [0, 1]")
        if not -1.0 <= self.interferer_similarity <= 1.0:
            raise ConfigError("interferer_similarity must lie in [-1, 1]")
        if not self.slope > 0 or self.attention < 0 or self.embed_noise < 0:
            raise ConfigError("slope must be positive; attention and embed_noise non-negative")
        if self.init_emotion is not None:
            try:
                emotion_index(self.init_emotion)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return self

    @property
    def hyper(self) -> Hyper:
        return Hyper(self.tau, self.k, self.capacity, self.alpha)

    @property
    def sim(self) -> SimConfig:
        drift = DriftParams(stay=self.stay, neutral_pull=self.neutral_pull)
        session = SessionConfig(n_segments=self.segments, duration_s=self.duration, sir_db=self.sir_db,
                                drift=drift, init_enrollment_emotion=self.init_emotion,
                                interferer_similarity=self.interferer_similarity)
        oracle = ConfusionOracleParams(slope=self.slope, attention=self.attention)
        return SimConfig(session=session, oracle=oracle, embed_noise=self.embed_noise)

    @classmethod
    def build(cls, file_values: dict | None = None, **overrides) -> "RunConfig":
        """Defaults, then config-file values, then explicit overrides (``None`` skipped)."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in {**(file_values or {}), **{k: v for k, v in overrides.items() if v is not None}}.items():
            if key not in types:
                raise ConfigError(f"unknown setting {key!r}")
            values[key] = _coerce(key, raw, types[key])
        return cls(**values).validate()


def _coerce(key, raw, type_name):
    if not isinstance(raw, str):
        return raw
    kind = str(type_name)
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return None if raw.lower() in ("", "none") else raw


def _fmt(x, digits=6) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.{digits}f}"
    return str(getattr(x, "value", x))


def _embedders(cfg: RunConfig) -> Embedders:
    base = make_embedders(cfg.sim)
    spk, emo = base.speaker, base.emotion
    if cfg.spk_table:
        spk = formats.TableEmbedder(formats.read_embedding_table(cfg.spk_table), Attribute.SPEAKER, spk)
    if cfg.emo_table:
        emo = formats.TableEmbedder(formats.read_embedding_table(cfg.emo_table), Attribute.EMOTION, emo)
    return Embedders(spk, emo)


def _summary_lines(summary: dict) -> list[str]:
    ric = summary["si_sdric"]
    return [
        f"# segments={summary['n']}",
        f"# mean_si_sdri={summary['mean_si_sdri']:.6f}",
        f"# nsr={summary['nsr']:.6f}",
        f"# si_sdric={'absent' if ric is None else f'{ric:.6f}'}",
        CAP_NOTE,
    ]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run_records(cfg: RunConfig):
    """Per-session (records, final_state) for a simulator-backed run."""
    sim, hyper, mode = cfg.sim, cfg.hyper, Mode(cfg.mode)
    embedders, extractor = _embedders(cfg), make_extractor(sim)
    out = []
    for session in gen_sessions(sim, cfg.sessions, cfg.seed):
        state = init_state(session.enrollment, embedders, hyper, mode)
        records = []
        for _, record, state in iter_session(session.mixtures, session.targets, state, extractor, embedders):
            records.append(record)
        out.append((records, state))
    return out


def cmd_run(cfg: RunConfig) -> dict:
    results = run_records(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for sid, (records, _) in enumerate(results):
        for r in records:
            w.writerow([sid, r.step, cfg.mode, _fmt(cfg.tau), cfg.k, cfg.capacity, _fmt(cfg.alpha),
                        _fmt(r.c_n), r.decision.value, r.bank_size, r.enrollment_len, _fmt(r.si_sdr),
                        _fmt(r.si_sdri), _fmt(r.confused), _fmt(r.true_confused)])
    summary = summarize_records([recs for recs, _ in results])
    buf.write("\n".join(_summary_lines(summary)) + "\n")
    _emit(buf.getvalue(), cfg.out)
    if cfg.dump_bank:
        for sid, (_, state) in enumerate(results):
            formats.dump_bank(state.bank, Path(cfg.dump_bank) / f"session_{sid:03d}")
    return summary


def cmd_sweep(cfg: RunConfig, axis: str, values: Sequence) -> list:
    if not values:
        raise ConfigError("sweep needs at least one value")
    caster = float if axis == "tau" else int
    try:
        values = [caster(v) for v in values]
    except ValueError:
        raise ConfigError(f"bad {axis} values {values!r}") from None
    for v in values:
        try:
            replace(cfg.hyper, **{axis: v})
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    rows = sweep(cfg.sim, cfg.hyper, axis, values, cfg.sessions, cfg.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        tau = row.value if (axis == "tau" and row.value is not None) else cfg.tau
        k = row.value if (axis == "k" and row.value is not None) else cfg.k
        s = row.summary
        w.writerow([axis, _fmt(row.value), row.mode, _fmt(float(tau)), k, cfg.capacity, _fmt(cfg.alpha),
                    cfg.sessions, _fmt(s["mean_si_sdri"]), _fmt(s["nsr"]), _fmt(s["si_sdric"])])
    buf.write(CAP_NOTE + "\n")
    _emit(buf.getvalue(), cfg.out)
    return rows


def cmd_score(est_dir, ref_dir, mix_dir, out: Optional[str] = None) -> tuple[list, list]:
    """Score every ``est_dir/*.wav`` against same-named reference and mixture files.

    Returns ``(rows, failures)``; failures are also reported on stderr.
    """
    est_dir, ref_dir, mix_dir = Path(est_dir), Path(ref_dir), Path(mix_dir)
    for d in (est_dir, ref_dir, mix_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"{d} is not a directory")
    rows, failures = [], []
    for est_path in sorted(est_dir.glob("*.wav")):
        name = est_path.name
        try:
            ref_path, mix_path = ref_dir / name, mix_dir / name
            if not ref_path.exists() or not mix_path.exists():
                raise formats.FormatError(f"missing pair for {name}")
            est, ref, mix = (formats.read_wav(p) for p in (est_path, ref_path, mix_path))
            ev = metrics.EvalRecord.score(est, mix, ref)
        except (formats.FormatError, metrics.MetricError) as exc:
            failures.append((name, str(exc)))
            print(f"error: {name}: {exc}", file=sys.stderr)
            continue
        rows.append((name, ev))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORE_COLUMNS)
    for name, ev in rows:
        w.writerow([name, _fmt(ev.si_sdr_est), _fmt(ev.si_sdr_mix), _fmt(ev.si_sdri), _fmt(ev.confused)])
    if rows:
        buf.write("\n".join(_summary_lines(metrics.summarize([ev.si_sdri for _, ev in rows]))) + "\n")
    if failures:
        buf.write(f"# failed={len(failures)}\n")
    _emit(buf.getvalue(), out)
    return rows, failures


def cmd_import_embeddings(path, expect_dim: Optional[int] = None) -> formats.EmbeddingTable:
    table = formats.read_embedding_table(path, expect_dim)
    print(f"dim={table.dim} count={len(table)}")
    return table


def cmd_export_session(cfg: RunConfig, directory, session_index: int = 0) -> Path:
    """Export one simulated session, with the estimates of a ``cfg.mode`` run."""
    sim, hyper = cfg.sim, cfg.hyper
    session = gen_sessions(sim, session_index + 1, cfg.seed)[session_index]
    embedders, extractor = _embedders(cfg), make_extractor(sim)
    state = init_state(session.enrollment, embedders, hyper, Mode(cfg.mode))
    estimates, records = [], []
    for est, rec, state in iter_session(session.mixtures, session.targets, state, extractor, embedders):
        estimates.append(est)
        records.append(rec)
    manifest = formats.export_session(session, directory, estimates)
    with open(Path(directory) / "records.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["file", "step", "si_sdr", "si_sdri", "c_n", "decision"])
        for n, r in enumerate(records):
            w.writerow([f"seg_{n:03d}.wav", r.step, repr(r.si_sdr), repr(r.si_sdri), repr(r.c_n), r.decision.value])
    return manifest


def cmd_dump_bank(cfg: RunConfig, directory, session_index: int = 0) -> Path:
    """Run one session and dump its final memory bank."""
    sim = cfg.sim
    session = gen_sessions(sim, session_index + 1, cfg.seed)[session_index]
    embedders, extractor = _embedders(cfg), make_extractor(sim)
    state = init_state(session.enrollment, embedders, cfg.hyper, Mode(cfg.mode))
    for _, _, state in iter_session(session.mixtures, session.targets, state, extractor, embedders):
        pass
    return formats.dump_bank(state.bank, directory)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--tau", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--capacity", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sessions", type=int)
    p.add_argument("--segments", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--sir-db", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--init-emotion")
    p.add_argument("--stay", type=float)
    p.add_argument("--neutral-pull", type=float)
    p.add_argument("--interferer-similarity", type=float)
    p.add_argument("--embed-noise", type=float)
    p.add_argument("--slope", type=float)
    p.add_argument("--attention", type=float)
    p.add_argument("--spk-table", help="embedding table used for speaker embeddings where it has the id")
    p.add_argument("--emo-table", help="embedding table used for emotion embeddings where it has the id")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoenroll", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run simulated sessions and write per-step CSV")
    _add_run_flags(p)
    p.add_argument("--dump-bank", help="directory for each session's final bank")

    p = sub.add_parser("sweep", help="summary per tau or k value plus a static baseline row")
    _add_run_flags(p)
    p.add_argument("--axis", choices=["tau", "k"], required=True)
    p.add_argument("--values", required=True, help="comma separated")

    p = sub.add_parser("score", help="score external estimates against references")
    p.add_argument("est_dir")
    p.add_argument("ref_dir")
    p.add_argument("mix_dir")
    p.add_argument("--out")

    p = sub.add_parser("import-embeddings", help="validate and summarize an embedding table")
    p.add_argument("path")
    p.add_argument("--dim", type=int)

    p = sub.add_parser("export-session", help="write a simulated session as WAV files")
    _add_run_flags(p)
    p.add_argument("--session", type=int, default=0)

    p = sub.add_parser("dump-bank", help="run one session and dump its final memory bank")
    _add_run_flags(p)
    p.add_argument("--session", type=int, default=0)
    return parser


_RUN_KEYS = {f.name for f in fields(RunConfig)} - {"dump_bank", "out"}


def _config_from(args) -> RunConfig:
    file_values = formats.parse_config(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _RUN_KEYS | {"out", "dump_bank"}}
    if getattr(args, "init_emotion", None) is not None:
        overrides["init_emotion"] = args.init_emotion
    return RunConfig.build(file_values, **overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cmd_run(_config_from(args))
        elif args.command == "sweep":
            cmd_sweep(_config_from(args), args.axis, [v for v in args.values.split(",") if v.strip()])
        elif args.command == "score":
            _, failures = cmd_score(args.est_dir, args.ref_dir, args.mix_dir, args.out)
            if failures:
                return EXIT_PARTIAL
        elif args.command == "import-embeddings":
            cmd_import_embeddings(args.path, args.dim)
        elif args.command == "export-session":
            cfg = _config_from(args)
            if not cfg.out:
                raise ConfigError("export-session needs --out DIR")
            cmd_export_session(cfg, cfg.out, args.session)
        elif args.command == "dump-bank":
            cfg = _config_from(args)
            if not cfg.out:
                raise ConfigError("dump-bank needs --out DIR")
            cmd_dump_bank(cfg, cfg.out, args.session)
    except formats.FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
