"""On-disk formats: PCM WAV, the binary embedding table, bank dumps and session exports."""
from __future__ import annotations

import logging
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import Attribute, EmbeddingVec, normalize
from .memory import MemoryBank, MemoryEntry
from .segment import SAMPLE_RATE, Segment

log = logging.getLogger(__name__)

PCM_SCALE = 32767.0


class FormatError(ValueError):
    pass


class MalformedWav(FormatError):
    pass


class BadMagic(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class DimMismatch(FormatError):
    pass


class MissingEmbedding(KeyError):
    pass


# --- WAV -----------------------------------------------------------------

def write_wav(path, samples, sample_rate: int = SAMPLE_RATE, fit: bool = True) -> float:
    """Write 16-bit mono PCM.

    With ``fit`` a signal whose peak exceeds full scale is scaled down to
    fit instead of being clipped; the applied gain is returned. SI-SDR is
    scale invariant, so rescoring is unaffected.
    """
    x = np.asarray(getattr(samples, "samples", samples), dtype=np.float64).ravel()
    gain = 1.0
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if fit and peak > 1.0:
        gain = 0.99 / peak
    pcm = np.clip(np.round(x * gain * PCM_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(pcm.tobytes())
    return gain


def read_wav(path, expect_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Read 16-bit mono PCM at ``expect_rate``; anything else is a hard error."""
    try:
        with wave.open(str(path), "rb") as f:
            channels, width, rate = f.getnchannels(), f.getsampwidth(), f.getframerate()
            frames = f.readframes(f.getnframes())
    except (wave.Error, EOFError) as exc:
        raise MalformedWav(f"{path}: {exc}") from exc
    if channels != 1 or width != 2 or rate != expect_rate:
        raise MalformedWav(f"{path}: need mono 16-bit {expect_rate} Hz, got "
                           f"{channels} ch / {8 * width}-bit / {rate} Hz")
    return np.frombuffer(frames, dtype="<i2").astype(np.float64) / PCM_SCALE


# --- embedding table -----------------------------------------------------

MAGIC = b"EVOEMB1\n"
_HEAD = struct.Struct("<II")


@dataclass
class EmbeddingTable:
    dim: int
    records: dict = field(default_factory=dict)  # segment id -> raw float32 vector

    def __len__(self):
        return len(self.records)

    def vector(self, segment_id: str, attribute=Attribute.SPEAKER) -> EmbeddingVec:
        try:
            return normalize(self.records[segment_id], attribute)
        except KeyError:
            raise MissingEmbedding(segment_id) from None


def write_embedding_table(path, table: EmbeddingTable) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEAD.pack(table.dim, len(table.records)))
        for seg_id, vec in table.records.items():
            raw = seg_id.encode("ascii")
            vec = np.asarray(vec, dtype="<f4")
            if vec.size != table.dim:
                raise DimMismatch(f"{seg_id}: {vec.size} values, table dim {table.dim}")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(vec.tobytes())


def read_embedding_table(path, expect_dim: int | None = None) -> EmbeddingTable:
    """Parse the binary table. Vectors are stored raw and normalized on lookup."""
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not an embedding table")
    pos = len(MAGIC)
    if len(data) < pos + _HEAD.size:
        raise TruncatedFile(f"{path}: header cut short")
    dim, count = _HEAD.unpack_from(data, pos)
    pos += _HEAD.size
    if dim < 2 or (expect_dim is not None and dim != expect_dim):
        raise DimMismatch(f"{path}: table dim {dim}" + (f", expected {expect_dim}" if expect_dim else ""))
    records = {}
    for i in range(count):
        if len(data) < pos + 2:
            raise TruncatedFile(f"{path}: record {i} of {count} missing")
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        end = pos + n + 4 * dim
        if len(data) < end:
            raise TruncatedFile(f"{path}: record {i} of {count} cut short")
        seg_id = data[pos:pos + n].decode("ascii")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos + n).astype(np.float64)
        records[seg_id] = vec
        pos = end
    if count == 0:
        log.warning("%s: embedding table is empty", path)
    return EmbeddingTable(dim, records)


@dataclass(frozen=True)
class TableEmbedder:
    """Embedder backed by precomputed vectors, keyed by segment id.

    Ids missing from the table go to ``fallback`` when one is given.
    """

    table: EmbeddingTable
    attribute: Attribute = Attribute.SPEAKER
    fallback: object = None

    def embed(self, segment: Segment) -> EmbeddingVec:
        if segment.id in self.table.records:
            return self.table.vector(segment.id, self.attribute)
        if self.fallback is not None:
            return self.fallback.embed(segment)
        raise MissingEmbedding(segment.id)


# --- bank dump -----------------------------------------------------------

def _hex(vec: EmbeddingVec) -> str:
    return np.asarray(vec.values, dtype="<f8").tobytes().hex()


def _unhex(text: str, attribute) -> EmbeddingVec:
    return EmbeddingVec(np.frombuffer(bytes.fromhex(text), dtype="<f8").copy(), attribute)


def dump_bank(bank: MemoryBank, directory) -> Path:
    """Write a bank as ``manifest.txt`` plus one raw little-endian float64 file per entry.

    Manifest columns (tab separated): index, segment id, admission step,
    anchor flag, waveform file, speaker embedding hex, emotion embedding hex.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = [f"# capacity={bank.capacity} alpha={bank.alpha!r} entries={len(bank)}"]
    for i, e in enumerate(bank.entries):
        wav_name = f"entry_{i:03d}.f64"
        np.asarray(e.waveform, dtype="<f8").tofile(d / wav_name)
        lines.append("\t".join([str(i), e.segment_id, str(e.admitted_at_step), str(int(e.is_anchor)),
                                wav_name, _hex(e.spk_emb), _hex(e.emo_emb)]))
    path = d / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


def load_bank(directory) -> MemoryBank:
    d = Path(directory)
    text = (d / "manifest.txt").read_text().splitlines()
    meta = dict(kv.split("=", 1) for kv in text[0].lstrip("# ").split())
    entries = []
    for line in text[1:]:
        if not line.strip() or line.startswith("#"):
            continue
        _, seg_id, step, anchor, wav_name, spk, emo = line.split("\t")
        samples = np.fromfile(d / wav_name, dtype="<f8")
        entries.append(MemoryEntry(Segment(seg_id, samples), _unhex(spk, Attribute.SPEAKER),
                                   _unhex(emo, Attribute.EMOTION), int(step), anchor == "1"))
    return MemoryBank(tuple(entries), int(meta["capacity"]), float(meta["alpha"]))


# --- session export ------------------------------------------------------

ROLES = ("enrollment", "mix", "ref", "interferer", "est")


def export_session(session, directory, estimates=None) -> Path:
    """Write a simulated session as WAV files plus a manifest.

    Mixtures, clean targets and interferers go to ``mix/``, ``ref/`` and
    ``interferer/`` under the same ``seg_NNN.wav`` names so they pair up for
    scoring; optional estimates go to ``est/``. Manifest lines are tab
    separated: id, role, speaker, emotion, path.
    """
    from .simulation import EMOTIONS

    d = Path(directory)
    for sub in ("enrollment", "mix", "ref", "interferer") + (("est",) if estimates is not None else ()):
        (d / sub).mkdir(parents=True, exist_ok=True)

    def line(seg, role, rel):
        t = seg.truth
        speaker = t.speaker_id if t is not None and t.speaker_id else "-"
        emotion = EMOTIONS[t.emotion] if t is not None and t.emotion is not None else "-"
        return "\t".join([seg.id, role, speaker, emotion, rel])

    rows = []
    write_wav(d / "enrollment" / "enroll.wav", session.enrollment)
    rows.append(line(session.enrollment, "enrollment", "enrollment/enroll.wav"))
    for n, (mix, ref, itf) in enumerate(zip(session.mixtures, session.targets, session.interferers)):
        name = f"seg_{n:03d}.wav"
        for seg, role, sub in ((mix, "mixture", "mix"), (ref, "target", "ref"), (itf, "interferer", "interferer")):
            write_wav(d / sub / name, seg)
            rows.append(line(seg, role, f"{sub}/{name}"))
        if estimates is not None:
            write_wav(d / "est" / name, estimates[n])
            rows.append(line(estimates[n], "estimate", f"est/{name}"))
    path = d / "manifest.txt"
    path.write_text("# id\trole\tspeaker\temotion\tpath\n" + "\n".join(rows) + "\n")
    return path


def read_manifest(path) -> list[dict]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        seg_id, role, speaker, emotion, rel = line.split("\t")
        out.append(dict(id=seg_id, role=role, speaker=speaker, emotion=emotion, path=rel))
    return out


def parse_config(path) -> dict:
    """``key = value`` lines with ``#`` comments; values stay strings."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
