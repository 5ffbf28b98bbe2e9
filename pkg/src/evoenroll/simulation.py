"""Synthetic desk-scale world for exercising the evolving loop without neural networks.

Speakers drift between five discrete emotional states. Each state moves the
speaker's latent identity embedding along a speaker-specific direction, so
a fixed enrollment recorded in one state matches the others less and less
well. Waveforms are parametric (harmonic stack + shaped noise) so that the
separation metrics run on real sample buffers. The extractor is behavioral:
it picks the target or the interferer with a probability driven by how well
the enrollment embedding separates them, then adds white distortion.

Randomness: every draw comes from a generator seeded by (seed, segment id,
purpose), so results are a pure function of the inputs and do not depend on
call order.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .embedding import Attribute, EmbeddingVec, normalize
from .segment import LengthMismatch, SAMPLE_RATE, Segment, Truth

EMOTIONS = ("Angry", "Happy", "Neutral", "Sad", "Surprise")
NEUTRAL = EMOTIONS.index("Neutral")

# how far each state pushes the speaker embedding away from the neutral voice
EMOTION_SHIFT = np.array([1.0, 0.9, 0.0, 0.5, 0.95])
EMOTION_F0 = np.array([1.25, 1.2, 1.0, 0.9, 1.35])

PEAK = 0.9
MAX_HARMONICS = 12


class MissingTruth(ValueError):
    pass


def _rng(*keys) -> np.random.Generator:
    words = []
    for key in keys:
        if isinstance(key, str):
            words.append(zlib.crc32(key.encode()))
        else:
            words.append(int(key) & 0xFFFFFFFF)
    return np.random.default_rng(words)


def emotion_index(emotion) -> int:
    if isinstance(emotion, str):
        try:
            return EMOTIONS.index(emotion.capitalize())
        except ValueError:
            raise ValueError(f"unknown emotion {emotion!r}; choose from {EMOTIONS}") from None
    idx = int(emotion)
    if not 0 <= idx < len(EMOTIONS):
        raise ValueError(f"emotion index {idx} out of range")
    return idx


def _isotropic(rng: np.random.Generator, dim: int, scale: float) -> np.ndarray:
    """Gaussian vector whose expected norm is about ``scale``, whatever the dimension."""
    return rng.standard_normal(dim) * (scale / np.sqrt(dim))


@dataclass(frozen=True)
class DriftParams:
    """Emotion dynamics of a session.

    ``stay`` is the self-transition probability; of the mass that leaves a
    state, ``neutral_pull`` goes to Neutral and the rest is spread evenly
    over the other states. ``sigma_id`` / ``sigma_emo`` are the per-segment
    latent jitters (expected noise norm).
    """

    stay: float = 0.8
    neutral_pull: float = 0.5
    sigma_id: float = 0.3
    sigma_emo: float = 0.25
    shift_scale: float = 1.5
    transition: Optional[tuple] = None  # explicit matrix overrides stay/pull

    def matrix(self) -> np.ndarray:
        if self.transition is not None:
            m = np.asarray(self.transition, dtype=np.float64)
        else:
            n = len(EMOTIONS)
            m = np.zeros((n, n))
            for i in range(n):
                leave = 1.0 - self.stay
                others = [j for j in range(n) if j != i]
                if i == NEUTRAL:
                    m[i, others] = leave / len(others)
                else:
                    m[i, NEUTRAL] += leave * self.neutral_pull
                    m[i, others] += leave * (1.0 - self.neutral_pull) / len(others)
                m[i, i] += self.stay
        if m.shape != (len(EMOTIONS), len(EMOTIONS)) or np.any(m < 0):
            raise ValueError("transition matrix must be a non-negative 5x5 matrix")
        if not np.allclose(m.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        return m


@dataclass(frozen=True, eq=False)
class SpeakerModel:
    speaker_id: str
    identity_vec: EmbeddingVec
    emotion_prototypes: tuple
    emotion_offsets: np.ndarray  # one unit direction per state, in speaker space
    f0_base: float
    formant_hz: float
    drift: DriftParams = field(default_factory=DriftParams)

    @property
    def dim(self) -> int:
        return self.identity_vec.dim

    @property
    def transition(self) -> np.ndarray:
        return self.drift.matrix()

    def state_center(self, emotion: int) -> np.ndarray:
        """Noise-free speaker latent for one emotional state."""
        shift = self.drift.shift_scale * EMOTION_SHIFT[emotion]
        return normalize(self.identity_vec.values + shift * self.emotion_offsets[emotion]).values


@lru_cache(maxsize=8)
def _base_prototypes(dim: int) -> np.ndarray:
    rng = _rng("emotion-prototypes", dim)
    protos = rng.standard_normal((len(EMOTIONS), dim))
    return protos / np.linalg.norm(protos, axis=1, keepdims=True)


def gen_speaker(seed: int, dim: int = 32, drift: DriftParams = DriftParams(),
                identity: Optional[np.ndarray] = None, speaker_id: Optional[str] = None) -> SpeakerModel:
    """Deterministic random speaker.

    The identity vector is isotropic unless ``identity`` is supplied. Emotion
    prototypes are shared across speakers up to a per-speaker perturbation.
    """
    rng = _rng("speaker", seed)
    mu = rng.standard_normal(dim) if identity is None else np.asarray(identity, dtype=np.float64)
    mu = normalize(mu, Attribute.SPEAKER)
    offsets = rng.standard_normal((len(EMOTIONS), dim))
    # keep the emotional movement orthogonal to the identity itself
    offsets -= np.outer(offsets @ mu.values, mu.values)
    offsets /= np.linalg.norm(offsets, axis=1, keepdims=True)
    base = _base_prototypes(dim)
    protos = tuple(normalize(base[e] + 0.35 * rng.standard_normal(dim) / np.sqrt(dim), Attribute.EMOTION)
                   for e in range(len(EMOTIONS)))
    return SpeakerModel(
        speaker_id=speaker_id or f"spk{seed}",
        identity_vec=mu,
        emotion_prototypes=protos,
        emotion_offsets=offsets,
        f0_base=float(rng.uniform(90.0, 240.0)),
        formant_hz=float(rng.uniform(500.0, 2500.0)),
        drift=drift,
    )


def gen_interferer(target: SpeakerModel, similarity: float, seed: int) -> SpeakerModel:
    """A speaker whose identity has cosine ``similarity`` with the target's."""
    rng = _rng("interferer", seed)
    mu = target.identity_vec.values
    u = rng.standard_normal(mu.size)
    u -= (u @ mu) * mu
    u /= np.linalg.norm(u)
    identity = similarity * mu + np.sqrt(max(0.0, 1.0 - similarity ** 2)) * u
    return gen_speaker(seed + 7_919, mu.size, target.drift, identity=identity,
                       speaker_id=f"int{seed}")


def _waveform(model: SpeakerModel, emotion: int, n: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / SAMPLE_RATE
    f0 = model.f0_base * EMOTION_F0[emotion]
    vib_rate, vib_depth = rng.uniform(4.0, 6.0), 0.01 + 0.02 * EMOTION_SHIFT[emotion]
    inst_f0 = f0 * (1.0 + vib_depth * np.sin(2 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(inst_f0) / SAMPLE_RATE
    n_harm = min(MAX_HARMONICS, max(1, int(0.45 * SAMPLE_RATE / (f0 * 1.05))))
    h = np.arange(1, n_harm + 1)
    gains = 0.3 / h + 1.0 / (1.0 + ((h * f0 - model.formant_hz) / 400.0) ** 2)
    coefs = gains * np.exp(1j * rng.uniform(0, 2 * np.pi, n_harm))
    # harmonic h is the h-th power of the fundamental's phasor
    z = np.exp(1j * phase)
    zh = z.copy()
    acc = coefs[0] * zh
    for c in coefs[1:]:
        zh *= z
        acc += c * zh
    sig = acc.imag
    # shaped breath noise: two-pole resonator at the speaker's formant
    r = 0.97
    theta = 2 * np.pi * model.formant_hz / SAMPLE_RATE
    noise = lfilter([1.0 - r], [1.0, -2 * r * np.cos(theta), r * r], rng.standard_normal(n))
    sig = sig / (np.std(sig) + 1e-12) + 0.3 * noise / (np.std(noise) + 1e-12)
    # syllable-rate envelope
    syl = rng.uniform(3.0, 5.0)
    env = 0.35 + 0.65 * np.sin(np.pi * syl * t + rng.uniform(0, np.pi)) ** 2
    return sig * env


def synth_segment(model: SpeakerModel, emotion_state, duration_s: float, seed: int,
                  segment_id: Optional[str] = None) -> Segment:
    """Render one segment of ``model`` speaking in ``emotion_state``."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    emotion = emotion_index(emotion_state)
    seg_id = segment_id or f"{model.speaker_id}/e{emotion}/s{seed}"
    rng = _rng("segment", seed, seg_id)
    n = int(round(duration_s * SAMPLE_RATE))
    wav = _waveform(model, emotion, n, rng)
    wav *= PEAK / np.max(np.abs(wav))

    spk = normalize(model.state_center(emotion) + _isotropic(rng, model.dim, model.drift.sigma_id)).values
    emo = normalize(model.emotion_prototypes[emotion].values
                    + _isotropic(rng, model.dim, model.drift.sigma_emo)).values
    truth = Truth(speaker_id=model.speaker_id, emotion=emotion, spk_vec=spk, emo_vec=emo)
    return Segment(seg_id, wav, SAMPLE_RATE, truth)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def make_mixture(target: Segment, interferer: Segment, sir_db: float,
                 mixture_id: Optional[str] = None) -> Segment:
    """Anechoic two-talker mixture ``s + g * v`` at the requested SIR."""
    if len(target) != len(interferer):
        raise LengthMismatch(f"{len(target)} vs {len(interferer)} samples")
    if not np.isfinite(sir_db):
        raise ValueError("SIR must be finite")
    s, v = target.samples, interferer.samples
    p_s, p_v = float(np.mean(s * s)), float(np.mean(v * v))
    g = 1.0 if p_v == 0.0 else float(np.sqrt(p_s / (p_v * 10.0 ** (sir_db / 10.0))))
    scaled = Segment(f"{interferer.id}*g", g * v, interferer.sample_rate, interferer.truth)
    x = s + scaled.samples

    truth = None
    if target.truth is not None and interferer.truth is not None:
        amps = np.array([_rms(s), _rms(scaled.samples)])
        w = amps / amps.sum()
        truth = Truth(
            speaker_id=None, emotion=None,
            spk_vec=w[0] * target.truth.spk_vec + w[1] * interferer.truth.spk_vec,
            emo_vec=w[0] * target.truth.emo_vec + w[1] * interferer.truth.emo_vec,
            sources=(target, scaled), weights=(float(w[0]), float(w[1])),
        )
    return Segment(mixture_id or f"{target.id}+{interferer.id}", x, target.sample_rate, truth)


def synthetic_embed(segment: Segment, attribute, noise_sigma: float, seed: int) -> EmbeddingVec:
    """Latent vector of ``segment`` plus isotropic noise of expected norm ``noise_sigma``."""
    attribute = Attribute(attribute)
    if segment.truth is None:
        raise MissingTruth(f"{segment.id} has no latent truth; use a table-backed embedder")
    latent = segment.truth.spk_vec if attribute is Attribute.SPEAKER else segment.truth.emo_vec
    if noise_sigma > 0:
        latent = latent + _isotropic(_rng("embed", seed, segment.id, attribute.value),
                                     latent.size, noise_sigma)
    return normalize(latent, attribute)


@dataclass(frozen=True)
class SyntheticEmbedder:
    attribute: Attribute
    noise_sigma: float = 0.1
    seed: int = 0

    def embed(self, segment: Segment) -> EmbeddingVec:
        return synthetic_embed(segment, self.attribute, self.noise_sigma, self.seed)


@dataclass(frozen=True)
class ConfusionOracleParams:
    """Behavior of the oracle extractor.

    ``attention`` sharpens how strongly the extractor focuses on the parts
    of a concatenated enrollment that resemble the mixture; 0 means plain
    length-weighted pooling.
    """

    slope: float = 8.0
    artifact_snr_db: float = 15.0
    confusion_artifact_snr_db: float = 10.0
    attention: float = 20.0

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("slope must be positive")
        if self.attention < 0:
            raise ValueError("attention must be non-negative")


def enrollment_view(mixture: Segment, enrollment: Segment, speaker_embedder,
                    attention: float) -> EmbeddingVec:
    """The speaker embedding an extractor derives from ``enrollment`` for this mixture.

    A plain segment is simply embedded. A concatenation is pooled over its
    parts with softmax weights ``attention * sim(part, mixture)`` on top of
    the length weights, so parts resembling the mixture dominate.
    """
    truth = enrollment.truth
    if truth is None or not truth.parts:
        return speaker_embedder.embed(enrollment)
    embs = np.stack([speaker_embedder.embed(p).values for p in truth.parts])
    query = speaker_embedder.embed(mixture).values
    logits = attention * (embs @ query) + np.log(np.asarray(truth.weights))
    a = np.exp(logits - logits.max())
    return normalize(a @ embs / a.sum(), Attribute.SPEAKER)


def identity_margin(mixture: Segment, enrollment_emb: EmbeddingVec) -> float:
    """How much closer the enrollment embedding sits to the target than to the interferer."""
    if mixture.truth is None or not mixture.truth.is_mixture:
        raise MissingTruth(f"{mixture.id} is not a simulated mixture")
    tgt, itf = mixture.truth.sources
    e = enrollment_emb.values
    return float(e @ normalize(tgt.truth.spk_vec).values - e @ normalize(itf.truth.spk_vec).values)


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


def oracle_extract(mixture: Segment, enrollment: Segment, params: ConfusionOracleParams,
                   speaker_embedder, seed: int) -> Segment:
    """Behavioral extractor: pick a source by identity margin, then distort it.

    The margin is measured on :func:`enrollment_view`. The target wins with probability ``logistic(slope * margin)``. The
    uniform draw and the distortion noise depend only on (seed, mixture id),
    so two runs that differ only in the enrollment share their randomness.
    """
    margin = identity_margin(mixture, enrollment_view(mixture, enrollment, speaker_embedder,
                                                      params.attention))
    tgt, itf = mixture.truth.sources
    rng = _rng("extract", seed, mixture.id)
    u = rng.random()
    noise = rng.standard_normal(len(mixture))
    hit = u < _logistic(params.slope * margin)
    chosen = tgt if hit else itf
    snr_db = params.artifact_snr_db if hit else params.confusion_artifact_snr_db
    power = float(np.mean(chosen.samples ** 2))
    noise *= np.sqrt(power / 10.0 ** (snr_db / 10.0))
    t = chosen.truth
    truth = Truth(speaker_id=t.speaker_id, emotion=t.emotion, spk_vec=t.spk_vec, emo_vec=t.emo_vec)
    return Segment(f"{mixture.id}:est", chosen.samples + noise, mixture.sample_rate, truth)


@dataclass(frozen=True)
class OracleExtractor:
    params: ConfusionOracleParams = ConfusionOracleParams()
    embed_noise: float = 0.1
    seed: int = 0

    @property
    def speaker_embedder(self) -> SyntheticEmbedder:
        # the backbone perceives the enrollment through its own noisy encoder
        return SyntheticEmbedder(Attribute.SPEAKER, self.embed_noise, self.seed + 1)

    def extract(self, mixture: Segment, enrollment: Segment) -> Segment:
        return oracle_extract(mixture, enrollment, self.params, self.speaker_embedder, self.seed)


@dataclass(frozen=True)
class SessionConfig:
    n_segments: int = 50
    duration_s: float = 2.0
    sir_db: float = 0.0
    dim: int = 32
    drift: DriftParams = DriftParams()
    init_enrollment_emotion: Optional[object] = None  # None draws one at random
    interferer_similarity: float = 0.47
    fresh_interferer: bool = False

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")


@dataclass(frozen=True)
class SimSession:
    seed: int
    enrollment: Segment
    mixtures: tuple
    targets: tuple
    interferers: tuple
    target_model: SpeakerModel
    emotions: tuple  # target emotion per segment

    def __len__(self):
        return len(self.mixtures)


def gen_session(config: SessionConfig, seed: int) -> SimSession:
    """One target speaker drifting through emotions, mixed with an interferer per segment.

    The target's emotion chain starts in the enrollment's state. The
    interferer runs its own chain under the same drift from a random state.
    Unless ``fresh_interferer`` is set, one interfering speaker talks
    throughout.
    """
    rng = _rng("session", seed)
    prefix = f"sess{seed}"
    target = gen_speaker(int(rng.integers(2**31)), config.dim, config.drift, speaker_id=f"{prefix}/tgt")
    init = (int(rng.integers(len(EMOTIONS))) if config.init_enrollment_emotion is None
            else emotion_index(config.init_enrollment_emotion))
    enrollment = synth_segment(target, init, config.duration_s, seed, f"{prefix}/enroll")

    trans = target.transition
    state = init
    itf_state = int(rng.integers(len(EMOTIONS)))
    itf_model = None
    mixtures, targets, interferers, emotions = [], [], [], []
    for n in range(config.n_segments):
        state = int(rng.choice(len(EMOTIONS), p=trans[state]))
        itf_state = int(rng.choice(len(EMOTIONS), p=trans[itf_state]))
        if itf_model is None or config.fresh_interferer:
            itf_model = gen_interferer(target, config.interferer_similarity, int(rng.integers(2**31)))
        s = synth_segment(target, state, config.duration_s, seed, f"{prefix}/tgt{n:03d}")
        v = synth_segment(itf_model, itf_state, config.duration_s, seed,
                          f"{prefix}/int{n:03d}")
        mixtures.append(make_mixture(s, v, config.sir_db, f"{prefix}/mix{n:03d}"))
        targets.append(s)
        interferers.append(v)
        emotions.append(state)
    return SimSession(seed, enrollment, tuple(mixtures), tuple(targets), tuple(interferers),
                      target, tuple(emotions))
