"""Character-level n-gram causal language model with add-alpha smoothing.

Vocabulary (22 symbols, fixed order): id 0 is BOS, ids 1..20 are the 20
amino acids in canonical alphabet order, id 21 is EOS. BOS is context-only;
the 21 emittable symbols are the residues plus EOS. Emission vectors index
those 21 as [A..Y, EOS], i.e. emission index j maps to vocab id j + 1 and
EOS_EMIT = 20.

Sampling is reproducible by contract: sequence number i of a run draws
from a PCG64 generator seeded with SeedSequence([seed mod 2**64, i]).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus
from .sequences import AA_INDEX, AMINO_ACIDS, ProteinSequence
from . import storage

BOS = 0
EOS = 21
VOCAB_SIZE = 22
N_EMIT = 21
EOS_EMIT = N_EMIT - 1  # EOS position within an emission vector

MODEL_MAGIC = b"PGLM"
MODEL_VERSION = 1

_UINT64_MASK = (1 << 64) - 1


def _residue_ids(seq: str) -> list[int]:
    return [AA_INDEX[ch] + 1 for ch in seq]


@dataclass(frozen=True, eq=False)
class NGramLM:
    """Immutable trained model: context tuple -> emission count vector.

    order 0 means no context (a unigram model over emitted symbols); an
    untrained model (empty counts) is the uniform model, every emittable
    symbol at 1/21.
    """

    order: int
    alpha: float
    counts: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def __eq__(self, other):
        if not isinstance(other, NGramLM):
            return NotImplemented
        if (self.order, self.alpha) != (other.order, other.alpha):
            return False
        if set(self.counts) != set(other.counts):
            return False
        return all((self.counts[k] == other.counts[k]).all() for k in self.counts)

    def _context_of(self, emitted_ids: list[int]) -> tuple[int, ...]:
        padded = [BOS] * self.order + emitted_ids
        return tuple(padded[len(padded) - self.order :]) if self.order else ()

    def emission_dist(self, context: tuple[int, ...]) -> np.ndarray:
        counts = self.counts.get(context)
        if counts is None:
            return np.full(N_EMIT, 1.0 / N_EMIT)
        total = counts.sum()
        return (counts + self.alpha) / (total + N_EMIT * self.alpha)


def train(corpus: list[ProteinSequence], order: int = 2, alpha: float = 0.1) -> NGramLM:
    """Accumulate n-gram counts over the corpus.

    Each sequence is padded with `order` BOS symbols and closed with one
    EOS, so the model learns both starts and terminations.
    """
    if not corpus:
        raise EmptyCorpus("cannot train on an empty corpus")
    model = NGramLM(order=order, alpha=alpha)
    counts = model.counts
    for seq in corpus:
        ids = _residue_ids(seq.residues)
        stream = [BOS] * order + ids + [EOS]
        for i in range(order, len(stream)):
            context = tuple(stream[i - order : i])
            vec = counts.get(context)
            if vec is None:
                vec = np.zeros(N_EMIT, dtype=np.int64)
                counts[context] = vec
            vec[stream[i] - 1] += 1
    return model


def next_token_dist(lm: NGramLM, context: str) -> np.ndarray:
    """Distribution over the 21 emittable symbols after `context` residues.

    Shorter-than-order contexts are implicitly BOS-padded; sums to 1.
    """
    return lm.emission_dist(lm._context_of(_residue_ids(context)))


def sequence_loss(lm: NGramLM, seq: ProteinSequence) -> float:
    """Negative log-likelihood (natural log) of seq plus its terminal EOS."""
    ids = _residue_ids(seq.residues)
    stream = [BOS] * lm.order + ids + [EOS]
    loss = 0.0
    for i in range(lm.order, len(stream)):
        context = tuple(stream[i - lm.order : i])
        dist = lm.emission_dist(context)
        loss -= math.log(dist[stream[i] - 1])
    return loss


def perplexity(lm: NGramLM, seq: ProteinSequence) -> float:
    """exp(loss / token count); token count = L residues + 1 for EOS."""
    return math.exp(sequence_loss(lm, seq) / (len(seq) + 1))


@dataclass(frozen=True)
class SamplingConfig:
    """Generation parameters. top_k is clamped to the 21 emittable symbols."""

    count: int
    max_length: int
    seed: int
    top_k: int = 950
    repetition_penalty: float = 1.2

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.repetition_penalty < 1:
            raise ValueError("repetition_penalty must be >= 1")
        object.__setattr__(self, "top_k", min(self.top_k, N_EMIT))


def step_distribution(
    lm: NGramLM, emitted: str, top_k: int = N_EMIT, repetition_penalty: float = 1.0
) -> np.ndarray:
    """One sampling step's distribution after penalty and top-k truncation.

    Already-emitted residues have their probability divided by the penalty
    (EOS is never emitted, so never penalized); the distribution is then
    renormalized, truncated to the top_k most probable symbols (ties broken
    by vocab index, stable), and renormalized again.
    """
    dist = next_token_dist(lm, emitted).copy()
    if repetition_penalty > 1.0 and emitted:
        for j in {AA_INDEX[ch] for ch in emitted}:
            dist[j] /= repetition_penalty
        dist /= dist.sum()
    k = min(top_k, N_EMIT)
    if k < N_EMIT:
        order = np.argsort(-dist, kind="stable")
        dist[order[k:]] = 0.0
        dist /= dist.sum()
    return dist


def draw_step(
    lm: NGramLM,
    emitted: str,
    rng: np.random.Generator,
    top_k: int = N_EMIT,
    repetition_penalty: float = 1.0,
) -> int:
    """Draw one emission index (0..19 residues, 20 EOS) from a step."""
    dist = step_distribution(lm, emitted, top_k, repetition_penalty)
    return int(rng.choice(N_EMIT, p=dist))


def sequence_rng(seed: int, index: int) -> np.random.Generator:
    """The documented per-sequence generator: PCG64(SeedSequence([seed, index]))."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed & _UINT64_MASK, index]))
    )


def sample(lm: NGramLM, config: SamplingConfig) -> list[ProteinSequence]:
    """Generate config.count sequences autoregressively.

    Each sequence stops at EOS or max_length residues. A draw that opens
    with EOS would produce an empty sequence; it is redrawn from the same
    per-index stream so exactly `count` non-empty sequences come back.
    """
    out: list[ProteinSequence] = []
    for index in range(config.count):
        rng = sequence_rng(config.seed, index)
        for _ in range(10000):
            chars: list[str] = []
            for _ in range(config.max_length):
                j = draw_step(
                    lm,
                    "".join(chars),
                    rng,
                    config.top_k,
                    config.repetition_penalty,
                )
                if j == EOS_EMIT:
                    break
                chars.append(AMINO_ACIDS[j])
            if chars:
                out.append(ProteinSequence("".join(chars)))
                break
        else:
            raise RuntimeError("sampler kept drawing immediate EOS")
    return out


def perplexities(lm: NGramLM, seqs: list[ProteinSequence]) -> list[float]:
    return [perplexity(lm, s) for s in seqs]


def rank_by_perplexity(
    lm: NGramLM, seqs: list[ProteinSequence], keep_fraction: float
) -> list[ProteinSequence]:
    """Keep the floor(keep_fraction * n) lowest-perplexity sequences
    (at least one), sorted ascending; ties keep input order."""
    if not seqs:
        raise ValueError("seqs must be non-empty")
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must be in (0, 1]")
    scored = [(perplexity(lm, s), i) for i, s in enumerate(seqs)]
    scored.sort()
    # the epsilon keeps floor() honest when the fraction is a rounded
    # rational like 1/3 (300 * (1/3) floats to 99.999...99)
    keep = max(1, math.floor(len(seqs) * keep_fraction + 1e-9))
    return [seqs[i] for _, i in scored[:keep]]


def save_model(lm: NGramLM, path) -> None:
    meta = {
        "order": lm.order,
        "alpha": lm.alpha,
        "vocab": "BOS," + ",".join(AMINO_ACIDS) + ",EOS",
    }
    contexts = sorted(lm.counts)
    blob = bytearray(struct.pack("<Q", len(contexts)))
    for ctx in contexts:
        blob += np.asarray(ctx, dtype="<i8").tobytes()
        blob += np.ascontiguousarray(lm.counts[ctx], dtype="<i8").tobytes()
    storage.write_file(path, MODEL_MAGIC, MODEL_VERSION, meta, [("counts", bytes(blob))])


def load_model(path) -> NGramLM:
    meta, sections = storage.read_file(path, MODEL_MAGIC, MODEL_VERSION)
    order = int(meta["order"])
    payload = dict(sections)["counts"]
    (n_ctx,) = struct.unpack_from("<Q", payload, 0)
    pos = 8
    counts: dict[tuple[int, ...], np.ndarray] = {}
    for _ in range(n_ctx):
        ctx = tuple(
            int(x) for x in np.frombuffer(payload, dtype="<i8", count=order, offset=pos)
        )
        pos += 8 * order
        vec = np.frombuffer(payload, dtype="<i8", count=N_EMIT, offset=pos)
        pos += 8 * N_EMIT
        counts[ctx] = vec.astype(np.int64)
    return NGramLM(order=order, alpha=float(meta["alpha"]), counts=counts)
