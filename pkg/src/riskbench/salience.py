"""Per-token importance: keyphrase signal, attention, and their blend.

Word-token granularity throughout: every vector here has one entry per
word token of its sentence, all values in [0, 1].  The chain is

    raw keyphrase scores r_j  ->  inverted min-max yhat_j
    yhat_j over spans         ->  per-token Y_i (max over covering phrases)
    Y_i with attention A_i    ->  I_i = lambda*A_i + (1-lambda)*Y_i
    I_i                       ->  normalized = I_i / max_k I_k

An all-zero blended vector (no keyphrases, zero attention) normalizes to
all zeros instead of dividing by zero; such sentences produce no weak
labels downstream.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import yake
from .corpus import SentenceRecord

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.8
DEFAULT_EPSILON = 1e-9


class AlignmentError(ValueError):
    """Raised when a per-token vector does not line up with its sentence."""

    def __init__(self, sentence_id: str, message: str):
        super().__init__(f"{sentence_id}: {message}")
        self.sentence_id = sentence_id


@dataclass
class AttentionVector:
    sentence_id: str
    scores: list[float]

    def validate(self, n_word_tokens: int) -> None:
        if len(self.scores) != n_word_tokens:
            raise AlignmentError(
                self.sentence_id,
                f"attention length {len(self.scores)} != word tokens {n_word_tokens}",
            )
        for value in self.scores:
            if not 0.0 <= value <= 1.0:
                raise AlignmentError(
                    self.sentence_id, f"attention value {value} outside [0, 1]"
                )


@dataclass
class KeyphraseSet:
    """Scored keyphrase occurrences of one sentence; raw scores > 0."""

    sentence_id: str
    phrases: list[tuple[str, float, tuple[int, int]]]


@dataclass
class TokenSalience:
    """All importance stages for one sentence's word tokens."""

    sentence_id: str
    attention: list[float]
    yake: list[float]
    blended: list[float]
    normalized: list[float]
    enhanced: list[float]
    boosts: list[dict] = field(default_factory=list)

    @property
    def n_tokens(self) -> int:
        return len(self.normalized)


def yake_extract(
    sentence: SentenceRecord,
    max_ngram: int = yake.DEFAULT_MAX_NGRAM,
    top_n: int = yake.DEFAULT_TOP_N,
) -> KeyphraseSet:
    """Run keyphrase extraction on one sentence."""
    phrases = yake.extract(sentence, max_ngram=max_ngram, top_n=top_n)
    return KeyphraseSet(
        sentence_id=sentence.sentence_id,
        phrases=[(p.text, p.score, p.token_span) for p in phrases],
    )


def yake_normalize(
    phrases: KeyphraseSet, epsilon: float = DEFAULT_EPSILON
) -> list[tuple[tuple[int, int], float]]:
    """Invert and min-max normalize raw scores per sentence.

    yhat = 1 - (r - r_min) / (r_max - r_min + epsilon); the best (lowest
    r) phrase lands at ~1.  Empty input yields an empty list.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not phrases.phrases:
        return []
    scores = [r for _, r, _ in phrases.phrases]
    r_min = min(scores)
    r_max = max(scores)
    denom = r_max - r_min + epsilon
    return [(span, 1.0 - (r - r_min) / denom) for _, r, span in phrases.phrases]


def span_to_token(
    normalized_phrases: list[tuple[tuple[int, int], float]], n_tokens: int
) -> list[float]:
    """Per-token keyphrase value: max over covering phrases, else 0."""
    y = [0.0] * n_tokens
    for (first, last), value in normalized_phrases:
        if first < 0 or last >= n_tokens or first > last:
            raise ValueError(f"span ({first}, {last}) outside [0, {n_tokens})")
        for i in range(first, last + 1):
            if value > y[i]:
                y[i] = value
    return y


def blend(
    attention: AttentionVector,
    yake_tokens: list[float],
    lambda_: float = DEFAULT_LAMBDA,
) -> list[tuple[float, float]]:
    """Blend attention and keyphrase values, then max-normalize.

    Returns (blended, normalized) pairs.  lambda=1 ignores the keyphrase
    channel, lambda=0 ignores attention.  All-zero blends normalize to
    zeros.
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    if len(attention.scores) != len(yake_tokens):
        raise AlignmentError(
            attention.sentence_id,
            f"attention length {len(attention.scores)} != keyphrase length {len(yake_tokens)}",
        )
    blended = [
        lambda_ * a + (1.0 - lambda_) * y
        for a, y in zip(attention.scores, yake_tokens)
    ]
    peak = max(blended, default=0.0)
    if peak > 0.0:
        normalized = [v / peak for v in blended]
    else:
        normalized = [0.0] * len(blended)
    return list(zip(blended, normalized))


def attention_fallback(sentence: SentenceRecord, mode: str) -> AttentionVector:
    """Stand-in attention when no exported attention is available.

    "uniform" assigns 0.5 everywhere; "none" returns zeros and the
    pipeline forces lambda to 0 (pure keyphrase signal).
    """
    n = len(sentence.word_tokens())
    if mode == "uniform":
        return AttentionVector(sentence.sentence_id, [0.5] * n)
    if mode == "none":
        return AttentionVector(sentence.sentence_id, [0.0] * n)
    raise ValueError(f"unknown attention fallback mode: {mode!r}")


def compute_salience(
    sentence: SentenceRecord,
    attention: AttentionVector,
    lambda_: float = DEFAULT_LAMBDA,
    epsilon: float = DEFAULT_EPSILON,
    max_ngram: int = yake.DEFAULT_MAX_NGRAM,
    top_n: int = yake.DEFAULT_TOP_N,
) -> TokenSalience:
    """Full keyphrase + blend chain for one sentence (pure)."""
    n = len(sentence.word_tokens())
    attention.validate(n)
    phrases = yake_extract(sentence, max_ngram=max_ngram, top_n=top_n)
    y_tokens = span_to_token(yake_normalize(phrases, epsilon), n)
    pairs = blend(attention, y_tokens, lambda_)
    blended = [b for b, _ in pairs]
    normalized = [v for _, v in pairs]
    return TokenSalience(
        sentence_id=sentence.sentence_id,
        attention=list(attention.scores),
        yake=y_tokens,
        blended=blended,
        normalized=normalized,
        enhanced=list(normalized),
    )


# --------------------------------------------------------------------------
# Attention JSONL contract
# --------------------------------------------------------------------------


def read_attention_jsonl(
    path: str | Path, sentences: dict[str, SentenceRecord]
) -> tuple[dict[str, AttentionVector], list[str]]:
    """Load exported attention, validating alignment per record.

    Record schema: {"sentence_id", "tokens", "scores"}; tokens must byte
    match the sentence's word-token lower forms.  Misaligned or unknown
    records are rejected and logged, never silently accepted.  Returns
    (accepted, rejected_sentence_ids).
    """
    accepted: dict[str, AttentionVector] = {}
    rejected: list[str] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_meta" in obj:
                continue
            sid = obj.get("sentence_id", f"<line {line_no}>")
            sentence = sentences.get(sid)
            if sentence is None:
                logger.warning("attention record for unknown sentence %s", sid)
                rejected.append(sid)
                continue
            expected = sentence.word_lowers()
            if obj.get("tokens") != expected:
                logger.warning("attention tokens misaligned for %s", sid)
                rejected.append(sid)
                continue
            vector = AttentionVector(sid, [float(v) for v in obj["scores"]])
            try:
                vector.validate(len(expected))
            except AlignmentError as exc:
                logger.warning("attention rejected: %s", exc)
                rejected.append(sid)
                continue
            accepted[sid] = vector
    return accepted, rejected


def salience_to_dict(s: TokenSalience) -> dict:
    return {
        "sentence_id": s.sentence_id,
        "attention": s.attention,
        "yake": s.yake,
        "blended": s.blended,
        "normalized": s.normalized,
        "enhanced": s.enhanced,
        "boosts": s.boosts,
    }


def salience_from_dict(obj: dict) -> TokenSalience:
    return TokenSalience(
        sentence_id=obj["sentence_id"],
        attention=obj["attention"],
        yake=obj["yake"],
        blended=obj["blended"],
        normalized=obj["normalized"],
        enhanced=obj["enhanced"],
        boosts=obj.get("boosts", []),
    )
