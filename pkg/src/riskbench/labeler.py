"""Weak label generation: evidence vectors over the 21 subcategories.

Evidence is restricted to the top-m tokens by enhanced importance.
Three sources feed the per-sentence subcategory vector:

    lexicon      exact unigram matches; weight = the token's enhanced value
    collocation  multiword matches owning a subcategory; weight = mean
                 enhanced value over the span tokens that made top-m
    backoff      optional embedding kNN for unmatched top tokens
                 (off by default); weight = cosine similarity * enhanced

Collocation patterns sourced only from the finance dictionary own no
subcategory and therefore contribute salience boosts but no evidence.
Terms owned by several subcategories contribute to each.  The 21
subcategory scores roll up deterministically into the five macro
classes; a macro label is on whenever its rolled-up score is positive.

A config flag switches weights to plain binary counts for ablations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import SentenceRecord
from .salience import TokenSalience
from .taxonomy import CollocationPattern, SpanMatch, Taxonomy

logger = logging.getLogger(__name__)

DEFAULT_TOP_M = 10
DEFAULT_BACKOFF_K = 5
DEFAULT_BACKOFF_THRESHOLD = 0.5


@dataclass(frozen=True)
class LabelerConfig:
    m: int = DEFAULT_TOP_M
    backoff_enabled: bool = False
    backoff_k: int = DEFAULT_BACKOFF_K
    backoff_threshold: float = DEFAULT_BACKOFF_THRESHOLD
    binary_weights: bool = False

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")


@dataclass
class EvidenceVector:
    """Subcategory evidence and its macro roll-up for one sentence.

    sub_scores and macro_scores follow the taxonomy's subcategory and
    macro-class ordering.
    """

    sentence_id: str
    sub_scores: list[float]
    contributions: list[dict] = field(default_factory=list)
    macro_scores: list[float] = field(default_factory=list)
    macro_labels: list[bool] = field(default_factory=list)


def select_top_m(salience: TokenSalience, m: int) -> list[int]:
    """Indices of the m highest enhanced values; ties break low-index."""
    order = sorted(
        range(salience.n_tokens), key=lambda i: (-salience.enhanced[i], i)
    )
    return sorted(order[:m])


def pattern_subcategories(
    patterns: list[CollocationPattern],
) -> dict[str, tuple[str, ...]]:
    return {p.pattern_id: p.subcategories for p in patterns}


def accumulate_evidence(
    sentence: SentenceRecord,
    salience: TokenSalience,
    top_tokens: list[int],
    unigram_matches: list[tuple[int, tuple[str, ...]]],
    colloc_matches: list[SpanMatch],
    pattern_subcats: dict[str, tuple[str, ...]],
    taxonomy: Taxonomy,
    cfg: LabelerConfig,
    backoff_contributions: list[dict] | None = None,
) -> EvidenceVector:
    """Accumulate lexicon/collocation/backoff evidence into a vector.

    Matches are computed on the full sentence; only those that touch a
    top-m token contribute.  Collocation evidence counts if any span
    token is in the top set.
    """
    if salience.n_tokens and max(salience.enhanced) == 0.0:
        logger.debug("low-signal sentence %s (all-zero salience)", sentence.sentence_id)
    top_set = set(top_tokens)
    sub_index = {name: i for i, name in enumerate(taxonomy.subcategory_names)}
    scores = [0.0] * len(sub_index)
    contributions: list[dict] = []

    def weight_of(value: float) -> float:
        return 1.0 if cfg.binary_weights else value

    for token_idx, subcats in sorted(unigram_matches):
        if token_idx not in top_set:
            continue
        w = weight_of(salience.enhanced[token_idx])
        for sub in subcats:
            scores[sub_index[sub]] += w
            contributions.append(
                {
                    "token_idx": token_idx,
                    "subcategory": sub,
                    "source": "lexicon",
                    "weight": w,
                }
            )

    for match in colloc_matches:
        subcats = pattern_subcats.get(match.pattern_id, ())
        if not subcats:
            continue
        first, last = match.token_span
        in_top = [i for i in range(first, last + 1) if i in top_set]
        if not in_top:
            continue
        mean_enh = sum(salience.enhanced[i] for i in in_top) / len(in_top)
        w = weight_of(mean_enh)
        for sub in subcats:
            scores[sub_index[sub]] += w
            contributions.append(
                {
                    "token_idx": in_top[0],
                    "subcategory": sub,
                    "source": "collocation",
                    "weight": w,
                }
            )

    for contrib in backoff_contributions or []:
        scores[sub_index[contrib["subcategory"]]] += contrib["weight"]
        contributions.append(contrib)

    macro_scores, macro_labels = rollup_macro(scores, taxonomy)
    return EvidenceVector(
        sentence_id=sentence.sentence_id,
        sub_scores=scores,
        contributions=contributions,
        macro_scores=macro_scores,
        macro_labels=macro_labels,
    )


def matched_token_indices(
    unigram_matches: list[tuple[int, tuple[str, ...]]],
    colloc_matches: list[SpanMatch],
) -> set[int]:
    matched = {idx for idx, _ in unigram_matches}
    for match in colloc_matches:
        matched.update(range(match.token_span[0], match.token_span[1] + 1))
    return matched


def semantic_backoff(
    sentence: SentenceRecord,
    salience: TokenSalience,
    unmatched_top_tokens: list[int],
    term_embeddings: dict[str, list[float]],
    taxonomy: Taxonomy,
    cfg: LabelerConfig,
) -> list[dict]:
    """kNN over subcategory terms in embedding space (optional).

    For each unmatched top token with an embedding, the k nearest terms
    with cosine similarity >= threshold each contribute
    similarity * enhanced to their subcategories.  Tokens without an
    embedding are skipped and logged.  Deterministic: neighbor ties
    break on term string.
    """
    if not cfg.backoff_enabled:
        return []
    word_lowers = sentence.word_lowers()
    term_vectors = {
        term: term_embeddings[term]
        for term in taxonomy.term_to_subcats
        if term in term_embeddings
    }
    out: list[dict] = []
    for token_idx in sorted(unmatched_top_tokens):
        token = word_lowers[token_idx]
        vec = term_embeddings.get(token)
        if vec is None:
            logger.info("backoff: no embedding for token %r, skipped", token)
            continue
        sims = []
        for term, tvec in term_vectors.items():
            sim = _cosine(vec, tvec)
            if sim >= cfg.backoff_threshold:
                sims.append((-sim, term))
        sims.sort()
        for neg_sim, term in sims[: cfg.backoff_k]:
            w = -neg_sim * salience.enhanced[token_idx]
            for sub in taxonomy.term_to_subcats[term]:
                out.append(
                    {
                        "token_idx": token_idx,
                        "subcategory": sub,
                        "source": "backoff",
                        "weight": w,
                    }
                )
    return out


def rollup_macro(
    sub_scores: list[float], taxonomy: Taxonomy
) -> tuple[list[float], list[bool]]:
    """Sum subcategory scores into their parent macro classes."""
    macro_index = {name: i for i, name in enumerate(taxonomy.macro_classes)}
    macro_scores = [0.0] * len(macro_index)
    for sub, score in zip(taxonomy.subcategories, sub_scores):
        macro_scores[macro_index[sub.macro]] += score
    return macro_scores, [s > 0.0 for s in macro_scores]


def label_sentence(
    sentence: SentenceRecord,
    salience: TokenSalience,
    unigram_matches: list[tuple[int, tuple[str, ...]]],
    colloc_matches: list[SpanMatch],
    pattern_subcats: dict[str, tuple[str, ...]],
    taxonomy: Taxonomy,
    cfg: LabelerConfig,
    term_embeddings: dict[str, list[float]] | None = None,
) -> EvidenceVector:
    """Full labeling chain for one sentence (pure)."""
    top_tokens = select_top_m(salience, cfg.m)
    backoff: list[dict] = []
    if cfg.backoff_enabled and term_embeddings:
        matched = matched_token_indices(unigram_matches, colloc_matches)
        unmatched = [i for i in top_tokens if i not in matched]
        backoff = semantic_backoff(
            sentence, salience, unmatched, term_embeddings, taxonomy, cfg
        )
    return accumulate_evidence(
        sentence,
        salience,
        top_tokens,
        unigram_matches,
        colloc_matches,
        pattern_subcats,
        taxonomy,
        cfg,
        backoff_contributions=backoff,
    )


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def load_term_embeddings(path: str | Path) -> dict[str, list[float]]:
    """Read a tab-separated term-embedding table (term\\tv1 v2 ...)."""
    table: dict[str, list[float]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, vec = line.partition("\t")
        table[term.strip().lower()] = [float(v) for v in vec.split()]
    return table


def evidence_to_dict(ev: EvidenceVector, compact: bool = False) -> dict:
    obj = {
        "sentence_id": ev.sentence_id,
        "sub_scores": ev.sub_scores,
        "macro_scores": ev.macro_scores,
        "macro_labels": ev.macro_labels,
    }
    if not compact:
        obj["contributions"] = ev.contributions
    return obj


def evidence_from_dict(obj: dict) -> EvidenceVector:
    return EvidenceVector(
        sentence_id=obj["sentence_id"],
        sub_scores=obj["sub_scores"],
        contributions=obj.get("contributions", []),
        macro_scores=obj["macro_scores"],
        macro_labels=obj["macro_labels"],
    )
