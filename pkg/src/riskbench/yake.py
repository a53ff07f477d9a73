"""Single-sentence statistical keyphrase extraction (YAKE-style).

Implements the published unsupervised keyword statistics over one
sentence at a time: casing, position, frequency normalization, left/right
dispersion of co-occurring context, and sentence spread.  Lower scores
mean more important candidates.  Raw scores are strictly positive.

Term-level score for a non-stopword term t:

    case(t) = max(tf_upper, tf_acronym) / (1 + ln tf)
    pos(t)  = ln(ln(3 + median sentence index of t))
    freq(t) = tf / (mean tf + population std tf)        over scored terms
    rel(t)  = 1 + (DL + DR) * tf / max tf
    spread  = sentence fraction containing t
    S(t)    = rel * pos / (case + freq/rel + spread/rel)

where DL (DR) is the ratio of distinct terms to total terms observed in
the left (right) co-occurrence window.  Candidate n-grams never start or
end with a stopword; interior stopwords are bridged with the adjacency
probability penalty instead of their own score:

    S(ngram) = prod / (tf(ngram) * (1 + sum))

with prod/sum accumulating S(t) for content terms and the (1 + (1 - p))
/ -(1 - p) bridge for interior stopwords, p being the product of the
left- and right-adjacency probabilities.

Near-duplicate candidates are pruned during top-n selection with a
Levenshtein similarity threshold.  Words shorter than three characters
count as stopwords; terms with no alphabetic character (numbers) are not
candidate material at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .corpus import SentenceRecord

DEFAULT_MAX_NGRAM = 3
DEFAULT_TOP_N = 20
DEFAULT_WINDOW = 1
DEFAULT_DEDUP_LIM = 0.9
MIN_WORD_LEN = 3


@dataclass(frozen=True)
class Keyphrase:
    """A scored candidate occurrence; span indexes word tokens, inclusive."""

    text: str
    score: float
    token_span: tuple[int, int]


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = (
        resources.files("riskbench")
        .joinpath("data/stopwords_en.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def _is_stop(lower: str, stopwords: frozenset[str]) -> bool:
    return lower in stopwords or len(lower) < MIN_WORD_LEN


def _is_excluded(lower: str) -> bool:
    return not any(ch.isalpha() for ch in lower)


def _chunks(sentence: SentenceRecord) -> list[list[int]]:
    """Runs of word tokens uninterrupted by punctuation.

    Returned indices count word tokens only, matching the indexing used
    by salience vectors.
    """
    chunks: list[list[int]] = []
    current: list[int] = []
    word_idx = -1
    for token in sentence.tokens:
        if token.is_word:
            word_idx += 1
            current.append(word_idx)
        else:
            if current:
                chunks.append(current)
                current = []
    if current:
        chunks.append(current)
    return chunks


class _TermStats:
    __slots__ = ("tf", "tf_upper", "tf_acronym", "left", "right", "score")

    def __init__(self) -> None:
        self.tf = 0
        self.tf_upper = 0
        self.tf_acronym = 0
        self.left: dict[str, int] = {}
        self.right: dict[str, int] = {}
        self.score = 0.0


def extract(
    sentence: SentenceRecord,
    max_ngram: int = DEFAULT_MAX_NGRAM,
    top_n: int = DEFAULT_TOP_N,
    window: int = DEFAULT_WINDOW,
    dedup_lim: float = DEFAULT_DEDUP_LIM,
    stopwords: frozenset[str] | None = None,
) -> list[Keyphrase]:
    """Extract the top-n keyphrase occurrences of one sentence.

    Deterministic: ties in score break by earliest occurrence, then text.
    Every distinct kept phrase is expanded to all of its occurrences so
    downstream span coverage sees each position the phrase touches.
    """
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    if stopwords is None:
        stopwords = default_stopwords()

    words = sentence.word_tokens()
    if not words:
        return []
    lowers = [t.lower for t in words]
    surfaces = [t.surface for t in words]
    chunks = _chunks(sentence)

    stats: dict[str, _TermStats] = {}
    bigram: dict[tuple[str, str], int] = {}
    for chunk in chunks:
        for pos_in_chunk, w_idx in enumerate(chunk):
            term = lowers[w_idx]
            st = stats.setdefault(term, _TermStats())
            st.tf += 1
            surface = surfaces[w_idx]
            if surface.isupper() and len(surface) >= 2 and surface.isalpha():
                st.tf_acronym += 1
            elif surface[0].isupper() and w_idx != 0:
                st.tf_upper += 1
            for off in range(1, window + 1):
                if pos_in_chunk - off >= 0:
                    other = lowers[chunk[pos_in_chunk - off]]
                    st.left[other] = st.left.get(other, 0) + 1
                if pos_in_chunk + off < len(chunk):
                    other = lowers[chunk[pos_in_chunk + off]]
                    st.right[other] = st.right.get(other, 0) + 1
            if pos_in_chunk + 1 < len(chunk):
                pair = (term, lowers[chunk[pos_in_chunk + 1]])
                bigram[pair] = bigram.get(pair, 0) + 1

    scored_terms = [
        t for t in stats if not _is_stop(t, stopwords) and not _is_excluded(t)
    ]
    if not scored_terms:
        return []
    tfs = [stats[t].tf for t in scored_terms]
    mean_tf = sum(tfs) / len(tfs)
    std_tf = math.sqrt(sum((x - mean_tf) ** 2 for x in tfs) / len(tfs))
    max_tf = max(tfs)
    # Single sentence: every term's median sentence index is 0 and its
    # sentence spread is 1; both are constants here but kept explicit.
    t_pos = math.log(math.log(3.0))
    t_sent = 1.0

    for term in scored_terms:
        st = stats[term]
        t_case = max(st.tf_upper, st.tf_acronym) / (1.0 + math.log(st.tf))
        tf_norm = st.tf / (mean_tf + std_tf)
        total_left = sum(st.left.values())
        total_right = sum(st.right.values())
        dl = len(st.left) / total_left if total_left else 0.0
        dr = len(st.right) / total_right if total_right else 0.0
        t_rel = 1.0 + (dl + dr) * st.tf / max_tf
        st.score = t_rel * t_pos / (t_case + tf_norm / t_rel + t_sent / t_rel)

    # Candidate n-grams per punctuation-free chunk.
    candidates: dict[tuple[str, ...], dict] = {}
    for chunk in chunks:
        for n in range(1, max_ngram + 1):
            for i in range(0, len(chunk) - n + 1):
                idxs = chunk[i : i + n]
                terms = tuple(lowers[j] for j in idxs)
                if any(_is_excluded(t) for t in terms):
                    continue
                if _is_stop(terms[0], stopwords) or _is_stop(terms[-1], stopwords):
                    continue
                entry = candidates.setdefault(terms, {"tf": 0, "spans": []})
                entry["tf"] += 1
                entry["spans"].append((idxs[0], idxs[-1]))

    ranked: list[tuple[float, int, str, tuple[tuple[int, int], ...]]] = []
    for terms, entry in candidates.items():
        prod_h = 1.0
        sum_h = 0.0
        for j, term in enumerate(terms):
            if _is_stop(term, stopwords):
                left_t, right_t = terms[j - 1], terms[j + 1]
                prob_left = bigram.get((left_t, term), 0) / stats[left_t].tf
                prob_right = bigram.get((term, right_t), 0) / stats[right_t].tf
                prob = prob_left * prob_right
                prod_h *= 1.0 + (1.0 - prob)
                sum_h -= 1.0 - prob
            else:
                prod_h *= stats[term].score
                sum_h += stats[term].score
        denom = entry["tf"] * (1.0 + sum_h)
        score = prod_h / denom if denom > 0 else float("inf")
        text = " ".join(terms)
        ranked.append((score, entry["spans"][0][0], text, tuple(entry["spans"])))

    ranked.sort(key=lambda r: (r[0], r[1], r[2]))

    kept: list[tuple[str, float, tuple[tuple[int, int], ...]]] = []
    for score, _, text, spans in ranked:
        if len(kept) >= top_n:
            break
        if not any(_similar(text, k[0], dedup_lim) for k in kept):
            kept.append((text, score, spans))

    return [
        Keyphrase(text=text, score=score, token_span=span)
        for text, score, spans in kept
        for span in spans
    ]


def _lev_ratio(a: str, b: str) -> float:
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != b[j - 1]),
            )
        prev = cur
    return 1.0 - prev[lb] / max(la, lb)


def _bounded_distance(a: str, b: str, k: int) -> int:
    """Levenshtein distance when <= k; any value > k otherwise.

    The row minimum is monotone non-decreasing, so once it exceeds k the
    final distance must too and the scan aborts early.
    """
    la, lb = len(a), len(b)
    if abs(la - lb) > k:
        return k + 1
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        ca = a[i - 1]
        row_min = i
        for j in range(1, lb + 1):
            v = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != b[j - 1]),
            )
            cur[j] = v
            if v < row_min:
                row_min = v
        if row_min > k:
            return k + 1
        prev = cur
    return prev[lb]


def _similar(a: str, b: str, lim: float) -> bool:
    """Same predicate as `_lev_ratio(a, b) >= lim`, but cheap on misses."""
    if a == b:
        return True
    m = max(len(a), len(b))
    cutoff = int(m * (1.0 - lim)) + 2
    distance = _bounded_distance(a, b, cutoff)
    if distance > cutoff:
        return False
    return 1.0 - distance / m >= lim
