"""Reference LDA (collapsed Gibbs) and topic-mixture adapters.

The sampler exists so the evaluation harness runs end to end without any
external topic model; sentence-as-document is the default granularity.
External models enter through the adapters, which all produce simplex
vectors (within 1e-9):

    counts     theta_k = (n_k + eps) / sum(n_j + eps)
    logits     theta = softmax(mu), max-subtracted for stability
    embedding  theta_k ~ exp(cos(e, c_k) / tau); outliers snap one-hot
               to the nearest centroid
    one-hot    hard assignments

Determinism: documents are processed in doc_id order with a single
seeded RNG stream, so results do not depend on input ordering.  Fold-in
inference seeds per document, so a document's mixture is the same no
matter which batch it arrives in.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .corpus import SentenceRecord
from .yake import default_stopwords

DEFAULT_K = 21
DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_BURN_IN = 200
DEFAULT_TAU = 0.1
SIMPLEX_TOL = 1e-9


@dataclass
class TopicMixture:
    sentence_id: str
    theta: list[float]

    @property
    def K(self) -> int:
        return len(self.theta)

    def validate(self) -> None:
        if any(t < 0 for t in self.theta):
            raise ValueError(f"{self.sentence_id}: negative theta component")
        if abs(sum(self.theta) - 1.0) > SIMPLEX_TOL:
            raise ValueError(
                f"{self.sentence_id}: theta sums to {sum(self.theta)}, not 1"
            )


# --------------------------------------------------------------------------
# Vocabulary and bag-of-words
# --------------------------------------------------------------------------


def build_vocab(
    records: list[SentenceRecord],
    stopwords: frozenset[str] | None = None,
    min_count: int = 1,
) -> list[str]:
    """Sorted vocabulary of content words from the given records.

    Call this on the train split only; dev/test words outside the
    vocabulary are dropped at inference time.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    counts: dict[str, int] = {}
    for record in records:
        for lower in record.word_lowers():
            if lower in stopwords or not any(c.isalpha() for c in lower):
                continue
            counts[lower] = counts.get(lower, 0) + 1
    return sorted(w for w, c in counts.items() if c >= min_count)


def docs_to_bow(
    records: list[SentenceRecord], vocab: list[str]
) -> list[tuple[str, list[int]]]:
    """Map records to (doc_id, word-id list); out-of-vocab words drop."""
    index = {w: i for i, w in enumerate(vocab)}
    out = []
    for record in records:
        ids = sorted(
            index[w] for w in record.word_lowers() if w in index
        )
        out.append((record.sentence_id, ids))
    return out


# --------------------------------------------------------------------------
# Collapsed Gibbs sampler
# --------------------------------------------------------------------------


@dataclass
class LdaModel:
    K: int
    vocab: list[str]
    alpha: float
    beta: float
    seed: int
    iterations: int
    burn_in: int
    topic_word: list[list[int]]
    topic_totals: list[int]
    doc_ids: list[str]
    doc_theta_counts: list[list[float]]
    log_joint_trace: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "vocab": self.vocab,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "topic_word": self.topic_word,
            "topic_totals": self.topic_totals,
            "doc_ids": self.doc_ids,
            "doc_theta_counts": self.doc_theta_counts,
            "log_joint_trace": [list(t) for t in self.log_joint_trace],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LdaModel":
        return cls(
            K=obj["K"],
            vocab=obj["vocab"],
            alpha=obj["alpha"],
            beta=obj["beta"],
            seed=obj["seed"],
            iterations=obj["iterations"],
            burn_in=obj["burn_in"],
            topic_word=[list(r) for r in obj["topic_word"]],
            topic_totals=list(obj["topic_totals"]),
            doc_ids=list(obj["doc_ids"]),
            doc_theta_counts=[list(r) for r in obj["doc_theta_counts"]],
            log_joint_trace=[tuple(t) for t in obj.get("log_joint_trace", [])],
        )


def _doc_rng(seed: int, doc_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _log_joint(
    K: int,
    V: int,
    alpha: float,
    beta: float,
    topic_word: list[list[int]],
    topic_totals: list[int],
    doc_topic: list[list[int]],
    doc_lengths: list[int],
) -> float:
    """Collapsed log p(w, z); monitored for a non-decreasing trend."""
    lg = math.lgamma
    total = K * (lg(V * beta) - V * lg(beta))
    for k in range(K):
        row = topic_word[k]
        total += sum(lg(c + beta) for c in row if c) - lg(topic_totals[k] + V * beta)
        total += (sum(1 for c in row if c == 0)) * lg(beta)
    for d, length in enumerate(doc_lengths):
        total += lg(K * alpha) - K * lg(alpha) - lg(length + K * alpha)
        total += sum(lg(c + alpha) for c in doc_topic[d])
    return total


def lda_train(
    corpus_bow: list[tuple[str, list[int]]],
    K: int,
    vocab: list[str],
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iterations: int = DEFAULT_ITERATIONS,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
    log_joint_every: int = 25,
) -> LdaModel:
    """Train by collapsed Gibbs sampling; deterministic given the seed.

    Post-burn-in document-topic counts are averaged and later converted
    to mixtures through the counts adapter.
    """
    if not corpus_bow:
        raise ValueError("empty corpus")
    if K < 1:
        raise ValueError("K must be >= 1")
    if alpha is None:
        alpha = 50.0 / K
    V = len(vocab)
    docs = sorted(corpus_bow, key=lambda d: d[0])
    doc_ids = [d[0] for d in docs]
    tokens = [list(d[1]) for d in docs]
    D = len(docs)

    rng = random.Random(seed)
    topic_word = [[0] * V for _ in range(K)]
    topic_totals = [0] * K
    doc_topic = [[0] * K for _ in range(D)]
    z: list[list[int]] = []
    for d in range(D):
        zs = []
        for w in tokens[d]:
            k = int(rng.random() * K) % K
            zs.append(k)
            topic_word[k][w] += 1
            topic_totals[k] += 1
            doc_topic[d][k] += 1
        z.append(zs)

    theta_acc = [[0.0] * K for _ in range(D)]
    n_acc = 0
    trace: list[tuple[int, float]] = []
    v_beta = V * beta
    doc_lengths = [len(t) for t in tokens]

    for it in range(iterations):
        for d in range(D):
            dt = doc_topic[d]
            zs = z[d]
            for pos, w in enumerate(tokens[d]):
                k_old = zs[pos]
                dt[k_old] -= 1
                topic_word[k_old][w] -= 1
                topic_totals[k_old] -= 1
                cumulative = 0.0
                weights = []
                for k in range(K):
                    cumulative += (
                        (dt[k] + alpha)
                        * (topic_word[k][w] + beta)
                        / (topic_totals[k] + v_beta)
                    )
                    weights.append(cumulative)
                u = rng.random() * cumulative
                k_new = 0
                while k_new < K - 1 and weights[k_new] <= u:
                    k_new += 1
                zs[pos] = k_new
                dt[k_new] += 1
                topic_word[k_new][w] += 1
                topic_totals[k_new] += 1
        if it >= burn_in:
            for d in range(D):
                acc = theta_acc[d]
                dt = doc_topic[d]
                for k in range(K):
                    acc[k] += dt[k]
            n_acc += 1
        if log_joint_every and (it % log_joint_every == 0 or it == iterations - 1):
            trace.append(
                (it, _log_joint(K, V, alpha, beta, topic_word, topic_totals, doc_topic, doc_lengths))
            )

    if n_acc == 0:
        # No post-burn-in sweep (iterations <= burn_in): fall back to the
        # final state.
        theta_acc = [[float(c) for c in row] for row in doc_topic]
        n_acc = 1
    doc_theta_counts = [[c / n_acc for c in row] for row in theta_acc]

    return LdaModel(
        K=K,
        vocab=vocab,
        alpha=alpha,
        beta=beta,
        seed=seed,
        iterations=iterations,
        burn_in=burn_in,
        topic_word=topic_word,
        topic_totals=topic_totals,
        doc_ids=doc_ids,
        doc_theta_counts=doc_theta_counts,
        log_joint_trace=trace,
    )


def lda_infer(
    model: LdaModel,
    docs_bow: list[tuple[str, list[int]]],
    iterations: int = 100,
    burn_in: int = 50,
    seed: int = 0,
    epsilon: float = 1e-9,
) -> list[TopicMixture]:
    """Fold-in inference for unseen documents (topic-word counts frozen).

    Each document runs on its own derived RNG, so its mixture is
    independent of which other documents are in the batch.
    """
    K = model.K
    V = len(model.vocab)
    v_beta = V * model.beta
    alpha = model.alpha
    out: list[TopicMixture] = []
    for doc_id, words in sorted(docs_bow, key=lambda d: d[0]):
        rng = _doc_rng(seed, doc_id)
        dt = [0] * K
        zs = []
        for w in words:
            k = int(rng.random() * K) % K
            zs.append(k)
            dt[k] += 1
        acc = [0.0] * K
        n_acc = 0
        for it in range(iterations):
            for pos, w in enumerate(words):
                k_old = zs[pos]
                dt[k_old] -= 1
                cumulative = 0.0
                weights = []
                for k in range(K):
                    cumulative += (
                        (dt[k] + alpha)
                        * (model.topic_word[k][w] + model.beta)
                        / (model.topic_totals[k] + v_beta)
                    )
                    weights.append(cumulative)
                u = rng.random() * cumulative
                k_new = 0
                while k_new < K - 1 and weights[k_new] <= u:
                    k_new += 1
                zs[pos] = k_new
                dt[k_new] += 1
            if it >= burn_in:
                for k in range(K):
                    acc[k] += dt[k]
                n_acc += 1
        if n_acc == 0:
            acc = [float(c) for c in dt]
        out.append(theta_from_counts(acc, epsilon, sentence_id=doc_id))
    return out


def train_thetas(model: LdaModel, epsilon: float = 1e-9) -> list[TopicMixture]:
    """Mixtures for the training documents from averaged counts."""
    return [
        theta_from_counts(counts, epsilon, sentence_id=doc_id)
        for doc_id, counts in zip(model.doc_ids, model.doc_theta_counts)
    ]


# --------------------------------------------------------------------------
# Adapters
# --------------------------------------------------------------------------


def theta_from_counts(
    n: list[float], epsilon: float = 1e-9, sentence_id: str = ""
) -> TopicMixture:
    """theta_k = (n_k + eps) / sum_j (n_j + eps)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if any(v < 0 for v in n):
        raise ValueError("counts must be non-negative")
    shifted = [v + epsilon for v in n]
    total = sum(shifted)
    if total <= 0:
        raise ValueError("counts sum to zero and epsilon is zero")
    mixture = TopicMixture(sentence_id, [v / total for v in shifted])
    mixture.validate()
    return mixture


def theta_from_logits(mu: list[float], sentence_id: str = "") -> TopicMixture:
    """Numerically stable softmax over variational mean logits."""
    arr = np.asarray(mu, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("logits must be finite")
    shifted = np.exp(arr - arr.max())
    theta = shifted / shifted.sum()
    mixture = TopicMixture(sentence_id, theta.tolist())
    mixture.validate()
    return mixture


def theta_from_embedding(
    e: list[float],
    centroids: list[list[float]],
    tau: float = DEFAULT_TAU,
    outlier: bool = False,
    sentence_id: str = "",
) -> TopicMixture:
    """Cosine-to-centroid softmax at temperature tau.

    Outlier-marked inputs are assigned one-hot to the nearest centroid
    (ties break at the lowest index) before any softening.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    vec = np.asarray(e, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("zero-norm embedding")
    cents = np.asarray(centroids, dtype=np.float64)
    cent_norms = np.linalg.norm(cents, axis=1)
    if np.any(cent_norms == 0):
        raise ValueError("zero-norm centroid")
    cosines = (cents @ vec) / (cent_norms * norm)
    if outlier:
        return theta_one_hot(int(np.argmax(cosines)), len(centroids), sentence_id)
    shifted = np.exp((cosines - cosines.max()) / tau)
    theta = shifted / shifted.sum()
    mixture = TopicMixture(sentence_id, theta.tolist())
    mixture.validate()
    return mixture


def theta_one_hot(topic_idx: int, K: int, sentence_id: str = "") -> TopicMixture:
    """Hard assignment: all mass on one topic."""
    if not 0 <= topic_idx < K:
        raise ValueError(f"topic index {topic_idx} out of range for K={K}")
    theta = [0.0] * K
    theta[topic_idx] = 1.0
    return TopicMixture(sentence_id, theta)
