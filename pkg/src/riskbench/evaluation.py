"""Frozen evaluation protocol: probe, label metrics, mixture diagnostics.

Predictive utility runs a one-vs-rest logistic probe on sentence-topic
mixtures with the five macro classes as targets.  Training is full-batch
gradient descent with Armijo backtracking; loss never increases across
accepted steps.  Accuracy is subset (exact-match) accuracy over the
5-bit label vector; Macro-F1 is the unweighted mean of the per-class
binary F1 scores with F1 := 0 whenever precision + recall is zero.

Mixture diagnostics: the effective number of topics is exp of the
Shannon entropy of theta (natural logs, 0 log 0 := 0), always inside
[1, K].  Topic semantic tightness compares each topic's representative
sentences against its top member sentences with IDF-weighted greedy
cosine matching over token embeddings, rescaled by a baseline constant.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .corpus import SentenceRecord
from .topics import TopicMixture

logger = logging.getLogger(__name__)

DEFAULT_L2 = 1.0
DEFAULT_MAX_EPOCHS = 500
DEFAULT_GRAD_TOL = 1e-6
DEFAULT_REPRESENTATIVES = 5
DEFAULT_MEMBERS = 20

N_CLASSES = 5


# --------------------------------------------------------------------------
# One-vs-rest logistic probe
# --------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def probe_loss_and_grad(
    w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean logistic loss + L2 penalty (bias excluded) and its gradient.

    X carries the bias column last; exposed so an independent
    finite-difference oracle can check the gradient.
    """
    n = X.shape[0]
    z = X @ w
    s = 2.0 * y - 1.0
    loss = float(np.logaddexp(0.0, -s * z).mean())
    w_pen = w.copy()
    w_pen[-1] = 0.0
    loss += 0.5 * l2 * float(w_pen @ w_pen) / n
    grad = X.T @ (_sigmoid(z) - y) / n + l2 * w_pen / n
    return loss, grad


@dataclass
class ProbeModel:
    weights: np.ndarray  # (n_classes, n_features + 1), bias last
    l2: float
    seed: int
    constant_negative: list[bool]
    convergence: list[dict] = field(default_factory=list)


def _features(mixtures: list[TopicMixture] | np.ndarray) -> np.ndarray:
    if isinstance(mixtures, np.ndarray):
        X = np.asarray(mixtures, dtype=np.float64)
    else:
        rows = [m.theta for m in mixtures]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValueError(f"mixtures disagree in dimensionality: {sorted(widths)}")
        X = np.asarray(rows, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def probe_train(
    mixtures: list[TopicMixture] | np.ndarray,
    labels: np.ndarray,
    l2: float = DEFAULT_L2,
    seed: int = 0,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    grad_tol: float = DEFAULT_GRAD_TOL,
) -> ProbeModel:
    """Train one binary L2 logistic regression per class.

    Weights start at zero, so the seed only matters if stochastic
    variants are added later; it is recorded for provenance.  A class
    with no positive training examples becomes a constant-negative
    predictor (logged).
    """
    X = _features(mixtures)
    Y = np.asarray(labels, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != N_CLASSES:
        raise ValueError(f"labels must be (n, {N_CLASSES})")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("mixtures and labels disagree in length")

    n_features = X.shape[1]
    weights = np.zeros((N_CLASSES, n_features))
    constant_negative = [False] * N_CLASSES
    convergence = []
    for c in range(N_CLASSES):
        y = Y[:, c]
        if not y.any():
            constant_negative[c] = True
            convergence.append({"class": c, "epochs": 0, "converged": True})
            logger.info("probe class %d has no positives; constant-negative", c)
            continue
        w = np.zeros(n_features)
        loss, grad = probe_loss_and_grad(w, X, y, l2)
        epochs = 0
        converged = False
        for epoch in range(max_epochs):
            epochs = epoch + 1
            gnorm = float(np.linalg.norm(grad))
            if gnorm < grad_tol:
                converged = True
                break
            step = 1.0
            g_sq = gnorm * gnorm
            accepted = False
            for _ in range(60):
                w_new = w - step * grad
                new_loss, new_grad = probe_loss_and_grad(w_new, X, y, l2)
                if new_loss <= loss - 1e-4 * step * g_sq:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                converged = True
                break
            if new_loss > loss:
                raise AssertionError("loss increased on an accepted step")
            w, loss, grad = w_new, new_loss, new_grad
        weights[c] = w
        convergence.append({"class": c, "epochs": epochs, "converged": converged})
    return ProbeModel(
        weights=weights,
        l2=l2,
        seed=seed,
        constant_negative=constant_negative,
        convergence=convergence,
    )


def probe_predict(
    model: ProbeModel, mixtures: list[TopicMixture] | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class probabilities and labels (probability >= 0.5)."""
    X = _features(mixtures)
    if X.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"feature dimension {X.shape[1] - 1} does not match the model"
        )
    probs = _sigmoid(X @ model.weights.T)
    for c, const in enumerate(model.constant_negative):
        if const:
            probs[:, c] = 0.0
    return probs >= 0.5, probs


# --------------------------------------------------------------------------
# Label metrics
# --------------------------------------------------------------------------


def accuracy(pred: np.ndarray, gold: np.ndarray) -> float:
    """Subset accuracy: the whole label vector must match."""
    pred = np.asarray(pred, dtype=bool)
    gold = np.asarray(gold, dtype=bool)
    if pred.shape != gold.shape:
        raise ValueError("prediction/gold shape mismatch")
    if pred.shape[0] == 0:
        raise ValueError("empty evaluation set")
    return float((pred == gold).all(axis=1).mean())


def class_prf(pred: np.ndarray, gold: np.ndarray) -> list[dict]:
    """Per-class precision/recall/F1 with the zero-division convention."""
    pred = np.asarray(pred, dtype=bool)
    gold = np.asarray(gold, dtype=bool)
    out = []
    for c in range(pred.shape[1]):
        tp = int((pred[:, c] & gold[:, c]).sum())
        fp = int((pred[:, c] & ~gold[:, c]).sum())
        fn = int((~pred[:, c] & gold[:, c]).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        out.append({"precision": precision, "recall": recall, "f1": f1})
    return out


def macro_f1(pred: np.ndarray, gold: np.ndarray) -> float:
    """Unweighted mean of per-class binary F1 scores."""
    per_class = class_prf(pred, gold)
    return sum(c["f1"] for c in per_class) / len(per_class)


# --------------------------------------------------------------------------
# Effective number of topics
# --------------------------------------------------------------------------


def effective_topics(theta: TopicMixture | list[float] | np.ndarray) -> float:
    """exp(H(theta)) in [1, K]; clamped only against float drift."""
    values = np.asarray(
        theta.theta if isinstance(theta, TopicMixture) else theta, dtype=np.float64
    )
    if values.ndim != 1 or values.size == 0:
        raise ValueError("theta must be a non-empty vector")
    if np.any(values < 0):
        raise ValueError("theta has negative components")
    total = values.sum()
    if total <= 0:
        raise ValueError("theta sums to zero")
    p = values / total
    nonzero = p[p > 0]
    entropy = float(-(nonzero * np.log(nonzero)).sum())
    n_eff = math.exp(entropy)
    k = float(values.size)
    if n_eff < 1.0:
        if n_eff < 1.0 - 1e-12:
            raise AssertionError(f"N_eff {n_eff} below 1")
        n_eff = 1.0
    if n_eff > k:
        if n_eff > k + 1e-12 * k:
            raise AssertionError(f"N_eff {n_eff} above K={k}")
        n_eff = k
    return n_eff


def neff_summary(mixtures: list[TopicMixture]) -> tuple[float, float]:
    """Mean and population std of the effective topic number."""
    if not mixtures:
        raise ValueError("empty mixture set")
    values = np.asarray([effective_topics(m) for m in mixtures])
    return float(values.mean()), float(values.std())


# --------------------------------------------------------------------------
# Topic semantic tightness (greedy-matching token score)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IdfTable:
    values: dict[str, float]
    default: float

    def __call__(self, token: str) -> float:
        return self.values.get(token, self.default)


def compute_idf_table(records: list[SentenceRecord]) -> IdfTable:
    """Plus-one smoothed IDF over the given (train-split) sentences."""
    n = len(records)
    df: dict[str, int] = {}
    for record in records:
        for token in set(record.word_lowers()):
            df[token] = df.get(token, 0) + 1
    values = {t: math.log((1.0 + n) / (1.0 + c)) for t, c in df.items()}
    return IdfTable(values=values, default=math.log(1.0 + n))


def greedy_match_f1(
    ref_tokens: list[str],
    ref_vectors: np.ndarray,
    cand_tokens: list[str],
    cand_vectors: np.ndarray,
    idf: IdfTable,
) -> float:
    """IDF-weighted greedy cosine matching F1 between two sentences."""
    if len(ref_tokens) == 0 or len(cand_tokens) == 0:
        return 0.0
    ref = np.asarray(ref_vectors, dtype=np.float64)
    cand = np.asarray(cand_vectors, dtype=np.float64)
    ref_norm = np.linalg.norm(ref, axis=1, keepdims=True)
    cand_norm = np.linalg.norm(cand, axis=1, keepdims=True)
    ref_norm[ref_norm == 0] = 1.0
    cand_norm[cand_norm == 0] = 1.0
    sim = (ref / ref_norm) @ (cand / cand_norm).T

    ref_idf = np.asarray([idf(t) for t in ref_tokens])
    cand_idf = np.asarray([idf(t) for t in cand_tokens])
    recall = float((sim.max(axis=1) * ref_idf).sum() / ref_idf.sum())
    precision = float((sim.max(axis=0) * cand_idf).sum() / cand_idf.sum())
    # Raw scores can go negative with adversarial embeddings; only the
    # exact-zero denominator is degenerate.  Baseline rescaling is the
    # caller's tool for recentring.
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def assign_topics(
    mixtures: list[TopicMixture],
) -> dict[int, list[tuple[str, float]]]:
    """Group sentences by argmax topic, keeping their theta_k weight."""
    topics: dict[int, list[tuple[str, float]]] = {}
    for m in mixtures:
        theta = m.theta
        k = max(range(len(theta)), key=lambda i: (theta[i], -i))
        topics.setdefault(k, []).append((m.sentence_id, theta[k]))
    return topics


def topic_bertscore(
    topics: dict[int, list[tuple[str, float]]],
    token_embeddings: dict[str, tuple[list[str], np.ndarray]],
    idf_table: IdfTable,
    baseline: float = 0.0,
    representatives: int = DEFAULT_REPRESENTATIVES,
    members: int = DEFAULT_MEMBERS,
    seed: int = 0,
) -> tuple[dict[int, float], float]:
    """Per-topic greedy-matching score and its mean.

    Per topic: sentences are ranked by their weight; the top R are
    representatives and the next candidates are members (a seeded sample
    of M when more are eligible).  The topic score is the mean pair F1
    over (representative, member) pairs, rescaled by the baseline as
    (score - baseline) / (1 - baseline).  Topics with fewer than two
    usable sentences are excluded and logged.
    """
    if not 0.0 <= baseline < 1.0:
        raise ValueError("baseline must be in [0, 1)")
    per_topic: dict[int, float] = {}
    for k in sorted(topics):
        ranked = sorted(topics[k], key=lambda e: (-e[1], e[0]))
        usable = [sid for sid, _ in ranked if sid in token_embeddings]
        if len(usable) < len(ranked):
            logger.info(
                "topic %d: %d sentences lack embeddings", k, len(ranked) - len(usable)
            )
        if len(usable) < 2:
            logger.info("topic %d has < 2 usable sentences; score undefined", k)
            continue
        # Small topics shrink the representative set so at least one
        # member sentence always remains to compare against.
        reps = usable[: min(representatives, len(usable) - 1)]
        pool = usable[len(reps) :]
        if len(pool) > members:
            digest = hashlib.sha256(f"{seed}:{k}".encode("utf-8")).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            member_ids = sorted(rng.sample(pool, members))
        else:
            member_ids = pool
        if not member_ids:
            logger.info("topic %d has no members beyond representatives", k)
            continue
        scores = []
        for rep in reps:
            rt, rv = token_embeddings[rep]
            for member in member_ids:
                mt, mv = token_embeddings[member]
                scores.append(greedy_match_f1(rt, rv, mt, mv, idf_table))
        raw = sum(scores) / len(scores)
        per_topic[k] = (raw - baseline) / (1.0 - baseline)
    mean = sum(per_topic.values()) / len(per_topic) if per_topic else float("nan")
    return per_topic, mean


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class: list[dict]
    n_eff_mean: float
    n_eff_std: float
    K: int
    split_id: str
    config_hash: str
    topic_bertscore_per_topic: dict[int, float] = field(default_factory=dict)
    topic_bertscore_mean: float | None = None

    def to_dict(self) -> dict:
        obj = {
            "Accuracy": self.accuracy,
            "Macro-F1": self.macro_f1,
            "Eff. # Topics": {"mean": self.n_eff_mean, "std": self.n_eff_std},
            "per_class": self.per_class,
            "K": self.K,
            "split_id": self.split_id,
            "config_hash": self.config_hash,
        }
        if self.topic_bertscore_mean is not None:
            obj["Topic BERTScore"] = {
                "mean": self.topic_bertscore_mean,
                "per_topic": {str(k): v for k, v in self.topic_bertscore_per_topic.items()},
            }
        return obj
