"""Reference LDA training, fold-in inference, and the mixture adapters.

Run: python demos/06_topic_mixtures.py
"""

import math
import random

from riskbench.evaluation import effective_topics, neff_summary
from riskbench.topics import (
    lda_infer,
    lda_train,
    theta_from_counts,
    theta_from_embedding,
    theta_from_logits,
    theta_one_hot,
    train_thetas,
)

# A tiny synthetic corpus: two disjoint vocabularies, one per topic.
rng = random.Random(0)
vocab = sorted([f"credit{i}" for i in range(12)] + [f"cyber{i}" for i in range(12)])
index = {w: i for i, w in enumerate(vocab)}
bow = []
for d in range(80):
    pool = [w for w in vocab if w.startswith("credit" if d % 2 == 0 else "cyber")]
    words = rng.choices(pool, k=10)
    bow.append((f"doc{d:03d}", sorted(index[w] for w in words)))

model = lda_train(bow, K=2, vocab=vocab, alpha=0.5, iterations=150, burn_in=50, seed=0)
print("log joint trace (iteration, value):", model.log_joint_trace[::2][:4], "...")

mixtures = train_thetas(model)
print("\ntraining mixtures (first 4):")
for m in mixtures[:4]:
    print(f"  {m.sentence_id}: theta={[round(t, 3) for t in m.theta]} "
          f"N_eff={effective_topics(m):.3f}")

# Held-out documents fold in against the frozen topic-word counts.
held_out = [("new000", sorted(index[f"cyber{i}"] for i in range(6)))]
inferred = lda_infer(model, held_out, iterations=60, burn_in=20, seed=1)[0]
print(f"\nfold-in mixture for a cyber-only document: "
      f"{[round(t, 3) for t in inferred.theta]}")

mean, std = neff_summary(mixtures)
print(f"\neffective topics over training docs: {mean:.3f} +/- {std:.3f} (K=2)")

# Adapters convert any external model's outputs into mixtures.
print("\nadapters:")
print("  counts (3,1)       ->", [round(t, 3) for t in theta_from_counts([3, 1]).theta])
print("  logits (ln2, 0)    ->", [round(t, 3) for t in theta_from_logits([math.log(2), 0.0]).theta])
print("  embedding cos=1,0  ->",
      [round(t, 3) for t in theta_from_embedding([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], tau=1.0).theta])
print("  one-hot (2 of 5)   ->", theta_one_hot(2, 5).theta)
