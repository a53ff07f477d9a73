"""The frozen evaluation protocol on a small synthetic setup.

Run: python demos/07_evaluation_harness.py
"""

import numpy as np

from riskbench.evaluation import (
    IdfTable,
    accuracy,
    assign_topics,
    class_prf,
    macro_f1,
    neff_summary,
    probe_predict,
    probe_train,
    topic_bertscore,
)
from riskbench.topics import TopicMixture

rng = np.random.default_rng(7)

# Synthetic sentence-topic mixtures: class c concentrates on topic c.
K, n_train, n_test = 5, 400, 100


def sample(n, tag):
    mixtures, labels = [], np.zeros((n, 5), dtype=bool)
    for i in range(n):
        c = i % 5
        alpha = np.full(K, 0.3)
        alpha[c] = 8.0
        theta = rng.dirichlet(alpha)
        mixtures.append(TopicMixture(f"{tag}{i:04d}", theta.tolist()))
        labels[i, c] = True
    return mixtures, labels


train_m, train_y = sample(n_train, "tr")
test_m, test_y = sample(n_test, "te")

model = probe_train(train_m, train_y, l2=1.0, seed=0)
pred, probs = probe_predict(model, test_m)

print(f"Accuracy (subset):  {accuracy(pred, test_y):.3f}")
print(f"Macro-F1:           {macro_f1(pred, test_y):.3f}")
for c, prf in enumerate(class_prf(pred, test_y)):
    print(f"  class {c}: P={prf['precision']:.2f} R={prf['recall']:.2f} F1={prf['f1']:.2f}")

mean, std = neff_summary(test_m)
print(f"Effective topics:   {mean:.2f} +/- {std:.2f} (K={K})")

# Topic semantic tightness from token embeddings (here: synthetic vectors
# where same-topic sentences share a direction).
token_embeddings = {}
for m in test_m:
    c = int(np.argmax(m.theta))
    base = np.zeros(8)
    base[c] = 1.0
    vectors = base + rng.normal(scale=0.05, size=(3, 8))
    token_embeddings[m.sentence_id] = (["tok0", "tok1", "tok2"], vectors)

per_topic, mean_score = topic_bertscore(
    assign_topics(test_m), token_embeddings, IdfTable({}, default=1.0),
    baseline=0.0, representatives=3, members=10, seed=0,
)
rounded = {k: round(v, 3) for k, v in per_topic.items()}
print(f"Topic semantic score: mean={mean_score:.3f}, per-topic={rounded}")
