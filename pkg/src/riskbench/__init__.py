"""Weak risk labeling of disclosure sentences + topic-model evaluation.

Submodules:

    corpus      normalization, segmentation, tokenization, dedup
    taxonomy    the 5/21/193 risk taxonomy and collocation matching
    yake        single-sentence statistical keyphrase extraction
    salience    attention x keyphrase importance blending
    enhancer    unigram/collocation boosts with cap
    labeler     top-m evidence accumulation and macro roll-up
    splits      chronological splits and leakage checks
    topics      reference LDA Gibbs sampler and mixture adapters
    evaluation  probe, Accuracy/Macro-F1, N_eff, topic semantic score
    pipeline    file-based stage orchestration
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    corpus,
    enhancer,
    evaluation,
    labeler,
    pipeline,
    salience,
    splits,
    taxonomy,
    topics,
    yake,
)
