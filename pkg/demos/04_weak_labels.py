"""Weak label generation: top-m evidence to 21-dim vectors to macro labels.

Run: python demos/04_weak_labels.py
"""

from riskbench.corpus import SentenceRecord, normalize_text, tokenize
from riskbench.enhancer import BoostConfig, enhance
from riskbench.labeler import LabelerConfig, label_sentence, pattern_subcategories
from riskbench.salience import attention_fallback, compute_salience
from riskbench.taxonomy import CollocationMatcher, Taxonomy, compile_patterns, load_dictionary, match_unigrams

taxonomy = Taxonomy.load()
patterns = compile_patterns(taxonomy, load_dictionary())
matcher = CollocationMatcher(patterns)
psubs = pattern_subcategories(patterns)
cfg = LabelerConfig()  # m=10, backoff off

texts = [
    "Pending litigation and new lawsuits may result in punitive damages.",
    "Cash flow pressure and rising interest rate exposure weaken liquidity.",
    "A hurricane or earthquake could disrupt our supply chain for months.",
    "This sentence mentions no risk vocabulary at all.",
]

for text in texts:
    normalized = normalize_text(text)
    s = SentenceRecord("demo#000000", "demo", 2022, normalized, tokenize(normalized))
    sal = compute_salience(s, attention_fallback(s, "uniform"))
    uni = match_unigrams(s, taxonomy)
    col = matcher.match(s)
    sal = enhance(sal, uni, col, BoostConfig())
    ev = label_sentence(s, sal, uni, col, psubs, taxonomy, cfg)

    print(f"\n  {text}")
    nonzero = {
        name: round(score, 3)
        for name, score in zip(taxonomy.subcategory_names, ev.sub_scores)
        if score > 0
    }
    print(f"    subcategory evidence: {nonzero or '(none)'}")
    labels = [m for m, flag in zip(taxonomy.macro_classes, ev.macro_labels) if flag]
    print(f"    macro labels: {labels or '(unlabeled)'}")
    # evidence conservation: the vector total equals the contribution total
    assert abs(sum(ev.sub_scores) - sum(c["weight"] for c in ev.contributions)) < 1e-12
