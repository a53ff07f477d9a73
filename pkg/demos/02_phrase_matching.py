"""Taxonomy loading and boundary-aware collocation matching.

Run: python demos/02_phrase_matching.py
"""

from riskbench.corpus import SentenceRecord, normalize_text, tokenize
from riskbench.taxonomy import (
    CollocationMatcher,
    Taxonomy,
    compile_patterns,
    load_dictionary,
    match_unigrams,
)


def sentence(text: str) -> SentenceRecord:
    text = normalize_text(text)
    return SentenceRecord("demo#000000", "demo", 2022, text, tokenize(text))


taxonomy = Taxonomy.load()
print(f"taxonomy: {len(taxonomy.macro_classes)} macro classes, "
      f"{len(taxonomy.subcategories)} subcategories, "
      f"{taxonomy.n_distinct_terms} distinct terms")

dictionary = load_dictionary()
patterns = compile_patterns(taxonomy, dictionary)
print(f"compiled {len(patterns)} collocation patterns "
      f"from {len(taxonomy.multiword_terms)} taxonomy phrases "
      f"+ {len(dictionary)} dictionary entries")

# Hyphen/space tolerance and parenthetical acronyms in action.
by_id = {p.pattern_id: p for p in patterns}
print("\nvariants of 'A-Shares':", by_id["a-shares"].variants)
print("variants of the AAMS phrase:",
      [v for v in by_id["accredited-asset-management-specialist"].variants if len(v) < 20])

matcher = CollocationMatcher(patterns)
for text in (
    "Our A Shares declined after the announcement.",
    "Free cash flow and working capital both shrank.",
    "The cashflow metric is unaffected (no separator).",
):
    print(f"\n  {text}")
    for m in matcher.match(sentence(text)):
        print(f"    pattern={m.pattern_id!r} tokens={m.token_span} via {m.matched_variant!r}")

# Single-word taxonomy terms go through the unigram route.
s = sentence("Litigation and goodwill concerns dominate.")
print("\nunigram matches:")
for idx, subcats in match_unigrams(s, taxonomy):
    print(f"    token {idx} ({s.word_tokens()[idx].surface!r}) -> {subcats}")
