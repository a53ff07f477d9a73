"""Token importance: keyphrases, attention blend, risk-aware boosts.

Run: python demos/03_token_salience.py
"""

from riskbench.corpus import SentenceRecord, normalize_text, tokenize
from riskbench.enhancer import BoostConfig, enhance
from riskbench.salience import attention_fallback, compute_salience, yake_extract
from riskbench.taxonomy import CollocationMatcher, Taxonomy, compile_patterns, load_dictionary, match_unigrams

text = normalize_text(
    "Severe litigation risk and weak cash flow could disrupt our supply chain."
)
s = SentenceRecord("demo#000000", "demo", 2022, text, tokenize(text))

print("--- keyphrases (lower raw score = more important) ---")
for phrase in yake_extract(s).phrases[:6]:
    print(f"  r={phrase[1]:.4f}  span={phrase[2]}  {phrase[0]}")

# Without an attention export we fall back to a uniform vector; the blend
# weight lambda=0.8 then mostly rescales the keyphrase signal.
salience = compute_salience(s, attention_fallback(s, "uniform"), lambda_=0.8)

taxonomy = Taxonomy.load()
patterns = compile_patterns(taxonomy, load_dictionary())
matcher = CollocationMatcher(patterns)
enhanced = enhance(
    salience, match_unigrams(s, taxonomy), matcher.match(s), BoostConfig()
)

print("\n--- per-token importance ---")
print(f"{'token':<12} {'yake':>6} {'blend':>6} {'norm':>6} {'boosted':>8}")
for i, token in enumerate(s.word_tokens()):
    marker = " <- boosted" if enhanced.enhanced[i] > salience.normalized[i] else ""
    print(
        f"{token.surface:<12} {salience.yake[i]:>6.3f} {salience.blended[i]:>6.3f} "
        f"{salience.normalized[i]:>6.3f} {enhanced.enhanced[i]:>8.3f}{marker}"
    )

print("\nboost events:")
for event in enhanced.boosts:
    print(f"  token {event['token_idx']}: {event['kind']} x{event['factor']} ({event['ref']})")
