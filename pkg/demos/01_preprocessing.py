"""Walk through corpus preprocessing: cleanup rules, segmentation, dedup.

Run: python demos/01_preprocessing.py
"""

from riskbench.corpus import FilingDocument, deduplicate, normalize_text, process_document

# Raw filing text as it tends to arrive: hard-wrapped lines, stray control
# characters, "No." numbering, and repeated whitespace.
raw = (
    "Risk Factors\x07 Summary\n"
    "Risk No. 1 concerns liquidity. Our cash\n"
    "reserves may prove    insufficient.\n"
    "Risk No. 2 concerns litigation.\n"
    "We face claims in the U.S. and abroad"
)

print("--- normalized ---")
normalized = normalize_text(raw)
print(normalized)

# The same four rules applied twice change nothing.
assert normalize_text(normalized) == normalized

print("\n--- sentences ---")
doc = FilingDocument(doc_id="demo-10k", company_id="DEMO", release_year=2022, raw_text=raw)
records = process_document(doc)
for r in records:
    print(f"{r.sentence_id}  {r.text}")

print("\n--- tokens of the first sentence ---")
for token in records[0].tokens:
    kind = "word" if token.is_word else "punct"
    print(f"  [{token.start:>2}:{token.end:<2}] {kind:<5} {token.surface}")

# Exact duplicate sentences keep only their first occurrence.
twin = FilingDocument("demo-10k-copy", "DEMO", 2023, records[1].text)
kept, dropped = deduplicate(records + process_document(twin))
print("\n--- dedup ---")
print(f"kept {len(kept)} sentences; dropped {dropped}")
