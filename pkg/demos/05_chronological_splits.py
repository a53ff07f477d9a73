"""Chronological splits, leakage checks, and split statistics.

Run: python demos/05_chronological_splits.py
"""

from riskbench.corpus import SentenceRecord, tokenize
from riskbench.splits import assign_splits, check_leakage, percentages_from_counts, split_stats


def rec(sid: str, year: int, text: str) -> SentenceRecord:
    return SentenceRecord(sid, sid.split("#")[0], year, text, tokenize(text))


# Year -> split: train (<= 2022), dev (2023), test (2024-2025).
records = [
    rec("filing-a#000000", 2019, "Legacy systems create downtime risk."),
    rec("filing-a#000001", 2019, "Margins compressed."),
    rec("filing-b#000000", 2022, "Ransomware incidents rose."),
    rec("filing-c#000000", 2023, "Inflation pressured input costs."),
    rec("filing-d#000000", 2024, "New tariffs apply."),
    rec("filing-e#000000", 2025, "Drought disrupted logistics."),
    # a leaked duplicate string: appears in train and again in test
    rec("filing-f#000000", 2020, "Boilerplate risk language repeats."),
    rec("filing-g#000000", 2024, "Boilerplate risk language repeats."),
    # and a year outside the corpus range
    rec("filing-h#000000", 1998, "Ancient filing."),
]

manifest = assign_splits(records)
print("rejected (year out of range):", [r["doc_id"] for r in manifest.rejected])

violations = check_leakage(manifest, records)
for v in violations:
    print("violation:", v)

print("\nassignments after leakage removal:")
for sid, split in sorted(manifest.assignments.items()):
    print(f"  {split:<5} {sid}")

stats = split_stats(manifest, {r.sentence_id: r.doc_id for r in records})
print("\nstats:", stats)
print("manifest hash:", manifest.content_hash()[:16], "...")

# The published corpus counts land exactly on the published percentages.
published = {"train": 1_276_105, "dev": 114_422, "test": 223_310}
print("\npublished split counts ->", percentages_from_counts(published))
