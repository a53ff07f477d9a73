"""Chronological split assignment, leakage checks, split statistics.

Every sentence inherits its document's release year; documents are
atomic, so a document's sentences always share one split.  Cross-split
duplicate sentence strings are leakage: the chronologically earliest
split keeps its copy (train < dev < test) and later copies are removed
and logged.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .corpus import SentenceRecord

SPLIT_ORDER = ("train", "dev", "test")

MIN_YEAR = 2001
MAX_YEAR = 2025


@dataclass(frozen=True)
class SplitBoundaries:
    train_max_year: int = 2022
    dev_year: int = 2023
    test_years: tuple[int, int] = (2024, 2025)

    def split_for(self, year: int) -> str | None:
        if year < MIN_YEAR or year > MAX_YEAR:
            return None
        if year <= self.train_max_year:
            return "train"
        if year == self.dev_year:
            return "dev"
        if self.test_years[0] <= year <= self.test_years[1]:
            return "test"
        return None


@dataclass
class SplitManifest:
    boundaries: SplitBoundaries
    assignments: dict[str, str]
    rejected: list[dict] = field(default_factory=list)
    violation_log: list[dict] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {name: 0 for name in SPLIT_ORDER}
        for split in self.assignments.values():
            out[split] += 1
        return out

    def sentence_ids(self, split: str) -> list[str]:
        return sorted(s for s, sp in self.assignments.items() if sp == split)

    def content_hash(self) -> str:
        payload = json.dumps(sorted(self.assignments.items())).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_dict(self) -> dict:
        return {
            "boundaries": {
                "train_max_year": self.boundaries.train_max_year,
                "dev_year": self.boundaries.dev_year,
                "test_years": list(self.boundaries.test_years),
            },
            "stats": split_stats(self),
            "manifest_hash": self.content_hash(),
            "rejected": self.rejected,
            "violation_log": self.violation_log,
            "assignments": dict(sorted(self.assignments.items())),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SplitManifest":
        b = obj["boundaries"]
        return cls(
            boundaries=SplitBoundaries(
                train_max_year=b["train_max_year"],
                dev_year=b["dev_year"],
                test_years=tuple(b["test_years"]),
            ),
            assignments=dict(obj["assignments"]),
            rejected=list(obj.get("rejected", [])),
            violation_log=list(obj.get("violation_log", [])),
        )


def assign_splits(
    records: list[SentenceRecord],
    boundaries: SplitBoundaries = SplitBoundaries(),
) -> SplitManifest:
    """Assign each sentence to train/dev/test by its release year.

    Years outside the corpus range are rejected with an error entry; a
    missing year is a hard error naming the document.
    """
    assignments: dict[str, str] = {}
    rejected: list[dict] = []
    for record in records:
        if record.release_year is None:
            raise ValueError(f"missing release_year for doc {record.doc_id}")
        split = boundaries.split_for(record.release_year)
        if split is None:
            rejected.append(
                {
                    "sentence_id": record.sentence_id,
                    "doc_id": record.doc_id,
                    "release_year": record.release_year,
                    "reason": "year outside corpus range",
                }
            )
            continue
        assignments[record.sentence_id] = split
    return SplitManifest(boundaries=boundaries, assignments=assignments, rejected=rejected)


def check_leakage(
    manifest: SplitManifest, records: list[SentenceRecord]
) -> list[dict]:
    """Detect and remove cross-split leakage; log everything found.

    (a) documents with sentences in two or more splits (impossible by
    construction since splits key on the document year, but checked);
    (b) identical normalized sentence strings across splits: the copy in
    the chronologically later split is removed from the manifest.
    Duplicate strings *within* one split are flagged as warnings only;
    corpus-level dedup owns that case.
    """
    violations: list[dict] = []
    split_rank = {name: i for i, name in enumerate(SPLIT_ORDER)}

    doc_splits: dict[str, set[str]] = {}
    for record in records:
        split = manifest.assignments.get(record.sentence_id)
        if split is not None:
            doc_splits.setdefault(record.doc_id, set()).add(split)
    for doc_id, splits in sorted(doc_splits.items()):
        if len(splits) > 1:
            violations.append(
                {
                    "kind": "document_in_multiple_splits",
                    "doc_id": doc_id,
                    "splits": sorted(splits),
                }
            )

    by_text: dict[str, list[SentenceRecord]] = {}
    for record in records:
        if record.sentence_id in manifest.assignments:
            by_text.setdefault(record.text, []).append(record)
    for text, group in by_text.items():
        if len(group) < 2:
            continue
        group_sorted = sorted(
            group,
            key=lambda r: (split_rank[manifest.assignments[r.sentence_id]], r.sentence_id),
        )
        keeper = group_sorted[0]
        keeper_split = manifest.assignments[keeper.sentence_id]
        for other in group_sorted[1:]:
            other_split = manifest.assignments[other.sentence_id]
            if other_split != keeper_split:
                violations.append(
                    {
                        "kind": "cross_split_duplicate",
                        "kept": keeper.sentence_id,
                        "kept_split": keeper_split,
                        "removed": other.sentence_id,
                        "removed_split": other_split,
                    }
                )
                del manifest.assignments[other.sentence_id]
            else:
                violations.append(
                    {
                        "kind": "within_split_duplicate",
                        "kept": keeper.sentence_id,
                        "duplicate": other.sentence_id,
                        "split": keeper_split,
                    }
                )
    manifest.violation_log.extend(violations)
    return violations


def _round2(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def split_stats(
    manifest: SplitManifest, doc_ids: dict[str, str] | None = None
) -> dict:
    """Per-split sentence counts and percentages (2 dp, round half up)."""
    counts = manifest.counts()
    total = sum(counts.values())
    stats: dict[str, dict] = {}
    for name in SPLIT_ORDER:
        pct = 100.0 * counts[name] / total if total else 0.0
        stats[name] = {"sentences": counts[name], "percent": _round2(pct)}
    if doc_ids is not None:
        doc_counts = {name: set() for name in SPLIT_ORDER}
        for sentence_id, split in manifest.assignments.items():
            doc = doc_ids.get(sentence_id)
            if doc is not None:
                doc_counts[split].add(doc)
        for name in SPLIT_ORDER:
            stats[name]["documents"] = len(doc_counts[name])
    return {"total_sentences": total, "splits": stats}


def percentages_from_counts(counts: dict[str, int]) -> dict[str, float]:
    """Percentages (2 dp, round half up) for given per-split counts."""
    total = sum(counts.values())
    if total == 0:
        return {name: 0.0 for name in counts}
    return {name: _round2(100.0 * c / total) for name, c in counts.items()}
