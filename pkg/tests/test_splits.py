"""Chronological assignment, leakage checks, and split statistics."""

import pytest

from riskbench.corpus import SentenceRecord, tokenize
from riskbench.splits import (
    SplitBoundaries,
    SplitManifest,
    assign_splits,
    check_leakage,
    percentages_from_counts,
    split_stats,
)


def rec(sid, year, text="Unique text %s." % id, doc=None):
    doc = doc or sid.split("#")[0]
    return SentenceRecord(sid, doc, year, text, tokenize(text))


class TestAssignSplits:
    @pytest.mark.parametrize(
        "year,expected",
        [(2001, "train"), (2015, "train"), (2022, "train"),
         (2023, "dev"), (2024, "test"), (2025, "test")],
    )
    def test_year_assignment(self, year, expected):
        manifest = assign_splits([rec("d#000000", year, f"text {year}.")])
        assert manifest.assignments["d#000000"] == expected

    @pytest.mark.parametrize("year", [1999, 2000, 2026, 2100])
    def test_out_of_range_rejected(self, year):
        manifest = assign_splits([rec("d#000000", year, "text.")])
        assert manifest.assignments == {}
        assert manifest.rejected[0]["release_year"] == year

    def test_missing_year_hard_error(self):
        record = rec("d#000000", 2020, "text.")
        record.release_year = None
        with pytest.raises(ValueError, match="doc d"):
            assign_splits([record])

    def test_document_atomicity(self):
        records = [rec(f"d#{i:06d}", 2022, f"t{i}.", doc="d") for i in range(5)]
        manifest = assign_splits(records)
        assert {manifest.assignments[r.sentence_id] for r in records} == {"train"}

    def test_partition(self):
        records = [rec(f"d{i}#000000", 2018 + i, f"t{i}.") for i in range(8)]
        manifest = assign_splits(records)
        counts = manifest.counts()
        assert sum(counts.values()) == len(manifest.assignments) == 8


class TestCheckLeakage:
    def test_planted_cross_split_duplicate_removed(self):
        same = "Identical sentence text."
        records = [
            rec("train_doc#000000", 2020, same),
            rec("test_doc#000000", 2024, same),
        ]
        manifest = assign_splits(records)
        violations = check_leakage(manifest, records)
        kinds = [v["kind"] for v in violations]
        assert "cross_split_duplicate" in kinds
        assert "test_doc#000000" not in manifest.assignments
        assert "train_doc#000000" in manifest.assignments

    def test_earlier_split_keeps_copy(self):
        same = "Echoed text."
        records = [
            rec("dev_doc#000000", 2023, same),
            rec("test_doc#000000", 2025, same),
        ]
        manifest = assign_splits(records)
        check_leakage(manifest, records)
        assert "dev_doc#000000" in manifest.assignments
        assert "test_doc#000000" not in manifest.assignments

    def test_clean_fixture_empty_log(self):
        records = [rec(f"d{i}#000000", 2020 + i, f"unique {i}.") for i in range(4)]
        manifest = assign_splits(records)
        assert check_leakage(manifest, records) == []

    def test_within_split_duplicate_warned_not_removed(self):
        same = "Twice in train."
        records = [
            rec("a#000000", 2020, same),
            rec("b#000000", 2021, same),
        ]
        manifest = assign_splits(records)
        violations = check_leakage(manifest, records)
        assert violations[0]["kind"] == "within_split_duplicate"
        assert len(manifest.assignments) == 2


class TestSplitStats:
    def test_published_counts_reproduce_published_percentages(self):
        counts = {"train": 1_276_105, "dev": 114_422, "test": 223_310}
        assert percentages_from_counts(counts) == {
            "train": 79.07,
            "dev": 7.09,
            "test": 13.84,
        }

    def test_single_split_corpus(self):
        records = [rec(f"d#{i:06d}", 2020, f"t{i}.", doc="d") for i in range(7)]
        manifest = assign_splits(records)
        stats = split_stats(manifest)
        assert stats["splits"]["train"]["percent"] == 100.0
        assert stats["splits"]["dev"]["percent"] == 0.0

    def test_equal_thirds(self):
        records = (
            [rec(f"a#{i:06d}", 2020, f"a{i}.", doc="a") for i in range(3)]
            + [rec(f"b#{i:06d}", 2023, f"b{i}.", doc="b") for i in range(3)]
            + [rec(f"c#{i:06d}", 2024, f"c{i}.", doc="c") for i in range(3)]
        )
        manifest = assign_splits(records)
        stats = split_stats(manifest)
        for name in ("train", "dev", "test"):
            assert stats["splits"][name]["percent"] == 33.33

    def test_round_half_up(self):
        # 1/8 = 12.5% exercises the half-up rule at the 2nd decimal
        counts = {"train": 1, "dev": 3, "test": 4}
        assert percentages_from_counts(counts)["train"] == 12.5

    def test_document_counts(self):
        records = [
            rec("a#000000", 2020, "x1."),
            rec("a#000001", 2020, "x2.", doc="a"),
            rec("b#000000", 2024, "y."),
        ]
        manifest = assign_splits(records)
        doc_ids = {r.sentence_id: r.doc_id for r in records}
        stats = split_stats(manifest, doc_ids)
        assert stats["splits"]["train"]["documents"] == 1
        assert stats["splits"]["test"]["documents"] == 1


class TestManifest:
    def test_content_hash_changes_with_assignment(self):
        m1 = assign_splits([rec("d#000000", 2020, "x.")])
        m2 = assign_splits([rec("d#000000", 2024, "x.")])
        assert m1.content_hash() != m2.content_hash()

    def test_round_trip(self):
        records = [rec(f"d{i}#000000", 2019 + i, f"t{i}.") for i in range(6)]
        manifest = assign_splits(records)
        clone = SplitManifest.from_dict(manifest.to_dict())
        assert clone.assignments == manifest.assignments
        assert clone.boundaries == manifest.boundaries

    def test_custom_boundaries(self):
        b = SplitBoundaries(train_max_year=2020, dev_year=2021, test_years=(2022, 2025))
        manifest = assign_splits([rec("d#000000", 2021, "x.")], b)
        assert manifest.assignments["d#000000"] == "dev"
