"""Shared fixtures: a deterministic fixture corpus and result reporting."""

from __future__ import annotations

import csv
import random
from pathlib import Path

import pytest

from riskbench.corpus import SentenceRecord, normalize_text, tokenize
from riskbench.taxonomy import Taxonomy

# Per-macro unigram terms whose words collide with no other macro class;
# used to synthesize corpora with word-disjoint class vocabularies.
CLASS_UNIGRAMS = {
    "Financial": [
        "liquidity", "volatility", "insolvency", "refinancing", "impairment",
        "creditworthiness", "devaluation", "restatement", "downgrade",
    ],
    "Operational": [
        "cybersecurity", "ransomware", "suppliers", "outages", "malware",
        "phishing", "logistics", "downtime", "attrition",
    ],
    "Strategic": [
        "competitors", "innovation", "reputation", "acquisitions",
        "divestitures", "boycotts", "commoditization", "consolidation",
        "restructuring",
    ],
    "Legal and Compliance": [
        "lawsuits", "sanctions", "antitrust", "patents", "trademarks",
        "infringement", "settlements", "plaintiffs", "copyrights",
    ],
    "External and Hazard": [
        "earthquakes", "hurricanes", "wildfires", "pandemic", "terrorism",
        "inflation", "drought", "quarantine", "epidemic",
    ],
}

FILLERS = {
    "Financial": ["fiscalita", "monetar", "ledgering", "numerary"],
    "Operational": ["workstream", "machinist", "throughput", "logline"],
    "Strategic": ["visionary", "roadmapping", "positioner", "brandish"],
    "Legal and Compliance": ["statutory", "juridical", "clauseful", "docketed"],
    "External and Hazard": ["stormward", "quakelike", "outbreaky", "weathered"],
}


def make_sentence(text: str, sid: str = "d0#000000", doc: str = "d0", year: int = 2022) -> SentenceRecord:
    normalized = normalize_text(text)
    return SentenceRecord(sid, doc, year, normalized, tokenize(normalized))


@pytest.fixture(scope="session")
def taxonomy() -> Taxonomy:
    return Taxonomy.load()


def build_fixture_corpus(root: Path, n_docs: int = 20, sentences_per_doc: int = 10, seed: int = 12345) -> Path:
    """Write a small deterministic corpus (metadata.csv + text files).

    Documents span 2018-2025 so all three chronological splits are
    populated; a handful of exact-duplicate sentences are planted within
    and across years to exercise dedup and leakage checks.
    """
    rng = random.Random(seed)
    root.mkdir(parents=True, exist_ok=True)
    docs_dir = root / "docs"
    docs_dir.mkdir(exist_ok=True)
    classes = list(CLASS_UNIGRAMS)
    years = [2018, 2019, 2020, 2021, 2022, 2022, 2022, 2021, 2020, 2019,
             2018, 2021, 2022, 2020, 2023, 2023, 2023, 2024, 2024, 2025][:n_docs]

    planted_duplicate = "Identical disclosure language repeats across filings."
    rows = []
    for d in range(n_docs):
        doc_id = f"doc{d:03d}"
        company = f"co{d % 7:02d}"
        year = years[d]
        lines = []
        for s in range(sentences_per_doc):
            cls = classes[(d + s) % len(classes)]
            terms = rng.sample(CLASS_UNIGRAMS[cls], k=2)
            filler = rng.choice(FILLERS[cls])
            lines.append(
                f"The {company} group reported {terms[0]} and {terms[1]} "
                f"alongside {filler} pressure in {year}."
            )
        if d in (0, 3, 14, 17):
            lines[-1] = planted_duplicate
        text = "\n".join(lines)
        path = docs_dir / f"{doc_id}.txt"
        path.write_text(text, encoding="utf-8")
        rows.append([doc_id, company, str(year), f"docs/{doc_id}.txt"])

    meta = root / "metadata.csv"
    with meta.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "company_id", "release_year", "path"])
        writer.writerows(rows)
    return meta


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("fixture_corpus")
    return build_fixture_corpus(root)


# --------------------------------------------------------------------------
# Acceptance reporting: one line per criterion in the terminal summary.
# --------------------------------------------------------------------------

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" not in report.nodeid:
        return
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _ACCEPTANCE_RESULTS.append((outcome, report.nodeid.split("::")[-1]))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for outcome, name in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{outcome}] {name}")
