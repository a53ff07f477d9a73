"""Corpus ingestion: normalization, sentence segmentation, tokenization, dedup.

Raw filing text arrives as plain text (risk sections already extracted).
Normalization applies four cleanup rules, in order:

    1. remove control characters ``[\\x00-\\x1f\\x7f-\\x9f]``
    2. collapse repeated whitespace
    3. replace word-boundary-anchored ``No.`` with ``Number ``
    4. join consecutive lines whose trimmed last character is not one of
       ``. ? !``

Rule 1 exempts the whitespace controls (tab, newline, carriage return):
removing them literally would leave nothing for rules 2 and 4 to operate
on.  Carriage returns are canonicalized to newlines, tabs are whitespace
for rule 2.  Rule 2 preserves line structure (a run containing a newline
collapses to one newline, any other run to one space) so that rule 4 can
still see lines.  A final whitespace tidy (same collapse + strip) runs
after rule 3/4 because the ``Number `` replacement text introduces
whitespace of its own; without it the function would not be idempotent.

Lines that rule 4 does *not* join keep their newline, and the segmenter
treats that newline as a hard sentence boundary.  Sentence text is always
trimmed, so no control character ever survives into a SentenceRecord.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

# Control characters minus tab/newline/carriage-return, which are whitespace
# and belong to rules 2 and 4.
_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f-\x9f]")
_WS_WITH_NEWLINE_RE = re.compile(r"\s*\n\s*")
_WS_RE = re.compile(r"[^\S\n]+")
_NO_ABBREV_RE = re.compile(r"\bNo\.")

_TERMINALS = frozenset(".?!")

# Abbreviations that end with a period but do not terminate a sentence.
# "No." never reaches the segmenter: rule 3 rewrites it to "Number ".
_ABBREVIATION_GUARD = frozenset({"Inc.", "Corp.", "U.S."})

# Word tokens: letters/digits with internal hyphens or apostrophes.
# Underscore is excluded on purpose.
_WORD_RE = re.compile(r"[^\W_]+(?:[-'’][^\W_]+)*", re.UNICODE)


@dataclass(frozen=True)
class Token:
    """One token of a sentence, carrying char offsets into the sentence text."""

    surface: str
    lower: str
    start: int
    end: int
    is_word: bool

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"token offsets must satisfy start < end: {self}")


@dataclass(frozen=True)
class FilingDocument:
    """A raw filing's risk-section text plus the metadata splits rely on."""

    doc_id: str
    company_id: str
    release_year: int
    raw_text: str


@dataclass
class SentenceRecord:
    """One segmented sentence with inherited document metadata."""

    sentence_id: str
    doc_id: str
    release_year: int
    text: str
    tokens: list[Token] = field(default_factory=list)

    def word_tokens(self) -> list[Token]:
        return [t for t in self.tokens if t.is_word]

    def word_lowers(self) -> list[str]:
        return [t.lower for t in self.tokens if t.is_word]


def _collapse_whitespace(text: str) -> str:
    text = _WS_WITH_NEWLINE_RE.sub("\n", text)
    return _WS_RE.sub(" ", text)


def _join_lines(text: str) -> str:
    lines = text.split("\n")
    joined: list[str] = [lines[0]]
    for line in lines[1:]:
        head = joined[-1].rstrip()
        if head and head[-1] in _TERMINALS:
            joined.append(line)
        else:
            joined[-1] = f"{head} {line}" if head else line
    return "\n".join(joined)


def normalize_text(raw: str) -> str:
    """Apply the four cleanup rules in order. Idempotent; '' maps to ''."""
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    text = _CONTROL_RE.sub("", text)
    text = _collapse_whitespace(text)
    text = _NO_ABBREV_RE.sub("Number ", text)
    text = _join_lines(text)
    return _collapse_whitespace(text).strip()


def tokenize(text: str) -> list[Token]:
    """Split normalized text into word and punctuation tokens with offsets."""
    tokens: list[Token] = []
    pos = 0
    for m in _WORD_RE.finditer(text):
        for i in range(pos, m.start()):
            ch = text[i]
            if not ch.isspace():
                tokens.append(Token(ch, ch.lower(), i, i + 1, is_word=False))
        surface = m.group(0)
        tokens.append(Token(surface, surface.lower(), m.start(), m.end(), is_word=True))
        pos = m.end()
    for i in range(pos, len(text)):
        ch = text[i]
        if not ch.isspace():
            tokens.append(Token(ch, ch.lower(), i, i + 1, is_word=False))
    return tokens


def _is_guarded(text: str, punct_idx: int) -> bool:
    """True when the period at punct_idx ends a guarded abbreviation."""
    if text[punct_idx] != ".":
        return False
    end = punct_idx + 1
    start = punct_idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end] in _ABBREVIATION_GUARD


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    """Boundaries: terminal punctuation followed by whitespace + capital or
    digit, a hard newline, or end of text."""
    spans: list[tuple[int, int]] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            spans.append((start, i))
            start = i + 1
            i += 1
            continue
        if ch in _TERMINALS:
            # Consume a run of terminal punctuation ("?!", "...").
            j = i
            while j + 1 < n and text[j + 1] in _TERMINALS:
                j += 1
            k = j + 1
            if k < n and text[k].isspace():
                nxt = k
                while nxt < n and text[nxt].isspace():
                    nxt += 1
                if (
                    nxt < n
                    and (text[nxt].isupper() or text[nxt].isdigit())
                    and not _is_guarded(text, i)
                ):
                    spans.append((start, j + 1))
                    start = nxt
                    i = nxt
                    continue
            i = k
            continue
        i += 1
    if start < n:
        spans.append((start, n))
    return spans


def segment_sentences(doc: FilingDocument) -> list[SentenceRecord]:
    """Segment a normalized document into SentenceRecords in document order."""
    text = doc.raw_text
    records: list[SentenceRecord] = []
    for span_start, span_end in _sentence_spans(text):
        sentence = text[span_start:span_end].strip()
        if not sentence:
            continue
        ordinal = len(records)
        records.append(
            SentenceRecord(
                sentence_id=f"{doc.doc_id}#{ordinal:06d}",
                doc_id=doc.doc_id,
                release_year=doc.release_year,
                text=sentence,
                tokens=tokenize(sentence),
            )
        )
    return records


def deduplicate(
    records: list[SentenceRecord],
) -> tuple[list[SentenceRecord], list[tuple[str, str]]]:
    """Drop exact duplicate sentence texts, keeping the first occurrence.

    Input is expected in canonical order (doc_id, ordinal); the first
    occurrence in that order wins.  Equality is byte equality on the
    normalized text (case differences are preserved, so they do not
    collide).  Returns the kept records (a stable subsequence of the
    input) and a log of (dropped_sentence_id, kept_sentence_id) pairs.
    """
    kept: list[SentenceRecord] = []
    first_seen: dict[str, str] = {}
    dropped_log: list[tuple[str, str]] = []
    for record in records:
        original = first_seen.get(record.text)
        if original is None:
            first_seen[record.text] = record.sentence_id
            kept.append(record)
        else:
            dropped_log.append((record.sentence_id, original))
    return kept, dropped_log


def process_document(doc: FilingDocument) -> list[SentenceRecord]:
    """normalize -> segment for one document (pure; parallel-safe)."""
    normalized = FilingDocument(
        doc_id=doc.doc_id,
        company_id=doc.company_id,
        release_year=doc.release_year,
        raw_text=normalize_text(doc.raw_text),
    )
    return segment_sentences(normalized)


# --------------------------------------------------------------------------
# External interfaces: metadata CSV + sentence JSONL
# --------------------------------------------------------------------------

_METADATA_COLUMNS = ("doc_id", "company_id", "release_year", "path")


def read_metadata(csv_path: str | Path) -> list[FilingDocument]:
    """Load the corpus metadata table and the filing texts it points to.

    CSV columns: doc_id, company_id, release_year, path (relative paths
    resolve against the CSV's directory).  Documents are returned sorted
    by doc_id so downstream processing is order-canonical.
    """
    csv_path = Path(csv_path)
    docs: list[FilingDocument] = []
    seen: set[str] = set()
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in _METADATA_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"metadata CSV missing columns: {missing}")
        for row in reader:
            doc_id = row["doc_id"].strip()
            if doc_id in seen:
                raise ValueError(f"duplicate doc_id in metadata: {doc_id}")
            seen.add(doc_id)
            year_raw = row["release_year"].strip()
            if not year_raw:
                raise ValueError(f"missing release_year for doc_id {doc_id}")
            path = Path(row["path"])
            if not path.is_absolute():
                path = csv_path.parent / path
            docs.append(
                FilingDocument(
                    doc_id=doc_id,
                    company_id=row["company_id"].strip(),
                    release_year=int(year_raw),
                    raw_text=path.read_text(encoding="utf-8"),
                )
            )
    docs.sort(key=lambda d: d.doc_id)
    return docs


def record_to_dict(record: SentenceRecord) -> dict:
    return {
        "sentence_id": record.sentence_id,
        "doc_id": record.doc_id,
        "release_year": record.release_year,
        "text": record.text,
        "tokens": [
            {
                "surface": t.surface,
                "lower": t.lower,
                "start": t.start,
                "end": t.end,
                "is_word": t.is_word,
            }
            for t in record.tokens
        ],
    }


def record_from_dict(obj: dict) -> SentenceRecord:
    return SentenceRecord(
        sentence_id=obj["sentence_id"],
        doc_id=obj["doc_id"],
        release_year=obj["release_year"],
        text=obj["text"],
        tokens=[
            Token(t["surface"], t["lower"], t["start"], t["end"], t["is_word"])
            for t in obj["tokens"]
        ],
    )


def write_records(records: list[SentenceRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[SentenceRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_meta" in obj:
                continue
            records.append(record_from_dict(obj))
    return records
