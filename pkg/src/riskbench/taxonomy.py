"""Risk taxonomy loading and phrase matching.

The taxonomy is a versioned data asset: five macro classes, 21
subcategories, 193 case-insensitively distinct terms.  Multiword terms
from the taxonomy plus a curated finance phrase dictionary compile into
collocation patterns whose variants cover space<->hyphen alternations and
parenthetical acronyms ("X (Y)" produces patterns for both "X" and "Y").

Matching is case-insensitive, boundary-aware, and alignment-strict: a
match's character span must start at the start of a word token and end at
the end of a word token, so phrases never fire on fragments of longer
hyphenated tokens and never cross punctuation that the variant itself
does not contain.  No lemmatization or singularization is applied.

The scanner is a character-level Aho-Corasick automaton over all pattern
variants: one pass per sentence regardless of pattern count, with
candidate spans validated against token boundaries afterwards.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import re
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import SentenceRecord

logger = logging.getLogger(__name__)

EXPECTED_MACRO_CLASSES = 5
EXPECTED_SUBCATEGORIES = 21
EXPECTED_DISTINCT_TERMS = 193


@dataclass(frozen=True)
class Subcategory:
    name: str
    macro: str
    terms: tuple[str, ...]


@dataclass
class Taxonomy:
    """The 5-macro / 21-subcategory / 193-term risk taxonomy."""

    macro_classes: list[str]
    subcategories: list[Subcategory]

    def __post_init__(self) -> None:
        self._sub_by_name = {s.name: s for s in self.subcategories}
        term_map: dict[str, list[str]] = {}
        for sub in self.subcategories:
            for term in sub.terms:
                term_map.setdefault(term.lower(), []).append(sub.name)
        self.term_to_subcats: dict[str, tuple[str, ...]] = {
            t: tuple(dict.fromkeys(subs)) for t, subs in term_map.items()
        }
        self.unigram_to_subcats: dict[str, tuple[str, ...]] = {
            t: subs for t, subs in self.term_to_subcats.items() if " " not in t
        }
        self.multiword_terms: list[str] = sorted(
            t for t in self.term_to_subcats if " " in t
        )

    @property
    def subcategory_names(self) -> list[str]:
        return [s.name for s in self.subcategories]

    @property
    def n_distinct_terms(self) -> int:
        return len(self.term_to_subcats)

    def parent_of(self, subcategory: str) -> str:
        return self._sub_by_name[subcategory].macro

    def children_of(self, macro: str) -> list[str]:
        return [s.name for s in self.subcategories if s.macro == macro]

    def validate(self) -> None:
        """Check the structural invariants of the shipped asset."""
        if len(self.macro_classes) != EXPECTED_MACRO_CLASSES:
            raise ValueError(
                f"expected {EXPECTED_MACRO_CLASSES} macro classes, "
                f"got {len(self.macro_classes)}"
            )
        if len(self.subcategories) != EXPECTED_SUBCATEGORIES:
            raise ValueError(
                f"expected {EXPECTED_SUBCATEGORIES} subcategories, "
                f"got {len(self.subcategories)}"
            )
        if self.n_distinct_terms != EXPECTED_DISTINCT_TERMS:
            raise ValueError(
                f"expected {EXPECTED_DISTINCT_TERMS} distinct terms, "
                f"got {self.n_distinct_terms}"
            )
        names = [s.name for s in self.subcategories]
        if len(set(names)) != len(names):
            raise ValueError("subcategory names must be unique")
        macros = set(self.macro_classes)
        for sub in self.subcategories:
            if sub.macro not in macros:
                raise ValueError(f"subcategory {sub.name!r} has unknown parent")
            if not sub.terms:
                raise ValueError(f"subcategory {sub.name!r} has no terms")

    @classmethod
    def from_dict(cls, obj: dict) -> "Taxonomy":
        macro_classes: list[str] = []
        subcategories: list[Subcategory] = []
        for macro in obj["macro"]:
            macro_classes.append(macro["name"])
            for sub in macro["subcategories"]:
                subcategories.append(
                    Subcategory(
                        name=sub["name"],
                        macro=macro["name"],
                        terms=tuple(sub["terms"]),
                    )
                )
        return cls(macro_classes=macro_classes, subcategories=subcategories)

    @classmethod
    def load(cls, path: str | Path | None = None, verify_checksum: bool = True) -> "Taxonomy":
        """Load a taxonomy JSON file; default is the bundled asset.

        The bundled asset carries a sha256 sidecar; a mismatch raises so a
        silently edited taxonomy cannot masquerade as the released one.
        Custom files (no sidecar) load without the check and without the
        5/21/193 validation.
        """
        if path is None:
            data_dir = resources.files("riskbench").joinpath("data")
            raw = data_dir.joinpath("taxonomy.json").read_bytes()
            if verify_checksum:
                expected = data_dir.joinpath("taxonomy.sha256").read_text().split()[0]
                actual = hashlib.sha256(raw).hexdigest()
                if actual != expected:
                    raise ValueError(
                        f"taxonomy asset checksum mismatch: {actual} != {expected}"
                    )
            taxonomy = cls.from_dict(json.loads(raw.decode("utf-8")))
            taxonomy.validate()
            return taxonomy
        raw = Path(path).read_bytes()
        return cls.from_dict(json.loads(raw.decode("utf-8")))


def load_dictionary(path: str | Path | None = None) -> list[str]:
    """Read the newline-delimited finance phrase dictionary."""
    if path is None:
        text = (
            resources.files("riskbench")
            .joinpath("data/finance_dictionary.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


# --------------------------------------------------------------------------
# Pattern compilation
# --------------------------------------------------------------------------

_PARENTHETICAL_RE = re.compile(r"^(?P<long>.+?)\s*\((?P<acro>[^()]+)\)\s*$")
_SEPARATOR_RE = re.compile(r"[\s-]+")


@dataclass(frozen=True)
class CollocationPattern:
    """A multiword phrase with its tolerance variants, all lowercased."""

    pattern_id: str
    canonical: str
    variants: tuple[str, ...]
    sources: tuple[str, ...]
    subcategories: tuple[str, ...] = ()
    fuzzy: bool = False


@dataclass(frozen=True)
class SpanMatch:
    """A collocation hit; token indices count word tokens only."""

    pattern_id: str
    token_span: tuple[int, int]
    char_span: tuple[int, int]
    matched_variant: str


def _phrase_words(phrase: str) -> tuple[str, ...]:
    return tuple(w for w in _SEPARATOR_RE.split(phrase.lower().strip()) if w)


def _separator_variants(words: tuple[str, ...]) -> set[str]:
    if len(words) == 1:
        return {words[0]}
    variants = set()
    for seps in itertools.product((" ", "-"), repeat=len(words) - 1):
        variants.add("".join(w + s for w, s in zip(words, seps + ("",))).rstrip())
    return variants


def compile_patterns(
    taxonomy: Taxonomy, dictionary: list[str], fuzzy: bool = False
) -> list[CollocationPattern]:
    """Build the collocation pattern set from taxonomy multiword terms and
    the finance dictionary (union).

    Phrases whose long forms reduce to the same word sequence are merged:
    sources union, subcategory owners union, acronym variants union.
    Single-word dictionary entries without a parenthetical are skipped
    (those belong to the unigram route).
    """
    builders: dict[tuple[str, ...], dict] = {}

    def add(canonical: str, source: str, subcats: tuple[str, ...]) -> None:
        m = _PARENTHETICAL_RE.match(canonical.strip())
        long_form = m.group("long") if m else canonical.strip()
        acro = m.group("acro") if m else None
        words = _phrase_words(long_form)
        if not words:
            return
        if len(words) == 1 and acro is None:
            logger.debug("skipping single-word phrase %r (unigram route)", canonical)
            return
        key = words
        entry = builders.get(key)
        if entry is None:
            entry = {
                "canonical": canonical.strip(),
                "variants": set(_separator_variants(words)),
                "sources": set(),
                "subcats": set(),
            }
            builders[key] = entry
        else:
            logger.info(
                "merging duplicate phrase %r into %r", canonical, entry["canonical"]
            )
        entry["sources"].add(source)
        entry["subcats"].update(subcats)
        if acro is not None:
            for acro_words in (_phrase_words(acro),):
                if acro_words:
                    entry["variants"].update(_separator_variants(acro_words))

    for term in taxonomy.multiword_terms:
        add(term, "taxonomy", taxonomy.term_to_subcats[term])
    for phrase in dictionary:
        add(phrase, "finance_dictionary", ())

    patterns = []
    for key in sorted(builders):
        entry = builders[key]
        patterns.append(
            CollocationPattern(
                pattern_id="-".join(key),
                canonical=entry["canonical"],
                variants=tuple(sorted(entry["variants"])),
                sources=tuple(sorted(entry["sources"])),
                subcategories=tuple(sorted(entry["subcats"])),
                fuzzy=fuzzy,
            )
        )
    return patterns


def serialize_patterns(patterns: list[CollocationPattern]) -> bytes:
    """Canonical byte serialization (compilation determinism is testable)."""
    payload = [
        {
            "pattern_id": p.pattern_id,
            "canonical": p.canonical,
            "variants": list(p.variants),
            "sources": list(p.sources),
            "subcategories": list(p.subcategories),
            "fuzzy": p.fuzzy,
        }
        for p in patterns
    ]
    return json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")


# --------------------------------------------------------------------------
# Aho-Corasick scanner
# --------------------------------------------------------------------------


class _Node:
    __slots__ = ("children", "fail", "outputs")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.fail: _Node | None = None
        self.outputs: list[tuple[int, str]] = []  # (pattern_index, variant)


class CollocationMatcher:
    """Immutable multi-pattern scanner; build once, share across sentences."""

    def __init__(self, patterns: list[CollocationPattern]):
        self.patterns = list(patterns)
        self._root = _Node()
        for idx, pattern in enumerate(self.patterns):
            for variant in pattern.variants:
                node = self._root
                for ch in variant:
                    node = node.children.setdefault(ch, _Node())
                node.outputs.append((idx, variant))
        self._build_failure_links()
        self._fuzzy_index: dict[int, list[tuple[str, ...]]] = {
            idx: sorted({_phrase_words(v) for v in p.variants})
            for idx, p in enumerate(self.patterns)
            if p.fuzzy
        }

    def _build_failure_links(self) -> None:
        root = self._root
        root.fail = root
        queue: deque[_Node] = deque()
        for child in root.children.values():
            child.fail = root
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in node.children.items():
                fallback = node.fail
                while fallback is not root and ch not in fallback.children:
                    fallback = fallback.fail
                child.fail = fallback.children.get(ch, root)
                if child.fail is child:
                    child.fail = root
                child.outputs = child.outputs + child.fail.outputs
                queue.append(child)

    def match(self, sentence: SentenceRecord) -> list[SpanMatch]:
        text = sentence.text
        scan = _offset_preserving_lower(text)
        word_tokens = sentence.word_tokens()
        start_to_idx = {t.start: i for i, t in enumerate(word_tokens)}
        end_to_idx = {t.end: i for i, t in enumerate(word_tokens)}

        matches: list[SpanMatch] = []
        node = self._root
        for pos, ch in enumerate(scan):
            while node is not self._root and ch not in node.children:
                node = node.fail
            node = node.children.get(ch, self._root)
            for pattern_idx, variant in node.outputs:
                end = pos + 1
                start = end - len(variant)
                first = start_to_idx.get(start)
                last = end_to_idx.get(end)
                if first is None or last is None or first > last:
                    continue
                matches.append(
                    SpanMatch(
                        pattern_id=self.patterns[pattern_idx].pattern_id,
                        token_span=(first, last),
                        char_span=(start, end),
                        matched_variant=variant,
                    )
                )
        if self._fuzzy_index:
            matches.extend(self._fuzzy_matches(word_tokens, {(m.pattern_id, m.token_span) for m in matches}))
        matches.sort(key=lambda m: (m.char_span, m.pattern_id))
        return matches

    def _fuzzy_matches(
        self,
        word_tokens,
        seen: set[tuple[str, tuple[int, int]]],
    ) -> list[SpanMatch]:
        """Per-word edit-distance-1 tolerance over whole word tokens."""
        lowers = [t.lower for t in word_tokens]
        out: list[SpanMatch] = []
        for pattern_idx, word_seqs in self._fuzzy_index.items():
            pattern = self.patterns[pattern_idx]
            for words in word_seqs:
                n = len(words)
                for i in range(0, len(lowers) - n + 1):
                    span = (i, i + n - 1)
                    if (pattern.pattern_id, span) in seen:
                        continue
                    if all(
                        _edit_distance_at_most_one(lowers[i + j], words[j])
                        for j in range(n)
                    ):
                        out.append(
                            SpanMatch(
                                pattern_id=pattern.pattern_id,
                                token_span=span,
                                char_span=(
                                    word_tokens[i].start,
                                    word_tokens[i + n - 1].end,
                                ),
                                matched_variant=" ".join(words),
                            )
                        )
                        seen.add((pattern.pattern_id, span))
        return out


def _offset_preserving_lower(text: str) -> str:
    # Per-char lowercase; chars whose lowercase form changes length (rare
    # Unicode cases) are kept as-is so offsets stay valid.
    return "".join(lc if len(lc := ch.lower()) == 1 else ch for ch in text)


def _edit_distance_at_most_one(a: str, b: str) -> bool:
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = j = edits = 0
    while i < la and j < lb:
        if a[i] == b[j]:
            i += 1
            j += 1
            continue
        edits += 1
        if edits > 1:
            return False
        if la == lb:
            i += 1
        j += 1
    return edits + (lb - j) + (la - i) <= 1


def match_collocations(
    sentence: SentenceRecord,
    patterns: list[CollocationPattern] | CollocationMatcher,
) -> list[SpanMatch]:
    """All boundary-aligned case-insensitive collocation matches.

    Accepts either a compiled pattern list (a matcher is built on the
    fly) or a prebuilt CollocationMatcher for repeated use.
    """
    matcher = (
        patterns
        if isinstance(patterns, CollocationMatcher)
        else CollocationMatcher(patterns)
    )
    return matcher.match(sentence)


def match_unigrams(
    sentence: SentenceRecord, taxonomy: Taxonomy
) -> list[tuple[int, tuple[str, ...]]]:
    """Word tokens whose lower form equals a single-word taxonomy term.

    Returns (word_token_index, owning_subcategories) entries; terms owned
    by several subcategories report all of them.
    """
    out = []
    for idx, token in enumerate(sentence.word_tokens()):
        subcats = taxonomy.unigram_to_subcats.get(token.lower)
        if subcats:
            out.append((idx, subcats))
    return out
