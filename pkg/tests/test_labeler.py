"""Evidence accumulation, roll-up, and the optional embedding backoff."""

import pytest

from conftest import make_sentence
from riskbench.enhancer import BoostConfig, enhance
from riskbench.labeler import (
    LabelerConfig,
    accumulate_evidence,
    label_sentence,
    load_term_embeddings,
    matched_token_indices,
    pattern_subcategories,
    rollup_macro,
    select_top_m,
    semantic_backoff,
)
from riskbench.salience import TokenSalience, attention_fallback, compute_salience
from riskbench.taxonomy import (
    CollocationMatcher,
    SpanMatch,
    compile_patterns,
    load_dictionary,
    match_unigrams,
)


def make_salience(enhanced):
    return TokenSalience(
        sentence_id="s",
        attention=[0.0] * len(enhanced),
        yake=[0.0] * len(enhanced),
        blended=list(enhanced),
        normalized=list(enhanced),
        enhanced=list(enhanced),
    )


class TestSelectTopM:
    def test_tie_break_low_index(self):
        assert select_top_m(make_salience([0.2, 0.9, 0.9, 0.1]), 2) == [1, 2]

    def test_short_sentence_returns_all(self):
        assert select_top_m(make_salience([0.5, 0.2, 0.9]), 10) == [0, 1, 2]

    def test_all_zero_first_m(self):
        assert select_top_m(make_salience([0.0] * 5), 3) == [0, 1, 2]

    def test_m_validated_in_config(self):
        with pytest.raises(ValueError):
            LabelerConfig(m=0)


class TestAccumulateEvidence:
    def test_no_matches_zero_vector(self, taxonomy):
        s = make_sentence("benign words only")
        sal = make_salience([0.5, 0.5, 0.5])
        ev = accumulate_evidence(
            s, sal, [0, 1, 2], [], [], {}, taxonomy, LabelerConfig()
        )
        assert sum(ev.sub_scores) == 0.0
        assert not any(ev.macro_labels)

    def test_single_lexicon_match(self, taxonomy):
        s = make_sentence("litigation pending")
        sal = make_salience([1.0, 0.2])
        uni = match_unigrams(s, taxonomy)
        ev = accumulate_evidence(
            s, sal, [0, 1], uni, [], {}, taxonomy, LabelerConfig()
        )
        idx = taxonomy.subcategory_names.index("litigation")
        assert ev.sub_scores[idx] == 1.0
        macro_idx = taxonomy.macro_classes.index("Legal and Compliance")
        assert ev.macro_labels[macro_idx] is True
        assert sum(ev.macro_scores) == pytest.approx(sum(ev.sub_scores))

    def test_collocation_mean_rule(self, taxonomy):
        s = make_sentence("cash flow pressure")
        sal = make_salience([0.6, 1.0, 0.2])
        col = [SpanMatch("cash-flow", (0, 1), (0, 9), "cash flow")]
        ev = accumulate_evidence(
            s, sal, [0, 1, 2], [], col,
            {"cash-flow": ("liquidity risk",)}, taxonomy, LabelerConfig(),
        )
        idx = taxonomy.subcategory_names.index("liquidity risk")
        assert ev.sub_scores[idx] == pytest.approx(0.8)

    def test_collocation_counts_if_any_span_token_in_top(self, taxonomy):
        s = make_sentence("cash flow pressure")
        sal = make_salience([0.6, 1.0, 0.2])
        col = [SpanMatch("cash-flow", (0, 1), (0, 9), "cash flow")]
        ev = accumulate_evidence(
            s, sal, [1], [], col,
            {"cash-flow": ("liquidity risk",)}, taxonomy, LabelerConfig(),
        )
        idx = taxonomy.subcategory_names.index("liquidity risk")
        # only token 1 is top, so the mean covers it alone
        assert ev.sub_scores[idx] == pytest.approx(1.0)

    def test_dictionary_only_pattern_contributes_nothing(self, taxonomy):
        s = make_sentence("a shares fell")
        sal = make_salience([1.0, 1.0, 1.0])
        col = [SpanMatch("a-shares", (0, 1), (0, 8), "a shares")]
        ev = accumulate_evidence(
            s, sal, [0, 1, 2], [], col, {"a-shares": ()}, taxonomy, LabelerConfig()
        )
        assert sum(ev.sub_scores) == 0.0

    def test_evidence_restricted_to_top_tokens(self, taxonomy):
        s = make_sentence("litigation looms large")
        sal = make_salience([0.1, 0.9, 0.8])
        uni = match_unigrams(s, taxonomy)
        ev = accumulate_evidence(
            s, sal, [1, 2], uni, [], {}, taxonomy, LabelerConfig()
        )
        assert sum(ev.sub_scores) == 0.0  # the matched token is not top-m

    def test_multi_subcategory_term_contributes_to_each(self, taxonomy):
        term = next(
            t for t, subs in taxonomy.unigram_to_subcats.items() if len(subs) > 1
        )
        s = make_sentence(f"{term} rises")
        sal = make_salience([1.0, 0.1])
        uni = match_unigrams(s, taxonomy)
        ev = accumulate_evidence(s, sal, [0], uni, [], {}, taxonomy, LabelerConfig())
        owners = taxonomy.unigram_to_subcats[term]
        for sub in owners:
            assert ev.sub_scores[taxonomy.subcategory_names.index(sub)] == 1.0

    def test_conservation_and_macro_consistency(self, taxonomy):
        patterns = compile_patterns(taxonomy, load_dictionary())
        matcher = CollocationMatcher(patterns)
        psub = pattern_subcategories(patterns)
        s = make_sentence(
            "Litigation, cash flow strain, and supply chain stress mount."
        )
        sal = compute_salience(s, attention_fallback(s, "uniform"))
        sal = enhance(sal, match_unigrams(s, taxonomy), matcher.match(s), BoostConfig())
        ev = label_sentence(
            s, sal, match_unigrams(s, taxonomy), matcher.match(s), psub, taxonomy,
            LabelerConfig(),
        )
        total_contrib = sum(c["weight"] for c in ev.contributions)
        assert sum(ev.sub_scores) == pytest.approx(total_contrib, abs=1e-12)
        assert sum(ev.macro_scores) == pytest.approx(sum(ev.sub_scores), abs=1e-12)
        for i, score in enumerate(ev.macro_scores):
            assert ev.macro_labels[i] == (score > 0)

    def test_binary_weights_mode(self, taxonomy):
        s = make_sentence("litigation pending")
        sal = make_salience([0.4, 0.2])
        uni = match_unigrams(s, taxonomy)
        ev = accumulate_evidence(
            s, sal, [0, 1], uni, [], {}, taxonomy, LabelerConfig(binary_weights=True)
        )
        idx = taxonomy.subcategory_names.index("litigation")
        assert ev.sub_scores[idx] == 1.0

    def test_determinism(self, taxonomy):
        patterns = compile_patterns(taxonomy, load_dictionary())
        matcher = CollocationMatcher(patterns)
        psub = pattern_subcategories(patterns)
        s = make_sentence("Cash flow and litigation risk in the supply chain.")
        sal = compute_salience(s, attention_fallback(s, "uniform"))
        args = (s, sal, match_unigrams(s, taxonomy), matcher.match(s), psub, taxonomy, LabelerConfig())
        assert label_sentence(*args) == label_sentence(*args)


class TestRollup:
    def test_all_zero(self, taxonomy):
        macro, labels = rollup_macro([0.0] * 21, taxonomy)
        assert macro == [0.0] * 5 and not any(labels)

    def test_single_nonzero_single_label(self, taxonomy):
        scores = [0.0] * 21
        scores[3] = 0.4
        macro, labels = rollup_macro(scores, taxonomy)
        assert sum(labels) == 1

    def test_siblings_sum(self, taxonomy):
        # two subcategories under the same parent
        parent = taxonomy.macro_classes[0]
        children = taxonomy.children_of(parent)[:2]
        scores = [0.0] * 21
        scores[taxonomy.subcategory_names.index(children[0])] = 0.3
        scores[taxonomy.subcategory_names.index(children[1])] = 0.7
        macro, _ = rollup_macro(scores, taxonomy)
        assert macro[taxonomy.macro_classes.index(parent)] == pytest.approx(1.0)


class TestSemanticBackoff:
    def test_disabled_returns_empty(self, taxonomy):
        s = make_sentence("hacking attempts")
        out = semantic_backoff(
            s, make_salience([1.0, 1.0]), [0], {"hacking": [1.0, 0.0]},
            taxonomy, LabelerConfig(backoff_enabled=False),
        )
        assert out == []

    def test_self_similarity(self, taxonomy):
        s = make_sentence("hacking attempts")
        table = {"hacking": [1.0, 0.0], "litigation": [0.0, 1.0]}
        out = semantic_backoff(
            s, make_salience([0.8, 0.2]), [0], table, taxonomy,
            LabelerConfig(backoff_enabled=True, backoff_threshold=0.9),
        )
        assert out and out[0]["subcategory"] in taxonomy.unigram_to_subcats["hacking"]
        assert out[0]["weight"] == pytest.approx(0.8)

    def test_below_threshold_no_contribution(self, taxonomy):
        s = make_sentence("orthogonal word")
        table = {"orthogonal": [1.0, 0.0], "litigation": [0.0, 1.0]}
        out = semantic_backoff(
            s, make_salience([1.0, 1.0]), [0], table, taxonomy,
            LabelerConfig(backoff_enabled=True, backoff_threshold=0.5),
        )
        assert out == []

    def test_missing_embedding_skipped(self, taxonomy):
        s = make_sentence("unknownword here")
        out = semantic_backoff(
            s, make_salience([1.0, 1.0]), [0], {"litigation": [1.0]},
            taxonomy, LabelerConfig(backoff_enabled=True),
        )
        assert out == []

    def test_table_loader(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("# comment\nhacking\t1.0 0.0\ncash flow\t0.5 0.5\n")
        table = load_term_embeddings(path)
        assert table["hacking"] == [1.0, 0.0]
        assert table["cash flow"] == [0.5, 0.5]


def test_compact_serialization_omits_contributions(taxonomy):
    from riskbench.labeler import accumulate_evidence, evidence_from_dict, evidence_to_dict

    s = make_sentence("litigation pending")
    sal = make_salience([1.0, 0.2])
    ev = accumulate_evidence(
        s, sal, [0, 1], match_unigrams(s, taxonomy), [], {}, taxonomy, LabelerConfig()
    )
    full = evidence_to_dict(ev)
    compact = evidence_to_dict(ev, compact=True)
    assert "contributions" in full and "contributions" not in compact
    assert evidence_from_dict(compact).sub_scores == ev.sub_scores


def test_matched_token_indices():
    uni = [(1, ("a",))]
    col = [SpanMatch("p", (3, 4), (0, 1), "v")]
    assert matched_token_indices(uni, col) == {1, 3, 4}


def test_restricting_taxonomy_to_one_subcategory(taxonomy):
    """Evidence stays inside the only subcategory whose terms occur."""
    s = make_sentence("litigation and lawsuits pending")
    sal = make_salience([1.0, 0.0, 1.0, 0.5])
    uni = match_unigrams(s, taxonomy)
    ev = accumulate_evidence(s, sal, [0, 1, 2, 3], uni, [], {}, taxonomy, LabelerConfig())
    lit = taxonomy.subcategory_names.index("litigation")
    for i, score in enumerate(ev.sub_scores):
        if i != lit:
            assert score == 0.0
    assert ev.sub_scores[lit] > 0
