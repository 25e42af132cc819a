"""Keyword scan vs a brute-force positional oracle, plus the LLM classifier."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from odrmediator.detection import (
    DetectionStrategy,
    Lexicon,
    LexiconEntry,
    LexiconParseError,
    MatchMode,
    load_lexicon,
    manual_request,
    classify_with_llm,
    scan_keywords,
)
from odrmediator.providers import ScriptedProvider, ScriptEntry


def _fold(text: str) -> str:
    return "".join(c.casefold()[0] for c in text)


def brute_force_scan(body: str, lexicon: Lexicon) -> list[tuple[str, int]]:
    """Independent oracle: try every pattern at every character position."""
    folded_body = _fold(body)
    matches = []
    for entry in lexicon.entries:
        folded_pattern = _fold(entry.pattern)
        length = len(folded_pattern)
        for i in range(len(folded_body) - length + 1):
            if folded_body[i : i + length] != folded_pattern:
                continue
            if entry.match_mode is MatchMode.WORD_BOUNDARY:
                if i > 0 and body[i - 1].isalnum():
                    continue
                if i + length < len(body) and body[i + length].isalnum():
                    continue
            matches.append((entry.pattern, i))
    return sorted(matches, key=lambda m: (m[1], m[0]))


WORDS = ["fix", "it", "now", "you", "me", "idiot", "a**hole", "leak", "IDIOT", "water", "*"]

pattern_strategy = st.text(
    alphabet=st.sampled_from(list("abcdef *!?")), min_size=1, max_size=8
).filter(lambda s: s.strip())

body_strategy = st.text(
    alphabet=st.sampled_from(list("abcdef ghij *!?.xyz")), min_size=0, max_size=120
)


class TestScanKeywords:
    def test_masked_profanity_match_with_offset(self):
        body = (
            "What the ****? I told you about the water leak weeks ago and you "
            "did nothing! Fix it or I will see you in court!"
        )
        lexicon = Lexicon((LexiconEntry("****", MatchMode.SUBSTRING),))
        result = scan_keywords(body, lexicon)
        assert result.flagged
        assert result.matched_terms == (("****", 9),)
        assert result.strategy is DetectionStrategy.KEYWORD_SCAN

    def test_clean_message_not_flagged(self):
        lexicon = Lexicon.from_terms("idiot", "scam")
        result = scan_keywords("Thank you for the update.", lexicon)
        assert not result.flagged
        assert result.matched_terms == ()

    def test_empty_lexicon_never_flags(self):
        result = scan_keywords("you idiot", Lexicon())
        assert not result.flagged

    def test_case_insensitive(self):
        lexicon = Lexicon.from_terms("idiot")
        assert scan_keywords("You IDIOT!", lexicon).flagged
        assert scan_keywords("You IdIoT!", lexicon).flagged

    def test_word_boundary_blocks_inner_matches(self):
        lexicon = Lexicon.from_terms("rude")
        assert not scan_keywords("the prudent choice", lexicon).flagged
        assert scan_keywords("that was rude.", lexicon).flagged

    def test_substring_mode_matches_inside_words(self):
        lexicon = Lexicon((LexiconEntry("rude", MatchMode.SUBSTRING),))
        result = scan_keywords("the prudent choice", lexicon)
        assert result.flagged
        assert result.matched_terms == (("rude", 5),)

    def test_overlapping_occurrences_all_reported(self):
        lexicon = Lexicon((LexiconEntry("**", MatchMode.SUBSTRING),))
        result = scan_keywords("a****b", lexicon)
        assert [offset for _, offset in result.matched_terms] == [1, 2, 3]

    def test_offsets_are_character_positions(self):
        lexicon = Lexicon.from_terms("idiot")
        result = scan_keywords("héllo, idiot", lexicon)
        assert result.matched_terms == (("idiot", 7),)

    def test_star_is_a_literal_character(self):
        lexicon = Lexicon.from_terms("a**hole")
        assert scan_keywords("you a**hole!", lexicon).matched_terms == (("a**hole", 4),)
        assert not scan_keywords("you asshole!", lexicon).flagged

    def test_randomized_corpus_equals_oracle(self):
        rng = random.Random(20240811)
        for _ in range(50):
            body = " ".join(rng.choices(WORDS, k=rng.randint(0, 25)))
            entries = tuple(
                LexiconEntry(
                    rng.choice(WORDS),
                    rng.choice((MatchMode.WORD_BOUNDARY, MatchMode.SUBSTRING)),
                )
                for _ in range(rng.randint(0, 6))
            )
            lexicon = Lexicon(entries)
            result = scan_keywords(body, lexicon)
            assert list(result.matched_terms) == brute_force_scan(body, lexicon)
            assert result.flagged == bool(result.matched_terms)

    @settings(max_examples=300)
    @given(
        body_strategy,
        st.lists(
            st.tuples(pattern_strategy, st.sampled_from(list(MatchMode))), max_size=5
        ),
    )
    def test_property_equals_oracle(self, body, raw_entries):
        lexicon = Lexicon(tuple(LexiconEntry(p, m) for p, m in raw_entries))
        result = scan_keywords(body, lexicon)
        assert list(result.matched_terms) == brute_force_scan(body, lexicon)

    @settings(max_examples=150)
    @given(body_strategy, pattern_strategy, pattern_strategy)
    def test_monotonicity_adding_terms_never_unflags(self, body, first, second):
        small = Lexicon((LexiconEntry(first, MatchMode.SUBSTRING),))
        grown = Lexicon(
            (LexiconEntry(first, MatchMode.SUBSTRING), LexiconEntry(second, MatchMode.SUBSTRING))
        )
        if scan_keywords(body, small).flagged:
            assert scan_keywords(body, grown).flagged

    def test_determinism(self):
        lexicon = Lexicon.from_terms("idiot", "scam")
        body = "this scam, you idiot"
        assert scan_keywords(body, lexicon) == scan_keywords(body, lexicon)


class TestManualRequest:
    def test_always_flagged_without_matches(self):
        result = manual_request()
        assert result.flagged
        assert result.matched_terms == ()
        assert result.strategy is DetectionStrategy.MANUAL_REQUEST


class TestClassifyWithLlm:
    def _provider(self, answer: str) -> ScriptedProvider:
        return ScriptedProvider([ScriptEntry(None, answer)])

    def test_yes_flags(self):
        result = classify_with_llm("whatever", self._provider("YES"))
        assert result.flagged
        assert result.strategy is DetectionStrategy.LLM_CLASSIFIER

    def test_no_does_not_flag(self):
        assert not classify_with_llm("whatever", self._provider("NO")).flagged

    def test_case_and_whitespace_folded(self):
        assert classify_with_llm("x", self._provider("  yes  ")).flagged
        assert not classify_with_llm("x", self._provider("No")).flagged

    def test_unparseable_answer_logged_and_unflagged(self, caplog):
        with caplog.at_level("WARNING", logger="odrmediator.detection"):
            result = classify_with_llm("x", self._provider("maybe"))
        assert not result.flagged
        assert any("unparseable" in r.message for r in caplog.records)


class TestLexiconFile:
    def test_load_with_comments_blanks_and_modes(self, tmp_path):
        path = tmp_path / "lexicon.txt"
        path.write_text(
            "# comment line\n"
            "\n"
            "idiot\n"
            "****\tsubstring\n"
            "see you in court\t substring\n",
            encoding="utf-8",
        )
        lexicon = load_lexicon(path)
        assert lexicon.entries == (
            LexiconEntry("idiot", MatchMode.WORD_BOUNDARY),
            LexiconEntry("****", MatchMode.SUBSTRING),
            LexiconEntry("see you in court", MatchMode.SUBSTRING),
        )

    def test_unknown_mode_reports_line(self, tmp_path):
        path = tmp_path / "lexicon.txt"
        path.write_text("fine\nbad\tfuzzy\n", encoding="utf-8")
        with pytest.raises(LexiconParseError) as exc_info:
            load_lexicon(path)
        assert exc_info.value.line == 2

    def test_empty_pattern_rejected(self):
        with pytest.raises(ValueError):
            LexiconEntry("   ")
