"""Inflammatory-message detection.

Decides whether a draft warrants a reformulation suggestion. Ships two
strategies: a case-insensitive keyword scan against a configurable
lexicon, and an optional single-word YES/NO classifier that asks the
completion provider (off by default). A third strategy value covers the
manual "reformulate this for me" request, which always counts as
flagged. ML sentiment models are deliberately only an enum seam.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .prompting import build_classifier_prompt
from .providers import CompletionProvider

logger = logging.getLogger(__name__)


class LexiconParseError(Exception):
    """A lexicon file line could not be parsed."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


class MatchMode(str, Enum):
    WORD_BOUNDARY = "word_boundary"
    SUBSTRING = "substring"


class DetectionStrategy(str, Enum):
    KEYWORD_SCAN = "keyword_scan"
    MANUAL_REQUEST = "manual_request"
    LLM_CLASSIFIER = "llm_classifier"
    # Seam for future trained classifiers; nothing ships behind it.
    SENTIMENT_MODEL = "sentiment_model"


@dataclass(frozen=True)
class LexiconEntry:
    """One term pattern. '*' is an ordinary character: users type masked
    profanity ("a**hole", "****") and the scan must match it literally."""

    pattern: str
    match_mode: MatchMode = MatchMode.WORD_BOUNDARY

    def __post_init__(self) -> None:
        if not self.pattern.strip():
            raise ValueError("lexicon pattern must be non-empty after trimming")


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[LexiconEntry, ...] = ()

    @classmethod
    def from_terms(cls, *terms: str, match_mode: MatchMode = MatchMode.WORD_BOUNDARY) -> "Lexicon":
        return cls(tuple(LexiconEntry(t, match_mode) for t in terms))


EMPTY_LEXICON = Lexicon()


@dataclass(frozen=True)
class DetectionResult:
    flagged: bool
    matched_terms: tuple[tuple[str, int], ...]  # (pattern, character offset)
    strategy: DetectionStrategy


def _fold(text: str) -> str:
    """Length-preserving lowercase so match offsets stay aligned to the input.

    Per-character casefold, truncated to the first character for the rare
    code points whose casefold expands (multilingual lexicons are a
    non-goal).
    """
    return "".join(c.casefold()[0] for c in text)


def _boundary_ok(body: str, start: int, end: int) -> bool:
    """True when body[start:end] touches only non-alphanumerics or edges."""
    before_ok = start == 0 or not body[start - 1].isalnum()
    after_ok = end == len(body) or not body[end].isalnum()
    return before_ok and after_ok


def scan_keywords(body: str, lexicon: Lexicon) -> DetectionResult:
    """Scan a message for lexicon terms; flagged on at least one match.

    Matching is case-insensitive; offsets are character (not byte)
    positions into the original body. Overlapping occurrences are all
    reported. WordBoundary entries match only where the adjacent
    characters are non-alphanumeric or the string edges.
    """
    folded_body = _fold(body)
    matches: list[tuple[str, int]] = []
    for entry in lexicon.entries:
        folded_pattern = _fold(entry.pattern)
        start = 0
        while True:
            index = folded_body.find(folded_pattern, start)
            if index < 0:
                break
            end = index + len(folded_pattern)
            if entry.match_mode is MatchMode.SUBSTRING or _boundary_ok(body, index, end):
                matches.append((entry.pattern, index))
            start = index + 1  # advance one character so overlaps are found
    matches.sort(key=lambda m: (m[1], m[0]))
    return DetectionResult(
        flagged=bool(matches),
        matched_terms=tuple(matches),
        strategy=DetectionStrategy.KEYWORD_SCAN,
    )


def manual_request() -> DetectionResult:
    """The user asked for a reformulation themselves; always flagged."""
    return DetectionResult(True, (), DetectionStrategy.MANUAL_REQUEST)


def classify_with_llm(body: str, provider: CompletionProvider) -> DetectionResult:
    """Ask the provider whether the message is inflammatory.

    Expects a single-token YES/NO answer. Anything else is unparseable:
    logged as a warning and treated as not flagged. Provider errors
    propagate to the caller.
    """
    bundle = build_classifier_prompt(body)
    result = provider.complete(bundle)
    answer = result.text.strip().casefold()
    if answer == "yes":
        flagged = True
    elif answer == "no":
        flagged = False
    else:
        logger.warning("unparseable classifier answer %r; treating as not flagged", result.text)
        flagged = False
    return DetectionResult(flagged, (), DetectionStrategy.LLM_CLASSIFIER)


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon file: UTF-8, one pattern per line.

    Lines beginning with '#' are comments and blank lines are skipped.
    A tab-separated "substring" suffix selects Substring mode; the
    default is WordBoundary.
    """
    entries: list[LexiconEntry] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        pattern, _, mode_field = line.partition("\t")
        pattern = pattern.strip()
        if not pattern:
            raise LexiconParseError("empty pattern before tab", line_no)
        mode_name = mode_field.strip().casefold()
        if not mode_name:
            mode = MatchMode.WORD_BOUNDARY
        elif mode_name == "substring":
            mode = MatchMode.SUBSTRING
        else:
            raise LexiconParseError(f"unknown match mode {mode_name!r}", line_no)
        entries.append(LexiconEntry(pattern, mode))
    return Lexicon(tuple(entries))
