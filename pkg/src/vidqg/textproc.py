"""Deterministic text utilities.

Tokenization, sentence splitting, syllable counting, Flesch reading ease,
question-word extraction, and raw-output classification. All functions are
pure and dependency-free so scores stay reproducible without model servers
or dictionary downloads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyTextError


class OutputClass(str, Enum):
    QUESTION = "question"
    STATEMENT = "statement"
    EMPTY = "empty"


class QuestionWord(str, Enum):
    WHERE = "where"
    WHO = "who"
    WHEN = "when"
    WHAT = "what"
    WHY = "why"
    WHOSE = "whose"
    WHOM = "whom"
    WHICH = "which"
    HOW = "how"
    NONE = "none"


# Word tokens: unicode letter/digit runs joined by internal apostrophes or
# hyphens. Underscore is treated as punctuation, not a word character.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*", re.UNICODE)

_VOWELS = frozenset("aeiouy")

_TERMINATORS = frozenset(".!?")

# Lowercased abbreviations whose trailing period does not end a sentence.
_ABBREVIATIONS = frozenset(
    {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.",
        "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "fig.", "no.",
        "approx.", "dept.",
    }
)

_QUESTION_WORDS = {qw.value: qw for qw in QuestionWord if qw is not QuestionWord.NONE}


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; punctuation stripped except intra-word
    apostrophes and hyphens. Empty input yields an empty list."""
    return _TOKEN_RE.findall(text.lower())


def _ends_abbreviation(text: str, period_idx: int) -> bool:
    j = period_idx
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j : period_idx + 1].lower() in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final '.', '!', '?' followed by whitespace or end
    of text, skipping periods that close a known abbreviation.

    Returned sentences are stripped and never empty; their concatenation
    preserves every non-whitespace character of the input.
    """
    sentences: list[str] = []
    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        if i + 1 < n and not text[i + 1].isspace():
            continue
        if ch == "." and _ends_abbreviation(text, i):
            continue
        piece = text[start : i + 1].strip()
        if piece:
            sentences.append(piece)
        start = i + 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def count_syllables(word: str) -> int:
    """Heuristic syllable count for a single word.

    Each vowel letter (a, e, i, o, u, y) counts as one syllable nucleus; a
    word-final "e" after a consonant is treated as silent and subtracted
    unless that would leave zero. Words without vowels count as one
    syllable. The heuristic over- and under-counts some words (diphthongs,
    "-le" endings); that error is accepted in exchange for determinism.
    """
    w = word.lower()
    count = sum(1 for ch in w if ch in _VOWELS)
    if count > 1 and w.endswith("e") and len(w) >= 2 and w[-2] not in _VOWELS:
        count -= 1
    return max(count, 1)


@dataclass(frozen=True)
class ReadabilityStats:
    words: int
    sentences: int
    syllables: int
    flesch: float


def flesch_score(words: int, sentences: int, syllables: float) -> float:
    """Flesch reading ease: 206.835 - 1.015*(W/S) - 84.6*(Syl/W)."""
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)


def flesch(text: str) -> ReadabilityStats:
    """Readability of a text; raises EmptyTextError when there is nothing
    to measure (no word tokens after trimming)."""
    if not text.strip():
        raise EmptyTextError("flesch requires non-empty text")
    words = tokenize(text)
    if not words:
        raise EmptyTextError("flesch requires at least one word token")
    sentences = max(len(split_sentences(text)), 1)
    syllables = sum(count_syllables(w) for w in words)
    return ReadabilityStats(
        words=len(words),
        sentences=sentences,
        syllables=syllables,
        flesch=flesch_score(len(words), sentences, syllables),
    )


def classify_output(text: str) -> OutputClass:
    """Empty if only whitespace, Question if it contains '?', else Statement."""
    if not text.strip():
        return OutputClass.EMPTY
    if "?" in text:
        return OutputClass.QUESTION
    return OutputClass.STATEMENT


def question_word(text: str) -> QuestionWord:
    """First interrogative token (wh-words and "how"), scanning tokens in
    order; NONE when no listed word occurs."""
    for tok in tokenize(text):
        qw = _QUESTION_WORDS.get(tok)
        if qw is not None:
            return qw
    return QuestionWord.NONE
