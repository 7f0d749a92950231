"""Tokenizing and light morphological normalization of terms."""

from __future__ import annotations

import re

_WORD_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lower-cased word tokens; punctuation and underscores separate words."""
    return _WORD_RE.findall(text.lower())


def singular(word: str) -> str:
    """Crude English plural stripping, enough to match "pictures" to "picture"."""
    if len(word) > 4 and word.endswith("ies"):
        return word[:-3] + "y"
    if word.endswith(("sses", "ches", "shes", "xes", "zzes")):
        return word[:-2]
    if len(word) > 3 and word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def normalize(text: str) -> tuple[str, ...]:
    return tuple(singular(t) for t in tokenize(text))


def contains_run(haystack: tuple[str, ...], needle: tuple[str, ...]) -> int:
    """Index of the first occurrence of ``needle`` as a contiguous run, or -1."""
    n = len(needle)
    if n == 0:
        return -1
    for i in range(len(haystack) - n + 1):
        if haystack[i:i + n] == needle:
            return i
    return -1
