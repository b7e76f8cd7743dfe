"""Token-level text measures used by the reference feature set."""
from __future__ import annotations

import re
from functools import lru_cache

_TOKEN_RE = re.compile(r"[\w']+")

# Characters counted as wiki markup.
MARKUP_CHARS = "[]{}|=*#<>"


def tokenize(text: str) -> list[str]:
    """Split on whitespace/punctuation and lowercase every token."""
    return _TOKEN_RE.findall(text.lower())


@lru_cache(maxsize=256)
def _compiled(entries: tuple[str, ...]):
    patterns = []
    for entry in entries:
        try:
            patterns.append(re.compile(entry, re.IGNORECASE))
        except re.error:
            patterns.append(re.compile(re.escape(entry), re.IGNORECASE))
    return patterns


def lexicon_match_count(text: str, lexicon) -> int:
    """Count tokens that fully match any lexicon entry.

    Entries are matched whole-token and case-insensitively; regex-style
    entries (e.g. ``"haha+"``) are allowed.
    """
    entries = tuple(lexicon)
    if not entries or not text:
        return 0
    patterns = _compiled(entries)
    count = 0
    for token in tokenize(text):
        if any(p.fullmatch(token) for p in patterns):
            count += 1
    return count


def informal_word_count(text: str, lexicon) -> int:
    """Count whole-token matches of a per-context informal-word list."""
    return lexicon_match_count(text, lexicon)


def count_markup_chars(text: str) -> int:
    return sum(1 for ch in text if ch in MARKUP_CHARS)
