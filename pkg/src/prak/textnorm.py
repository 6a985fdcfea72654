"""Transcript cleanup and exception-rule expansion.

Cleanup copes with the encoding mess real transcript files arrive with:
byte-order marks, CRLF endings, decomposed accents.  The output is a flat
list of lowercase words ready for pronunciation rules, with the byte span
each word came from kept for error reporting.

Exception rules rewrite words whose spelling does not follow Czech reading
rules (foreign names mostly).  A rule maps a letter pattern to one or more
replacement spellings; matching is longest-first and the text a replacement
produced is never matched again, only the leftover prefix and suffix are.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import TextError


@dataclass(frozen=True)
class CleanText:
    words: tuple[str, ...]
    provenance: tuple[tuple[int, int], ...]  # byte span of each word's source token


def clean_text(raw: bytes | str) -> CleanText:
    """Decode, normalize and tokenize a raw transcript.

    Accepts UTF-8 bytes (a BOM is tolerated) or an already decoded string.
    Words are lowercased and NFC-normalized, punctuation is dropped except
    that hyphens split a token in two.  Digits are refused: numbers have too
    many Czech readings to guess, the transcript must spell them out.
    """
    if isinstance(raw, str):
        raw = raw.encode("utf-8")
    if raw.startswith(b"\xef\xbb\xbf"):
        base = 3
        raw = raw[3:]
    else:
        base = 0
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TextError(f"transcript is not valid UTF-8 at byte {base + e.start}") from None

    words: list[str] = []
    spans: list[tuple[int, int]] = []
    byte_pos = base
    char_pos = 0
    for token in text.split():
        start_char = text.index(token, char_pos)
        byte_pos += len(text[char_pos:start_char].encode("utf-8"))
        token_bytes = len(token.encode("utf-8"))
        span = (byte_pos, byte_pos + token_bytes)
        byte_pos += token_bytes
        char_pos = start_char + len(token)

        cleaned = unicodedata.normalize("NFC", token).lower()
        for ch in cleaned:
            if unicodedata.category(ch) == "Nd":
                raise TextError(
                    f"digit {ch!r} in token {token!r}: spell numbers out in words"
                )
        parts = [[]]
        for ch in cleaned:
            cat = unicodedata.category(ch)
            if cat == "Pd":
                parts.append([])  # hyphen splits the word
            elif cat[0] in "PS":
                continue
            else:
                parts[-1].append(ch)
        for part in parts:
            if part:
                words.append("".join(part))
                spans.append(span)
    return CleanText(words=tuple(words), provenance=tuple(spans))


@dataclass(frozen=True)
class ExceptionRule:
    pattern: str
    replacements: tuple[str, ...]
    order: int


class ExceptionRuleSet:
    """Ordered spelling rules loaded from a plain text file.

    File format: one rule per line, whitespace separated; the first field is
    the pattern, the rest are its replacements.  Blank lines and lines
    starting with # are skipped.  Patterns and replacements are normalized
    the same way transcripts are, so the file can be written naturally.
    """

    def __init__(self, rules: list[ExceptionRule]):
        self.rules = tuple(rules)
        # longest pattern first; file order breaks ties within a length
        self._by_length = sorted(rules, key=lambda r: (-len(r.pattern), r.order))

    @classmethod
    def empty(cls) -> "ExceptionRuleSet":
        return cls([])

    @classmethod
    def from_file(cls, path: str | Path) -> "ExceptionRuleSet":
        rules = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [unicodedata.normalize("NFC", f).lower() for f in line.split()]
            if len(fields) < 2:
                raise TextError(f"{path}:{lineno}: rule needs a pattern and one replacement")
            rules.append(ExceptionRule(fields[0], tuple(fields[1:]), len(rules)))
        return cls(rules)

    def find(self, word: str) -> tuple[ExceptionRule, int] | None:
        """Best match in a word: longest pattern, then leftmost, then file order."""
        best: tuple[int, int, ExceptionRule] | None = None
        best_len = -1
        for rule in self._by_length:
            if best is not None and len(rule.pattern) < best_len:
                break
            pos = word.find(rule.pattern)
            if pos < 0:
                continue
            key = (pos, rule.order)
            if best is None or key < best[:2]:
                best = (pos, rule.order, rule)
                best_len = len(rule.pattern)
        if best is None:
            return None
        return best[2], best[0]


def apply_exceptions(word: str, rules: ExceptionRuleSet) -> list[str]:
    """Expand one word into its spelling variants.

    The best match is replaced by each of the rule's replacements; the
    prefix and suffix around it are expanded recursively.  A word no rule
    touches comes back as itself.  Order is deterministic: prefix variants
    cycle slowest, replacement alternatives fastest, so the all-first-choice
    spelling is always first.
    """
    hit = rules.find(word)
    if hit is None:
        return [word]
    rule, pos = hit
    prefix = word[:pos]
    suffix = word[pos + len(rule.pattern):]
    out: list[str] = []
    for p in apply_exceptions(prefix, rules) if prefix else [""]:
        for s in apply_exceptions(suffix, rules) if suffix else [""]:
            for r in rule.replacements:
                cand = p + r + s
                if cand not in out:
                    out.append(cand)
    return out
