"""Tokenizer for scenario sources.

Token classes: the ME marker, quoted terms ('...'), quoted alternatives
('A | B'), bracket terms ([...]), section headers, plain words, and
punctuation.  Quoted and bracketed content may wrap across lines; inner
whitespace is normalized to single spaces.  Every token and diagnostic
carries a 1-based line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ME = "ME"
QUOTED = "QUOTED"
QUOTED_ALT = "QUOTED_ALT"
BRACKET = "BRACKET"
HEADER = "HEADER"
WORD = "WORD"
PUNCT = "PUNCT"

HEADERS = ("Synopsis", "Scenario", "Explicate")

_WORD_RE = re.compile(r"[A-Za-z0-9_]+")
_ALT_RE = re.compile(r"^\S+(?:\s*\|\s*\S+)+$")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def parts(self) -> tuple[str, ...]:
        """Alternative members of a QUOTED_ALT token."""
        return tuple(p.strip() for p in self.text.split("|"))


@dataclass(frozen=True, slots=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    col: int

    def format(self, origin: str = "<scenario>") -> str:
        return f"{origin}:{self.line}:{self.col}: {self.severity}: {self.message}"


def _normalize(text: str) -> str:
    return " ".join(text.split())


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def take_until(self, closer: str) -> str | None:
        """Consume up to and including ``closer``; None when it never comes."""
        start = self.pos
        while self.pos < len(self.text):
            if self.text[self.pos] == closer:
                content = self.text[start:self.pos]
                self.advance()
                return content
            self.advance()
        return None


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    """Scan a source into tokens; problems come back as diagnostics.

    Never raises on any input string: malformed input produces error
    diagnostics, and the tokens scanned before the problem are kept.
    """
    diagnostics: list[Diagnostic] = []
    if not text.strip():
        diagnostics.append(Diagnostic("error", "empty source", 1, 1))
        return [], diagnostics

    tokens: list[Token] = []
    s = _Scanner(text)
    while s.pos < len(s.text):
        ch = s.peek()
        line, col = s.line, s.col
        if ch in " \t\r\n":
            s.advance()
            continue
        if ch == "'":
            s.advance()
            content = s.take_until("'")
            if content is None:
                diagnostics.append(Diagnostic("error", "unterminated quoted term", line, col))
                break
            normalized = _normalize(content)
            kind = QUOTED_ALT if _ALT_RE.match(normalized) else QUOTED
            tokens.append(Token(kind, normalized, line, col))
            continue
        if ch == "[":
            s.advance()
            content = s.take_until("]")
            if content is None:
                diagnostics.append(Diagnostic("error", "unterminated bracket term", line, col))
                break
            tokens.append(Token(BRACKET, _normalize(content), line, col))
            continue
        m = _WORD_RE.match(s.text, s.pos)
        if m:
            word = m.group(0)
            for _ in word:
                s.advance()
            if word in HEADERS and col == 1 and s.peek() == ":":
                s.advance()
                tokens.append(Token(HEADER, word, line, col))
            elif word == "ME":
                tokens.append(Token(ME, word, line, col))
            else:
                tokens.append(Token(WORD, word, line, col))
            continue
        s.advance()
        tokens.append(Token(PUNCT, ch, line, col))
    return tokens, diagnostics
