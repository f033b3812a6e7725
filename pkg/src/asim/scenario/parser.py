"""Parser for scenario sources.

The grammar (normative reference in docs/scenario_grammar.md):

* A source is split into Synopsis / Scenario / Explicate sections by
  header lines; headerless input is one bare Scenario.
* The Scenario section splits into sentences at ``.`` ``!`` ``?``.
  A sentence is a statement when it carries a recognized verb (plain or
  quoted: awake, think, search, find, see), when it is the decision
  request ("What is my decision?"), or when it carries the ME marker
  and decision vocabulary (a deliberative decide statement).  Everything
  else is narrative filler.
* Declarations bind inside statements: ``move X`` declares a momentum
  point; a quoted 'facilities' term is followed by the declared senses;
  "<n> objects" declares anonymous objects, "to the <side>" phrases
  attach sides (naming anonymous objects by side), and
  "to the <side> is a <color> <kind>" declares a named object whose
  following quoted terms are attributes.
* Explicate entries start at a quoted or bracket term at the beginning
  of a line; the gloss runs to the next entry.  Every quoted term used
  in the Scenario must have an entry (case-insensitive); quoted
  alternatives must reference declared moves.
* The degrees-of-freedom count is the number of items enumerated by the
  term whose gloss mentions "degrees of freedom".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .lexer import (BRACKET, HEADER, ME, PUNCT, QUOTED, QUOTED_ALT, WORD,
                    Diagnostic, Token, tokenize)

VERBS = ("awake", "think", "search", "find", "see")
DECIDE = "decide"

_SENTENCE_END = {".", "!", "?"}
_SIDES = ("left", "right", "up", "down")
_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}
_OUTPUT_REQUEST = "what is my decision"
_ARTICLES = ("a", "an", "the")


@dataclass(frozen=True, slots=True)
class ScenarioObject:
    id: str
    kind: str | None = None
    color: str | None = None
    side: str | None = None
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Statement:
    verb: str
    text: str
    objects: tuple[ScenarioObject, ...]
    output_request: bool
    line: int
    col: int


@dataclass(frozen=True, slots=True)
class ScenarioAst:
    statements: tuple[Statement, ...]
    objects: tuple[ScenarioObject, ...]
    moves: tuple[str, ...]
    facilities: tuple[str, ...]
    explications: Mapping[str, str]
    degrees_of_freedom: int


def _split_sections(tokens: list[Token]) -> dict[str, list[Token]]:
    sections: dict[str, list[Token]] = {}
    current = None
    headerless: list[Token] = []
    for tok in tokens:
        if tok.kind == HEADER:
            current = tok.text
            sections.setdefault(current, [])
        elif current is None:
            headerless.append(tok)
        else:
            sections[current].append(tok)
    if not sections:
        sections["Scenario"] = headerless
    return sections


def _sentences(tokens: list[Token]) -> list[list[Token]]:
    out: list[list[Token]] = []
    current: list[Token] = []
    for tok in tokens:
        if tok.kind == PUNCT and tok.text in _SENTENCE_END:
            if current:
                out.append(current)
                current = []
        else:
            current.append(tok)
    if current:
        out.append(current)
    return out


def _sentence_text(sentence: list[Token]) -> str:
    parts = []
    for tok in sentence:
        if tok.kind == QUOTED or tok.kind == QUOTED_ALT:
            parts.append(f"'{tok.text}'")
        elif tok.kind == BRACKET:
            parts.append(f"[{tok.text}]")
        else:
            parts.append(tok.text)
    return " ".join(parts)


def _find_verb(sentence: list[Token]) -> str | None:
    for tok in sentence:
        if tok.kind in (WORD, QUOTED) and tok.text.casefold() in VERBS:
            return tok.text.casefold()
    return None


def _word_seq(sentence: list[Token]) -> list[str]:
    return [t.text.casefold() for t in sentence if t.kind == WORD]


def _extract_moves(sentence: list[Token]) -> list[str]:
    moves = []
    words = [t for t in sentence if t.kind == WORD]
    for i, tok in enumerate(words[:-1]):
        nxt = words[i + 1].text
        if tok.text.casefold() == "move" and len(nxt) == 1 and nxt.isalpha():
            moves.append(nxt.upper())
    return moves


def _extract_facilities(sentence: list[Token]) -> list[str]:
    out: list[str] = []
    seen_marker = False
    for tok in sentence:
        if tok.kind == QUOTED and tok.text.casefold() == "facilities":
            seen_marker = True
            continue
        if not seen_marker:
            continue
        if tok.kind == WORD:
            if tok.text.casefold() != "and":
                out.append(tok.text.casefold())
        elif tok.kind == PUNCT and tok.text == ",":
            continue
        else:
            break
    return out


def _extract_objects(sentence: list[Token], next_anonymous: int) -> tuple[list[ScenarioObject], int]:
    objects: list[ScenarioObject] = []
    anonymous: list[int] = []  # indexes into objects still lacking a side
    i = 0
    n = len(sentence)

    def word_at(k: int) -> str | None:
        return sentence[k].text.casefold() if k < n and sentence[k].kind == WORD else None

    while i < n:
        w = word_at(i)
        if w in _NUMBER_WORDS and word_at(i + 1) in ("object", "objects"):
            for _ in range(_NUMBER_WORDS[w]):
                next_anonymous += 1
                anonymous.append(len(objects))
                objects.append(ScenarioObject(id=f"object_{next_anonymous}"))
            i += 2
            continue
        if w == "to" and word_at(i + 1) == "the" and word_at(i + 2) in _SIDES:
            side = word_at(i + 2)
            j = i + 3
            if word_at(j) == "is":
                j += 1
                if word_at(j) in _ARTICLES:
                    j += 1
                color, kind = word_at(j), word_at(j + 1)
                if color and kind:
                    attrs = []
                    k = j + 2
                    while k < n and sentence[k].kind == QUOTED:
                        attrs.append(sentence[k].text)
                        k += 1
                    objects.append(ScenarioObject(
                        id=f"{color} {kind}", kind=kind, color=color,
                        side=side, attributes=tuple(attrs)))
                    i = k
                    continue
            if anonymous:
                idx = anonymous.pop(0)
                prev = objects[idx]
                objects[idx] = ScenarioObject(
                    id=side, kind=prev.kind, color=prev.color,
                    side=side, attributes=prev.attributes)
            i += 3
            continue
        i += 1
    return objects, next_anonymous


def _parse_explications(tokens: list[Token]) -> dict[str, str]:
    entries: dict[str, str] = {}
    current_term: str | None = None
    gloss: list[str] = []
    last_line = -1
    for tok in tokens:
        starts_line = tok.line != last_line
        last_line = tok.line
        if starts_line and tok.kind in (QUOTED, QUOTED_ALT, BRACKET):
            if current_term is not None:
                entries[current_term] = " ".join(gloss)
            current_term = tok.text.casefold()
            gloss = []
        elif current_term is not None:
            gloss.append(tok.text)
    if current_term is not None:
        entries[current_term] = " ".join(gloss)
    return entries


def _degrees_of_freedom(explications: Mapping[str, str]) -> int:
    for term, gloss in explications.items():
        if "degrees of freedom" in gloss.casefold():
            items = [p for chunk in term.split(",")
                     for p in chunk.split(" and ")
                     if p.strip()]
            return len(items)
    return 0


def parse(tokens: list[Token]) -> tuple[ScenarioAst | None, list[Diagnostic]]:
    """Build an AST from tokens; errors come back as diagnostics."""
    diagnostics: list[Diagnostic] = []
    sections = _split_sections(tokens)
    if "Scenario" not in sections:
        where = tokens[0] if tokens else None
        diagnostics.append(Diagnostic(
            "error", "missing Scenario section",
            where.line if where else 1, where.col if where else 1))
        return None, diagnostics

    explications = _parse_explications(sections.get("Explicate", []))

    statements: list[Statement] = []
    objects: list[ScenarioObject] = []
    moves: list[str] = []
    facilities: list[str] = []
    next_anonymous = 0

    for sentence in _sentences(sections["Scenario"]):
        for tok in sentence:
            if tok.kind in (QUOTED, QUOTED_ALT) and tok.text.casefold() not in explications:
                diagnostics.append(Diagnostic(
                    "error", f"unexplicated term: {tok.text}", tok.line, tok.col))
        words = _word_seq(sentence)
        output_request = " ".join(words) == _OUTPUT_REQUEST
        verb = _find_verb(sentence)
        has_me = any(t.kind == ME for t in sentence)
        if output_request:
            verb = DECIDE
        elif verb is None:
            if has_me and ("decision" in words or "decide" in words):
                verb = DECIDE
            else:
                continue  # narrative filler

        stmt_moves = _extract_moves(sentence)
        for m in stmt_moves:
            if m not in moves:
                moves.append(m)
        for f in _extract_facilities(sentence):
            if f not in facilities:
                facilities.append(f)
        stmt_objects: tuple[ScenarioObject, ...] = ()
        if verb == "see":
            found, next_anonymous = _extract_objects(sentence, next_anonymous)
            stmt_objects = tuple(found)
            objects.extend(found)
        for tok in sentence:
            if tok.kind == QUOTED_ALT:
                for part in tok.parts:
                    if len(part) == 1 and part.isalpha() and part.upper() not in moves and part.upper() not in stmt_moves:
                        diagnostics.append(Diagnostic(
                            "error", f"undeclared move: {part}", tok.line, tok.col))
        statements.append(Statement(
            verb=verb,
            text=_sentence_text(sentence),
            objects=stmt_objects,
            output_request=output_request,
            line=sentence[0].line,
            col=sentence[0].col,
        ))

    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    ast = ScenarioAst(
        statements=tuple(statements),
        objects=tuple(objects),
        moves=tuple(moves),
        facilities=tuple(facilities),
        explications=explications,
        degrees_of_freedom=_degrees_of_freedom(explications),
    )
    return ast, diagnostics


def analyze(text: str) -> tuple[ScenarioAst | None, list[Diagnostic]]:
    """Tokenize and parse a source in one step."""
    tokens, diagnostics = tokenize(text)
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    ast, parse_diags = parse(tokens)
    return ast, diagnostics + parse_diags
