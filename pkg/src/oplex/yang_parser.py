"""Lexer and parser for YANG source text (RFC 7950 generic statement grammar).

Every YANG construct follows one shape: ``keyword [argument] (";" | "{"
substatements "}")``.  The parser implements exactly that shape and nothing
more, so files using vendor extension keywords parse as opaque statement
trees instead of failing.  Semantic resolution (imports, groupings,
augments) happens later in :mod:`oplex.schema`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .errors import SourceError

_IDENTIFIER = r"[_A-Za-z][._\-A-Za-z0-9]*"
_RE_KEYWORD = re.compile(rf"^(?:{_IDENTIFIER}:)?{_IDENTIFIER}$")

# Characters that terminate an unquoted string.
_WORD_TERMINATORS = frozenset(" \t\r\n;{}\"'")

# Width of a tab character when trimming leading indentation inside
# double-quoted strings (RFC 7950 counts a tab as 8 characters there).
# Everywhere else a tab advances the column counter by one.
_TAB_TRIM_WIDTH = 8

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class YangSyntaxError(SourceError):
    """Base class for lexical and grammatical errors in YANG input."""


class UnterminatedString(YangSyntaxError):
    """A quoted string is never closed."""


class UnterminatedComment(YangSyntaxError):
    """A block comment is never closed."""


class InvalidEscape(YangSyntaxError):
    """A double-quoted string contains an unknown backslash escape."""


class UnexpectedToken(YangSyntaxError):
    """The token stream violates the statement grammar."""


class MultipleRoots(YangSyntaxError):
    """More than one top-level statement in a single file."""


class EmptyInput(YangSyntaxError):
    """The file contains no statements at all."""


class TokenKind(enum.Enum):
    STRING = "keyword-or-string"
    LEFT_BRACE = "left-brace"
    RIGHT_BRACE = "right-brace"
    SEMICOLON = "semicolon"
    PLUS = "plus"


@dataclass(frozen=True)
class Token:
    """One lexical token with its source position (1-based line/column)."""

    kind: TokenKind
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class RawStatement:
    """A parsed YANG statement before any semantic resolution.

    ``keyword`` may carry an extension prefix (``ext:annotation``).
    ``children`` preserve source order.
    """

    keyword: str
    argument: str | None
    children: tuple["RawStatement", ...] = ()
    source: tuple[str, int] = ("<string>", 0)

    def find(self, keyword: str) -> "RawStatement | None":
        """Return the first child with the given keyword, if any."""
        for child in self.children:
            if child.keyword == keyword:
                return child
        return None

    def find_all(self, keyword: str) -> list["RawStatement"]:
        """Return all children with the given keyword, in source order."""
        return [c for c in self.children if c.keyword == keyword]

    def arg_of(self, keyword: str, default: str | None = None) -> str | None:
        """Return the argument of the first child with the given keyword."""
        child = self.find(keyword)
        return child.argument if child is not None else default


class _Scanner:
    """Character-level scanner with line/column tracking.

    Tabs advance the column by one; deterministic positions matter more
    than visual alignment for diagnostics.
    """

    def __init__(self, source: str, file_name: str) -> None:
        # A UTF-8 BOM decoded into the text is insignificant.
        self.text = source.removeprefix("\ufeff")
        self.file = file_name
        self.pos = 0
        self.line = 1
        self.column = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        return ch

    def error(self, cls: type[YangSyntaxError], message: str,
              line: int | None = None, column: int | None = None) -> YangSyntaxError:
        return cls(message, self.file,
                   self.line if line is None else line,
                   self.column if column is None else column)


def tokenize(source: str, file_name: str = "<string>") -> list[Token]:
    """Split YANG source text into tokens.

    Comments and insignificant whitespace are dropped.  Double-quoted
    strings come out fully processed: multi-line indentation trimmed per
    RFC 7950 section 6.1.3, escape sequences resolved.  Single-quoted
    strings are taken literally.  Adjacent quoted strings joined by ``+``
    are concatenated into a single token.

    Raises:
        UnterminatedString: a quote is never closed.
        UnterminatedComment: a ``/*`` comment is never closed.
        InvalidEscape: a double-quoted string uses an unknown escape.
    """
    sc = _Scanner(source, file_name)
    tokens: list[Token] = []
    while True:
        _skip_insignificant(sc)
        if sc.eof():
            break
        ch = sc.peek()
        line, column = sc.line, sc.column
        if ch == "{":
            sc.advance()
            tokens.append(Token(TokenKind.LEFT_BRACE, "{", line, column))
        elif ch == "}":
            sc.advance()
            tokens.append(Token(TokenKind.RIGHT_BRACE, "}", line, column))
        elif ch == ";":
            sc.advance()
            tokens.append(Token(TokenKind.SEMICOLON, ";", line, column))
        elif ch in "\"'":
            tokens.extend(_scan_string_sequence(sc))
        else:
            word = _scan_word(sc)
            kind = TokenKind.PLUS if word == "+" else TokenKind.STRING
            tokens.append(Token(kind, word, line, column))
    return tokens


def _skip_insignificant(sc: _Scanner) -> None:
    """Consume whitespace and comments."""
    while not sc.eof():
        ch = sc.peek()
        if ch in " \t\r\n":
            sc.advance()
        elif ch == "/" and sc.peek(1) == "/":
            while not sc.eof() and sc.peek() != "\n":
                sc.advance()
        elif ch == "/" and sc.peek(1) == "*":
            line, column = sc.line, sc.column
            sc.advance()
            sc.advance()
            while True:
                if sc.eof():
                    raise sc.error(UnterminatedComment,
                                   "block comment is never closed",
                                   line, column)
                if sc.peek() == "*" and sc.peek(1) == "/":
                    sc.advance()
                    sc.advance()
                    break
                sc.advance()
        else:
            return


def _scan_word(sc: _Scanner) -> str:
    """Consume an unquoted string (keyword, identifier, number, path...)."""
    chars: list[str] = []
    while not sc.eof():
        ch = sc.peek()
        if ch in _WORD_TERMINATORS:
            break
        if ch == "/" and sc.peek(1) in "/*":
            break
        chars.append(sc.advance())
    return "".join(chars)


def _scan_string_sequence(sc: _Scanner) -> list[Token]:
    """Consume a quoted string and any ``+``-joined continuations.

    Returns a single STRING token for the concatenated value.  A ``+``
    that is not followed by another quoted string is emitted as its own
    token; the parser rejects it with a precise location.
    """
    line, column = sc.line, sc.column
    parts = [_scan_quoted(sc)]
    extra: list[Token] = []
    while True:
        mark = sc.pos, sc.line, sc.column
        _skip_insignificant(sc)
        if sc.peek() != "+":
            sc.pos, sc.line, sc.column = mark
            break
        plus_line, plus_column = sc.line, sc.column
        sc.advance()
        _skip_insignificant(sc)
        if sc.peek() in "\"'":
            parts.append(_scan_quoted(sc))
        else:
            # Lone "+": not a concatenation, surface it for the parser.
            extra.append(Token(TokenKind.PLUS, "+", plus_line, plus_column))
            break
    return [Token(TokenKind.STRING, "".join(parts), line, column)] + extra


def _scan_quoted(sc: _Scanner) -> str:
    quote = sc.peek()
    if quote == "'":
        return _scan_single_quoted(sc)
    return _scan_double_quoted(sc)


def _scan_single_quoted(sc: _Scanner) -> str:
    """Single quotes: every character literal, no escapes, no trimming."""
    line, column = sc.line, sc.column
    sc.advance()
    chars: list[str] = []
    while True:
        if sc.eof():
            raise sc.error(UnterminatedString,
                           "single-quoted string is never closed", line, column)
        ch = sc.advance()
        if ch == "'":
            return "".join(chars)
        chars.append(ch)


def _scan_double_quoted(sc: _Scanner) -> str:
    """Double quotes: RFC 7950 indentation trimming, then escape resolution.

    Trimming strips, from every line after the first, leading whitespace up
    to the column of the opening quote (tab counted as 8) or the first
    non-whitespace character, and drops trailing whitespace before each
    line break.  Escapes are resolved afterwards, as the RFC requires.
    """
    open_line, open_column = sc.line, sc.column
    sc.advance()
    raw: list[str] = []
    while True:
        if sc.eof():
            raise sc.error(UnterminatedString,
                           "double-quoted string is never closed",
                           open_line, open_column)
        ch = sc.advance()
        if ch == '"':
            break
        if ch == "\\":
            if sc.eof():
                raise sc.error(UnterminatedString,
                               "double-quoted string is never closed",
                               open_line, open_column)
            raw.append(ch)
            raw.append(sc.advance())
        else:
            raw.append(ch)
    trimmed_lines = _trim_indentation("".join(raw), open_column)
    out: list[str] = []
    for index, text in enumerate(trimmed_lines):
        out.append(_resolve_escapes(sc.file, text, open_line + index,
                                    open_column + 1 if index == 0 else 1))
    return "\n".join(out)


def _trim_indentation(raw: str, quote_column: int) -> list[str]:
    lines = raw.split("\n")
    if len(lines) == 1:
        return lines
    result = [lines[0].rstrip(" \t")]
    for text in lines[1:-1]:
        result.append(_strip_leading(text, quote_column).rstrip(" \t"))
    result.append(_strip_leading(lines[-1], quote_column))
    return result


def _strip_leading(text: str, quote_column: int) -> str:
    width = 0
    i = 0
    while i < len(text) and width < quote_column:
        ch = text[i]
        if ch == " ":
            width += 1
        elif ch == "\t":
            if width + _TAB_TRIM_WIDTH > quote_column:
                break
            width += _TAB_TRIM_WIDTH
        else:
            break
        i += 1
    return text[i:]


def _resolve_escapes(file_name: str, text: str, line: int, column: int) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        escape = text[i + 1] if i + 1 < len(text) else ""
        if escape not in _ESCAPES:
            raise InvalidEscape(f"unknown escape sequence '\\{escape}'",
                                file_name, line, column + i)
        out.append(_ESCAPES[escape])
        i += 2
    return "".join(out)


class _Parser:
    def __init__(self, tokens: list[Token], file_name: str) -> None:
        self.tokens = tokens
        self.file = file_name
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Token:
        token = self.peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else None
            raise UnexpectedToken("unexpected end of input", self.file,
                                  last.line if last else 1,
                                  last.column if last else 1)
        self.pos += 1
        return token

    def statement(self) -> RawStatement:
        token = self.take()
        if token.kind is not TokenKind.STRING:
            raise UnexpectedToken(f"expected a statement keyword, got '{token.text}'",
                                  self.file, token.line, token.column)
        if not _RE_KEYWORD.match(token.text):
            raise UnexpectedToken(f"'{token.text}' is not a valid statement keyword",
                                  self.file, token.line, token.column)
        keyword = token.text
        argument: str | None = None
        nxt = self.take()
        if nxt.kind is TokenKind.STRING:
            argument = nxt.text
            nxt = self.take()
        children: list[RawStatement] = []
        if nxt.kind is TokenKind.LEFT_BRACE:
            while True:
                inner = self.peek()
                if inner is None:
                    raise UnexpectedToken("'{' is never closed", self.file,
                                          nxt.line, nxt.column)
                if inner.kind is TokenKind.RIGHT_BRACE:
                    self.take()
                    break
                children.append(self.statement())
        elif nxt.kind is not TokenKind.SEMICOLON:
            raise UnexpectedToken(f"expected ';' or '{{', got '{nxt.text}'",
                                  self.file, nxt.line, nxt.column)
        return RawStatement(keyword, argument, tuple(children),
                            (self.file, token.line))


def parse(tokens: list[Token], file_name: str = "<string>") -> RawStatement:
    """Parse a token stream into the single root statement of a file.

    Raises:
        EmptyInput: no tokens at all.
        MultipleRoots: content after the first top-level statement.
        UnexpectedToken: grammar violation, including a root whose keyword
            is not ``module`` or ``submodule``.
    """
    if not tokens:
        raise EmptyInput("no statements found", file_name, 1, 1)
    parser = _Parser(tokens, file_name)
    first = tokens[0]
    if first.kind is TokenKind.STRING and first.text not in ("module", "submodule"):
        raise UnexpectedToken(
            f"expected 'module' or 'submodule' at file root, got '{first.text}'",
            file_name, first.line, first.column)
    root = parser.statement()
    leftover = parser.peek()
    if leftover is not None:
        raise MultipleRoots("only one module or submodule per file",
                            file_name, leftover.line, leftover.column)
    return root


def parse_text(source: str, file_name: str = "<string>") -> RawStatement:
    """Tokenize and parse in one step."""
    return parse(tokenize(source, file_name), file_name)


def serialize(stmt: RawStatement, indent: int = 0) -> str:
    """Render a statement tree back to canonical YANG text.

    Arguments are always double-quoted with newlines and tabs escaped, so
    re-parsing the output reproduces the tree exactly (the round-trip
    invariant exercised by the test suite).
    """
    pad = "  " * indent
    parts = [pad, stmt.keyword]
    if stmt.argument is not None:
        parts.append(" ")
        parts.append(_quote(stmt.argument))
    if stmt.children:
        parts.append(" {\n")
        for child in stmt.children:
            parts.append(serialize(child, indent + 1))
        parts.append(pad)
        parts.append("}\n")
    else:
        parts.append(";\n")
    return "".join(parts)


def _quote(argument: str) -> str:
    escaped = (argument.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{escaped}"'
