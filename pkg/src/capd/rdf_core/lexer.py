"""Tokenizer shared by the Turtle, SPARQL and rule-text readers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List


class RDFSyntaxError(ValueError):
    """Parse failure carrying a 1-based line/column and the offending token."""

    def __init__(self, message: str, line: int = 0, column: int = 0, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        where = f" at line {line}, column {column}" if line else ""
        near = f" near {token!r}" if token else ""
        super().__init__(f"{message}{where}{near}")


class UnknownPrefixError(RDFSyntaxError):
    def __init__(self, prefix: str, line: int = 0, column: int = 0):
        self.prefix = prefix
        super().__init__(f"unknown prefix {prefix!r}", line, column, prefix + ":")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: object = None


PN_LOCAL = r"(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?"
PN_PREFIX = r"(?:[A-Za-z](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?"

_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r"<(?:[^<>\"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>"),
    ("DIRECTIVE", r"@(?:prefix|base)\b"),
    ("LANGTAG", r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"),
    ("STRING", r"\"(?:[^\"\\\n\r]|\\.)*\"|'(?:[^'\\\n\r]|\\.)*'"),
    ("DTYPE", r"\^\^"),
    ("BNODE", r"_:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?"),
    ("VAR", r"[?$][A-Za-z_][A-Za-z0-9_]*"),
    ("DOUBLE", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+)"),
    ("DECIMAL", r"[+-]?\d*\.\d+"),
    ("INTEGER", r"[+-]?\d+"),
    ("PNAME", PN_PREFIX + ":" + PN_LOCAL),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r">=|<=|!=|&&|\|\||=>|=|<|>"),
    ("ANON", r"\[[ \t\r\n]*\]"),
    ("PUNCT", r"[{}()\[\];,.*]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _SPEC))
_OP_ONLY = re.compile(r"(?P<OP><=|<)")
_IRI_ONLY = re.compile(f"(?P<IRIREF>{dict(_SPEC)['IRIREF']})")
# after these, "<" is a comparison operator rather than the start of an IRI
_OPERAND_END = {"VAR", "INTEGER", "DECIMAL", "DOUBLE"}

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_ESCAPE_RE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)")


def unescape(text: str, line: int = 0, column: int = 0) -> str:
    def repl(m):
        esc = m.group(1)
        if esc[0] in "uU" and len(esc) > 1:
            return chr(int(esc[1:], 16))
        if esc in _ESCAPES:
            return _ESCAPES[esc]
        raise RDFSyntaxError("invalid escape sequence", line, column, "\\" + esc)

    return _ESCAPE_RE.sub(repl, text)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = None
        if text[pos] == "<" and tokens and (tokens[-1].kind in _OPERAND_END or tokens[-1].text == ")"):
            # an absolute IRI (it has a scheme colon) still wins, as in "?s <http://x/p> ?o"
            iri = _IRI_ONLY.match(text, pos)
            m = iri if iri and ":" in iri.group(0) else _OP_ONLY.match(text, pos)
        m = m or _MASTER.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            bad = re.match(r"\S+", text[pos:])
            raise RDFSyntaxError("unexpected character", line, column, bad.group(0) if bad else text[pos])
        kind = m.lastgroup
        chunk = m.group(0)
        if kind not in ("WS", "COMMENT"):
            value = None
            if kind == "STRING":
                value = unescape(chunk[1:-1], line, column)
            elif kind == "IRIREF":
                value = unescape(chunk[1:-1], line, column)
            tokens.append(Token(kind, chunk, line, column, value))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with small expect/accept helpers."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at(self, kind: str, text: str = None, *, nocase: bool = False) -> bool:
        tok = self.peek()
        if tok.kind != kind:
            return False
        if text is None:
            return True
        return tok.text.lower() == text.lower() if nocase else tok.text == text

    def accept(self, kind: str, text: str = None, *, nocase: bool = False):
        if self.at(kind, text, nocase=nocase):
            return self.next()
        return None

    def expect(self, kind: str, text: str = None, *, nocase: bool = False, what: str = None) -> Token:
        tok = self.peek()
        if self.at(kind, text, nocase=nocase):
            return self.next()
        wanted = what or (repr(text) if text else kind)
        raise self.error(f"expected {wanted}", tok)

    def error(self, message: str, tok: Token = None) -> RDFSyntaxError:
        tok = tok or self.peek()
        return RDFSyntaxError(message, tok.line, tok.column, tok.text or "<end of input>")
