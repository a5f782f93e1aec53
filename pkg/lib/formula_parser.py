from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from lib.errors import DuplicateDeclarationError, FormulaSyntaxError, UndeclaredVariableError
from lib.formula import (
    FALSE,
    TRUE,
    Always,
    And,
    BoolVar,
    Eventually,
    Formula,
    FutEq,
    FutNeq,
    Historically,
    Implies,
    LocalEq,
    Next,
    Not,
    Once,
    Or,
    PastEq,
    PastNeq,
    Prev,
    Release,
    Signature,
    Since,
    Trigger,
    Until,
    WeakNext,
    WeakPrev,
)

GRAMMAR_EXCERPT = """\
(env|sys) (bool|data) name {, name} ;
formula: EXPR
EXPR := true | false | IDENT | eq(VAR, INT, VAR)
      | E+(VAR, VAR; EXPR) | D+(VAR, VAR; EXPR) | E-(VAR, VAR; EXPR) | D-(VAR, VAR; EXPR)
      | ! EXPR | EXPR & EXPR | EXPR | EXPR | EXPR -> EXPR
      | X EXPR | Y EXPR | F EXPR | G EXPR | O EXPR | H EXPR | WX EXPR | WY EXPR
      | EXPR U EXPR | EXPR S EXPR | EXPR R EXPR | EXPR T EXPR
precedence: unary > U,S,R,T > & > | > ->   ('#' starts a comment)"""

_UNARY = {
    "X": Next,
    "Y": Prev,
    "F": Eventually,
    "G": Always,
    "O": Once,
    "H": Historically,
    "WX": WeakNext,
    "WY": WeakPrev,
}
_BINARY = {"U": Until, "S": Since, "R": Release, "T": Trigger}
_OBLIGATIONS = {"E+": FutEq, "D+": FutNeq, "E-": PastEq, "D-": PastNeq}
_RESERVED = set(_UNARY) | set(_BINARY) | {"true", "false", "eq", "formula", "env", "sys", "bool", "data"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<obl>[ED][+-](?=\s*\())
  | (?P<arrow>->)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[(),;:!&|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line=line, col=pos - line_start + 1)
        kind = m.lastgroup or ""
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in {"ws", "comment"}:
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], sig: Signature | None = None) -> None:
        self.tokens = tokens
        self.pos = 0
        self.sig = sig or Signature()

    # -- helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> FormulaSyntaxError:
        t = tok or self.tok
        return FormulaSyntaxError(message, line=t.line, col=t.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in {"punct", "arrow", "ident"}

    # -- declarations

    def parse_document(self) -> tuple[Signature, Formula]:
        groups: dict[tuple[str, str], set[str]] = {
            ("env", "bool"): set(),
            ("sys", "bool"): set(),
            ("env", "data"): set(),
            ("sys", "data"): set(),
        }
        declared: set[str] = set()
        while self.tok.kind == "ident" and self.tok.text in {"env", "sys"}:
            owner = self.advance().text
            kind_tok = self.advance()
            if kind_tok.text not in {"bool", "data"}:
                raise self.error("expected 'bool' or 'data'", kind_tok)
            while True:
                name_tok = self.advance()
                if name_tok.kind != "ident" or name_tok.text in _RESERVED:
                    raise self.error(f"expected a variable name, found {name_tok.text!r}", name_tok)
                if name_tok.text in declared:
                    raise DuplicateDeclarationError(
                        f"duplicate declaration of {name_tok.text!r}", line=name_tok.line, col=name_tok.col
                    )
                declared.add(name_tok.text)
                groups[(owner, kind_tok.text)].add(name_tok.text)
                if self.at(","):
                    self.advance()
                    continue
                self.expect(";")
                break
        self.sig = Signature.of(
            env_bools=groups[("env", "bool")],
            sys_bools=groups[("sys", "bool")],
            env_datas=groups[("env", "data")],
            sys_datas=groups[("sys", "data")],
        )
        self.expect("formula")
        self.expect(":")
        f = self.parse_expression()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after formula")
        return self.sig, f

    # -- expressions

    def parse_expression(self) -> Formula:
        left = self.parse_or()
        if self.tok.kind == "arrow":
            self.advance()
            return Implies(left, self.parse_expression())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.at("|"):
            self.advance()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_temporal()
        while self.at("&"):
            self.advance()
            left = And(left, self.parse_temporal())
        return left

    def parse_temporal(self) -> Formula:
        left = self.parse_unary()
        if self.tok.kind == "ident" and self.tok.text in _BINARY:
            op = _BINARY[self.advance().text]
            return op(left, self.parse_temporal())
        return left

    def parse_unary(self) -> Formula:
        if self.at("!"):
            self.advance()
            return Not(self.parse_unary())
        if self.tok.kind == "ident" and self.tok.text in _UNARY:
            op = _UNARY[self.advance().text]
            return op(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        t = self.tok
        if self.at("("):
            self.advance()
            f = self.parse_expression()
            self.expect(")")
            return f
        if t.kind == "obl":
            self.advance()
            op = _OBLIGATIONS[t.text]
            self.expect("(")
            x = self.data_var()
            self.expect(",")
            y = self.data_var()
            self.expect(";")
            body = self.parse_expression()
            self.expect(")")
            return op(x, y, body)
        if t.kind == "ident":
            if t.text == "true":
                self.advance()
                return TRUE
            if t.text == "false":
                self.advance()
                return FALSE
            if t.text == "eq":
                self.advance()
                self.expect("(")
                x = self.data_var()
                self.expect(",")
                j_tok = self.advance()
                if j_tok.kind != "int":
                    raise self.error(f"expected an integer offset, found {j_tok.text!r}", j_tok)
                self.expect(",")
                y = self.data_var()
                self.expect(")")
                return LocalEq(x, int(j_tok.text), y)
            if t.text in _RESERVED or t.text in _OBLIGATIONS:
                raise self.error(f"malformed operator {t.text!r}")
            self.advance()
            if t.text not in self.sig.names:
                raise UndeclaredVariableError(f"undeclared variable {t.text!r}", line=t.line, col=t.col)
            if t.text not in self.sig.bools:
                raise self.error(f"data variable {t.text!r} used as a boolean", t)
            return BoolVar(t.text)
        found = t.text or "end of input"
        raise self.error(f"expected an expression, found {found!r}")

    def data_var(self) -> str:
        t = self.advance()
        if t.kind != "ident" or t.text in _RESERVED:
            raise self.error(f"expected a data variable, found {t.text!r}", t)
        if t.text not in self.sig.names:
            raise UndeclaredVariableError(f"undeclared variable {t.text!r}", line=t.line, col=t.col)
        if t.text not in self.sig.datas:
            raise self.error(f"boolean variable {t.text!r} used as a data variable", t)
        return t.text


def parse_formula(text: str) -> tuple[Signature, Formula]:
    """Parse a formula file: declarations followed by `formula: EXPR`."""

    return _Parser(tokenize(text)).parse_document()


def parse_expression(text: str, sig: Signature) -> Formula:
    parser = _Parser(tokenize(text), sig)
    f = parser.parse_expression()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected {parser.tok.text!r} after formula")
    return f


def load_formula(path: str | Path) -> tuple[Signature, Formula]:
    return parse_formula(Path(path).read_text(encoding="utf-8"))
