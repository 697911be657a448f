"""Textual system format: parser and serializer.

Grammar (UTF-8, '#' line comments, ';' terminators)::

    file    ::= system+
    system  ::= "system" NAME "{" decls "}"
    decls   ::= ("params:" namelist ";")?
                "states:" namelist? ";"
                ("init:" namelist ";")?
                ("trans:" edge*)?
                ("phi" NAME "=" formula ";")*
    edge    ::= NAME "-" NAME "->" NAME ";"
    formula ::= "tt" | "ff" | "(" NAME "," NAME ")" | NAME
              | "!" formula | formula OP formula | "(" formula ")"
    OP      ::= "&&" | "||" | "xor" | "=>" | "<=>"

Precedence, tightest first: ``!``, ``&&``, ``||``, ``xor``, ``=>``
(right-associative), ``<=>``.  A bare NAME inside a formula is a parameter
atom; a ``(action, state)`` pair is a transition atom.  A state without a
``phi`` declaration defaults to the obligation ``tt``.  Names that are not
plain identifiers (synthesized names like ``s@{p}``) are written in double
quotes.  Several systems may share a file; they are addressed as
``file#systemName``.  ``init`` may list several states for systems with
multiple initial states and may be omitted for empty systems.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import MtsrefError
from .formulas import (
    FF,
    TT,
    And,
    Formula,
    Not,
    Or,
    ParamAtom,
    TransAtom,
    Tt,
    iff,
    implies,
    xor,
)
from .systems import System

KEYWORDS = {"system", "params", "states", "init", "trans", "phi", "tt", "ff", "xor"}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class SourceSpan:
    """1-based line/column range with byte offsets, for diagnostics."""

    line: int
    column: int
    end_line: int
    end_column: int
    start_offset: int
    end_offset: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class ParseError(MtsrefError):
    """Malformed input; carries the offending span."""

    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.reason = message


class UndeclaredNameError(ParseError):
    pass


class AtomWithoutTransitionError(ParseError):
    pass


class DuplicateNameError(ParseError):
    pass


@dataclass
class Token:
    kind: str  # NAME, PUNCT, EOF
    text: str
    span: SourceSpan


def _tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def span(start_i, start_line, start_col, end_i, end_line, end_col):
        return SourceSpan(start_line, start_col, end_line, end_col, start_i, end_i)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_i, start_line, start_col = i, line, col
        if c == '"':
            i += 1
            col += 1
            chars = []
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n:
                    chars.append(text[i + 1])
                    i += 2
                    col += 2
                elif text[i] == "\n":
                    break
                else:
                    chars.append(text[i])
                    i += 1
                    col += 1
            if i >= n or text[i] != '"':
                raise ParseError(
                    span(start_i, start_line, start_col, i, line, col),
                    "unterminated quoted name",
                )
            i += 1
            col += 1
            tokens.append(Token("NAME", "".join(chars), span(start_i, start_line, start_col, i, line, col)))
            continue
        m = IDENT_RE.match(text, i)
        if m:
            word = m.group(0)
            i = m.end()
            col += len(word)
            tokens.append(Token("NAME", word, span(start_i, start_line, start_col, i, line, col)))
            continue
        for punct in ("<=>", "=>", "->", "&&", "||", "-", "!", "(", ")", "{", "}", ",", ";", ":", "="):
            if text.startswith(punct, i):
                i += len(punct)
                col += len(punct)
                tokens.append(Token("PUNCT", punct, span(start_i, start_line, start_col, i, line, col)))
                break
        else:
            raise ParseError(
                span(start_i, start_line, start_col, i + 1, line, col + 1),
                f"unexpected character {c!r}",
            )
    eof = SourceSpan(line, col, line, col, n, n)
    tokens.append(Token("EOF", "", eof))
    return tokens


@dataclass
class ParsedSystem:
    name: str
    system: System
    initials: Tuple[int, ...]


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect_punct(self, text: str) -> Token:
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != text:
            raise ParseError(tok.span, f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return tok

    def expect_keyword(self, word: str) -> Token:
        tok = self.next()
        if tok.kind != "NAME" or tok.text != word:
            raise ParseError(tok.span, f"expected {word!r}, found {tok.text or 'end of input'!r}")
        return tok

    def expect_name(self) -> Token:
        tok = self.next()
        if tok.kind != "NAME":
            raise ParseError(tok.span, f"expected a name, found {tok.text or 'end of input'!r}")
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "NAME" and tok.text == word

    def parse_file(self) -> List[ParsedSystem]:
        out = []
        while not self.at_eof():
            out.append(self.parse_system())
        if not out:
            raise ParseError(self.peek().span, "expected at least one system")
        return out

    def at_eof(self) -> bool:
        return self.peek().kind == "EOF"

    def parse_namelist(self, stop: str = ";") -> List[Token]:
        names = []
        if self.peek().kind == "PUNCT" and self.peek().text == stop:
            return names
        names.append(self.expect_name())
        while self.peek().kind == "PUNCT" and self.peek().text == ",":
            self.next()
            names.append(self.expect_name())
        return names

    def parse_system(self) -> ParsedSystem:
        self.expect_keyword("system")
        name_tok = self.expect_name()
        self.expect_punct("{")

        params: List[Token] = []
        if self.at_keyword("params"):
            self.next()
            self.expect_punct(":")
            params = self.parse_namelist()
            self.expect_punct(";")

        self.expect_keyword("states")
        self.expect_punct(":")
        state_toks = self.parse_namelist()
        self.expect_punct(";")

        state_ids: Dict[str, int] = {}
        for tok in state_toks:
            if tok.text in state_ids:
                raise DuplicateNameError(tok.span, f"duplicate state name {tok.text!r}")
            state_ids[tok.text] = len(state_ids)
        param_set = set()
        for tok in params:
            if tok.text in param_set:
                raise DuplicateNameError(tok.span, f"duplicate parameter name {tok.text!r}")
            param_set.add(tok.text)

        initials: List[int] = []
        if self.at_keyword("init"):
            self.next()
            self.expect_punct(":")
            for tok in self.parse_namelist():
                if tok.text not in state_ids:
                    raise UndeclaredNameError(tok.span, f"undeclared state {tok.text!r}")
                initials.append(state_ids[tok.text])
            self.expect_punct(";")

        transitions = set()
        if self.at_keyword("trans"):
            self.next()
            self.expect_punct(":")
            while self.peek().kind == "NAME" and not self.at_keyword("phi") and self._looks_like_edge():
                src = self.expect_name()
                self.expect_punct("-")
                act = self.expect_name()
                self.expect_punct("->")
                tgt = self.expect_name()
                self.expect_punct(";")
                for tok in (src, tgt):
                    if tok.text not in state_ids:
                        raise UndeclaredNameError(tok.span, f"undeclared state {tok.text!r}")
                transitions.add((state_ids[src.text], act.text, state_ids[tgt.text]))

        obligations: Dict[int, Formula] = {}
        while self.at_keyword("phi"):
            self.next()
            owner = self.expect_name()
            if owner.text not in state_ids:
                raise UndeclaredNameError(owner.span, f"undeclared state {owner.text!r}")
            owner_id = state_ids[owner.text]
            if owner_id in obligations:
                raise DuplicateNameError(owner.span, f"duplicate obligation for state {owner.text!r}")
            self.expect_punct("=")
            phi = self._parse_formula(state_ids, param_set, owner_id, transitions)
            self.expect_punct(";")
            obligations[owner_id] = phi

        self.expect_punct("}")

        system = System(
            states=frozenset(state_ids.values()),
            transitions=frozenset(transitions),
            params=frozenset(param_set),
            obligations=obligations,
            initial=initials[0] if initials else None,
            state_names={sid: text for text, sid in state_ids.items()},
        )
        return ParsedSystem(name_tok.text, system, tuple(initials))

    def _looks_like_edge(self) -> bool:
        return self.peek(1).kind == "PUNCT" and self.peek(1).text == "-"

    # Formula parsing, loosest level first: <=>  =>  xor  ||  &&  !  atom
    def _parse_formula(self, state_ids, param_set, owner, transitions) -> Formula:
        return self._parse_iff(state_ids, param_set, owner, transitions)

    def _parse_iff(self, state_ids, param_set, owner, transitions) -> Formula:
        left = self._parse_implies(state_ids, param_set, owner, transitions)
        while self.peek().kind == "PUNCT" and self.peek().text == "<=>":
            self.next()
            right = self._parse_implies(state_ids, param_set, owner, transitions)
            left = iff(left, right)
        return left

    def _parse_implies(self, state_ids, param_set, owner, transitions) -> Formula:
        left = self._parse_xor(state_ids, param_set, owner, transitions)
        if self.peek().kind == "PUNCT" and self.peek().text == "=>":
            self.next()
            right = self._parse_implies(state_ids, param_set, owner, transitions)
            return implies(left, right)
        return left

    def _parse_xor(self, state_ids, param_set, owner, transitions) -> Formula:
        left = self._parse_or(state_ids, param_set, owner, transitions)
        while self.at_keyword("xor"):
            self.next()
            right = self._parse_or(state_ids, param_set, owner, transitions)
            left = xor(left, right)
        return left

    def _parse_or(self, state_ids, param_set, owner, transitions) -> Formula:
        left = self._parse_and(state_ids, param_set, owner, transitions)
        while self.peek().kind == "PUNCT" and self.peek().text == "||":
            self.next()
            right = self._parse_and(state_ids, param_set, owner, transitions)
            left = Or(left, right)
        return left

    def _parse_and(self, state_ids, param_set, owner, transitions) -> Formula:
        left = self._parse_unary(state_ids, param_set, owner, transitions)
        while self.peek().kind == "PUNCT" and self.peek().text == "&&":
            self.next()
            right = self._parse_unary(state_ids, param_set, owner, transitions)
            left = And(left, right)
        return left

    def _parse_unary(self, state_ids, param_set, owner, transitions) -> Formula:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "!":
            self.next()
            return Not(self._parse_unary(state_ids, param_set, owner, transitions))
        return self._parse_atom(state_ids, param_set, owner, transitions)

    def _parse_atom(self, state_ids, param_set, owner, transitions) -> Formula:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "(":
            # "(a, t)" is a transition atom; "(formula)" is grouping.
            if self.peek(1).kind == "NAME" and self.peek(2).kind == "PUNCT" and self.peek(2).text == ",":
                self.next()
                act = self.expect_name()
                self.expect_punct(",")
                tgt = self.expect_name()
                close = self.expect_punct(")")
                if tgt.text not in state_ids:
                    raise UndeclaredNameError(tgt.span, f"undeclared state {tgt.text!r}")
                tgt_id = state_ids[tgt.text]
                if (owner, act.text, tgt_id) not in transitions:
                    raise AtomWithoutTransitionError(
                        close.span,
                        f"formula references ({act.text}, {tgt.text}) but there is no such transition",
                    )
                return TransAtom(act.text, tgt_id)
            self.next()
            phi = self._parse_formula(state_ids, param_set, owner, transitions)
            self.expect_punct(")")
            return phi
        if tok.kind == "NAME":
            self.next()
            if tok.text == "tt":
                return TT
            if tok.text == "ff":
                return FF
            if tok.text not in param_set:
                raise UndeclaredNameError(tok.span, f"undeclared parameter {tok.text!r}")
            return ParamAtom(tok.text)
        raise ParseError(tok.span, f"expected a formula, found {tok.text or 'end of input'!r}")


def parse_file(text: str) -> List[ParsedSystem]:
    """Parse every system in the text, in order of appearance."""
    return _Parser(text).parse_file()


def parse_system(text: str, name: Optional[str] = None) -> System:
    """Parse one system; ``name`` selects among several in the same text."""
    parsed = parse_file(text)
    if name is None:
        if len(parsed) > 1:
            raise MtsrefError(
                f"text contains {len(parsed)} systems; select one of "
                + ", ".join(p.name for p in parsed)
            )
        return parsed[0].system
    for entry in parsed:
        if entry.name == name:
            return entry.system
    raise MtsrefError(f"no system named {name!r}; available: " + ", ".join(p.name for p in parsed))


def _quote_name(name: str) -> str:
    if IDENT_RE.fullmatch(name) and name not in KEYWORDS:
        return name
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


# Precedence levels for minimal parenthesization of the core connectives.
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_UNARY = 3


def format_formula(phi: Formula, names: Dict[int, str]) -> str:
    """Render a formula in the concrete syntax (core connectives only)."""

    def render(node: Formula, level: int) -> str:
        if node == FF:
            return "ff"
        if isinstance(node, Tt):
            return "tt"
        if isinstance(node, TransAtom):
            return f"({_quote_name(node.action)}, {_quote_name(names.get(node.target, f's{node.target}'))})"
        if isinstance(node, ParamAtom):
            return _quote_name(node.name)
        if isinstance(node, Not):
            return "!" + render(node.child, _LEVEL_UNARY)
        if isinstance(node, And):
            text = render(node.left, _LEVEL_AND) + " && " + render(node.right, _LEVEL_AND + 1)
            return f"({text})" if level > _LEVEL_AND else text
        if isinstance(node, Or):
            text = render(node.left, _LEVEL_OR) + " || " + render(node.right, _LEVEL_OR + 1)
            return f"({text})" if level > _LEVEL_OR else text
        raise TypeError(f"not a formula node: {node!r}")

    return render(phi, 0)


def serialize_system(
    sys: System,
    name: str = "M",
    initials: Optional[Tuple[int, ...]] = None,
) -> str:
    """Render one system; ``parse`` of the result is structurally identical.

    ``initials`` overrides the single ``initial`` field, for systems with
    several initial states.
    """
    names = {s: sys.name_of(s) for s in sys.states}
    order = sys.sorted_states()
    lines = [f"system {_quote_name(name)} {{"]
    if sys.params:
        lines.append("  params: " + ", ".join(_quote_name(p) for p in sorted(sys.params)) + ";")
    lines.append("  states: " + ", ".join(_quote_name(names[s]) for s in order) + ";")
    if initials is None:
        initials = (sys.initial,) if sys.initial is not None else ()
    if initials:
        lines.append("  init: " + ", ".join(_quote_name(names[s]) for s in initials) + ";")
    if sys.transitions:
        lines.append("  trans:")
        for (s, a, t) in sorted(sys.transitions, key=lambda e: (e[0], e[1], e[2])):
            lines.append(f"    {_quote_name(names[s])} -{_quote_name(a)}-> {_quote_name(names[t])};")
    for s in order:
        phi = sys.obligation(s)
        if phi != TT:
            lines.append(f"  phi {_quote_name(names[s])} = {format_formula(phi, names)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize_file(entries: List[Tuple[str, System]]) -> str:
    return "\n".join(serialize_system(system, name) for name, system in entries)
