"""Tokenizer and parser for the ``.ebs`` textual notation.

One file holds any number of CONTEXT/MACHINE blocks.  The surface syntax is
ASCII (``&``, ``or``, ``=>``, ``|->``, ``-->``, ``:``); ``//`` starts a line
comment.  Errors carry 1-based source positions; after an error the parser
skips to the next top-level block so several errors can be reported from one
run.  Parsing never raises anything but :class:`ParseFailure` regardless of
input bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .syntax import (
    And, Arith, Assignment, BoolLit, Compare, ContextDef, EventDef, FuncType,
    Implies, LabeledPredicate, MachineDef, Maplet, Member, Name, Node, Not,
    Num, Or, Partition, PredefSet, SetLit, SourceSpan,
)

_MAX_DEPTH = 200

_KEYWORDS = frozenset({
    "MACHINE", "CONTEXT", "EXTENDS", "REFINES", "SEES", "SETS", "CONSTANTS",
    "AXIOMS", "THEOREMS", "VARIABLES", "INVARIANTS", "VARIANT", "EVENTS",
    "Event", "Where", "WHERE", "Then", "THEN", "End", "END",
    "environment", "convergent", "refines",
    "partition", "BOOL", "NAT", "TRUE", "FALSE", "or", "not",
})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|->|-->|:=|<=|>=|/=|=>|[=<>+\-*/&|:,(){}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str          # "number" | "ident" | "keyword" | "op" | "eof" | "error"
    text: str
    line: int
    col: int

    def span(self, file: str) -> SourceSpan:
        end = (self.line, self.col + max(len(self.text), 1) - 1)
        return SourceSpan(file, (self.line, self.col), end)


@dataclass(frozen=True)
class ParseError(Exception):
    span: SourceSpan
    expected: str
    found: str

    def __str__(self) -> str:
        return f"{self.span}: expected {self.expected}, found {self.found}"


class ParseFailure(Exception):
    """Raised by :func:`parse_source` when the input has errors."""

    def __init__(self, errors: List[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


def tokenize(text: str, file: str = "<input>") -> Tuple[List[Token], List[ParseError]]:
    tokens: List[Token] = []
    errors: List[ParseError] = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            bad = text[pos]
            tok = Token("error", bad, line, col)
            errors.append(ParseError(tok.span(file), "a token", repr(bad)))
            pos += 1
            col += 1
            continue
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind == "number":
            tokens.append(Token("number", lexeme, line, col))
        elif kind == "ident":
            tokens.append(Token("keyword" if lexeme in _KEYWORDS else "ident",
                                lexeme, line, col))
        elif kind == "op":
            tokens.append(Token("op", lexeme, line, col))
        # whitespace and comments are dropped, but update position below
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens, errors


_COMPARE_OPS = {"=", "/=", "<", "<=", ">", ">="}
_EVENT_END = {"End", "END"}
_WHERE = {"Where", "WHERE"}
_THEN = {"Then", "THEN"}


class _Parser:
    def __init__(self, tokens: List[Token], file: str):
        self.tokens = tokens
        self.file = file
        self.pos = 0
        self.errors: List[ParseError] = []

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.text in words

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in ops

    def error(self, expected: str) -> ParseError:
        tok = self.peek()
        found = tok.text if tok.kind != "eof" else "end of input"
        return ParseError(tok.span(self.file), expected, found)

    def expect_keyword(self, *words: str) -> Token:
        if self.at_keyword(*words):
            return self.advance()
        raise self.error(" or ".join(f"'{w}'" for w in words))

    def expect_op(self, op: str) -> Token:
        if self.at_op(op):
            return self.advance()
        raise self.error(f"'{op}'")

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind == "ident":
            return self.advance()
        raise self.error(what)

    # -- top level -----------------------------------------------------------

    def parse_all(self):
        defs = []
        while self.peek().kind != "eof":
            if self.at_keyword("MACHINE"):
                block = self.recover(self.parse_machine)
            elif self.at_keyword("CONTEXT"):
                block = self.recover(self.parse_context)
            else:
                self.errors.append(self.error("'MACHINE' or 'CONTEXT'"))
                self.skip_to_block()
                continue
            if block is not None:
                defs.append(block)
        return defs, self.errors

    def recover(self, production):
        try:
            return production()
        except ParseError as err:
            self.errors.append(err)
            self.advance()
            self.skip_to_block()
            return None

    def skip_to_block(self):
        while self.peek().kind != "eof" and not self.at_keyword("MACHINE", "CONTEXT"):
            self.advance()

    # -- blocks ---------------------------------------------------------------

    def parse_context(self) -> ContextDef:
        start = self.expect_keyword("CONTEXT")
        name = self.expect_ident("context name").text
        extends: Tuple[str, ...] = ()
        sets: Tuple[str, ...] = ()
        constants: Tuple[str, ...] = ()
        axioms: Tuple[LabeledPredicate, ...] = ()
        theorems: Tuple[LabeledPredicate, ...] = ()
        if self.at_keyword("EXTENDS"):
            self.advance()
            extends = self.ident_list("context name")
        if self.at_keyword("SETS"):
            self.advance()
            sets = self.ident_list("set name")
        if self.at_keyword("CONSTANTS"):
            self.advance()
            constants = self.ident_list("constant name")
        if self.at_keyword("AXIOMS"):
            self.advance()
            axioms = self.labeled_predicates("axiom")
        if self.at_keyword("THEOREMS"):
            self.advance()
            theorems = self.labeled_predicates("theorem")
        end = self.expect_keyword("End", "END")
        return ContextDef(name, extends, sets, constants, axioms, theorems,
                          span=self._span(start, end))

    def parse_machine(self) -> MachineDef:
        start = self.expect_keyword("MACHINE")
        name = self.expect_ident("machine name").text
        refines: Optional[str] = None
        sees: Tuple[str, ...] = ()
        variables: Tuple[str, ...] = ()
        invariants: Tuple[LabeledPredicate, ...] = ()
        variant: Optional[Node] = None
        events: List[EventDef] = []
        if self.at_keyword("REFINES"):
            self.advance()
            refines = self.expect_ident("machine name").text
        if self.at_keyword("SEES"):
            self.advance()
            sees = self.ident_list("context name")
        if self.at_keyword("VARIABLES"):
            self.advance()
            variables = self.ident_list("identifier")
        if self.at_keyword("INVARIANTS"):
            self.advance()
            invariants = self.labeled_predicates("invariant")
        if self.at_keyword("VARIANT"):
            self.advance()
            variant = self.expression()
        if self.at_keyword("EVENTS"):
            self.advance()
            while self.at_keyword("Event"):
                events.append(self.parse_event())
        end = self.expect_keyword("END", "End")
        return MachineDef(name, refines, sees, variables, invariants, variant,
                          tuple(events), span=self._span(start, end))

    def parse_event(self) -> EventDef:
        start = self.expect_keyword("Event")
        kind = "model"
        convergent = False
        while self.at_keyword("environment", "convergent"):
            flag = self.advance().text
            if flag == "environment":
                kind = "environment"
            else:
                convergent = True
        name = self.expect_ident("event name").text
        refines: Tuple[str, ...] = ()
        if self.at_keyword("refines"):
            self.advance()
            refines = self.ident_list("event name")
        guards: Tuple[LabeledPredicate, ...] = ()
        actions: List[Assignment] = []
        if self.at_keyword(*_WHERE):
            self.advance()
            guards = self.labeled_predicates("guard")
        if self.at_keyword(*_THEN):
            self.advance()
            seen = set()
            while self.peek().kind == "ident":
                label_tok = self.expect_ident("action label")
                if label_tok.text in seen:
                    raise ParseError(label_tok.span(self.file),
                                     "a fresh action label", label_tok.text)
                seen.add(label_tok.text)
                var_tok = self.expect_ident("variable name")
                self.expect_op(":=")
                expr = self.expression()
                actions.append(Assignment(label_tok.text, var_tok.text, expr,
                                          span=label_tok.span(self.file)))
            if not actions:
                raise self.error("action label")
        end = self.expect_keyword(*_EVENT_END)
        return EventDef(name, refines, kind, convergent, guards, tuple(actions),
                        span=self._span(start, end))

    def ident_list(self, what: str) -> Tuple[str, ...]:
        names = [self.expect_ident(what).text]
        while self.at_op(","):
            self.advance()
            names.append(self.expect_ident(what).text)
        return tuple(names)

    def labeled_predicates(self, what: str) -> Tuple[LabeledPredicate, ...]:
        items: List[LabeledPredicate] = []
        seen = set()
        while self.peek().kind == "ident":
            label_tok = self.advance()
            if label_tok.text in seen:
                raise ParseError(label_tok.span(self.file),
                                 f"a fresh {what} label", label_tok.text)
            seen.add(label_tok.text)
            body = self.expression()
            items.append(LabeledPredicate(label_tok.text, body,
                                          span=label_tok.span(self.file)))
        if not items:
            raise self.error(f"{what} label")
        return tuple(items)

    # -- expressions ----------------------------------------------------------
    #
    # Precedence, loosest first:
    #   =>  (right)  |  or  |  &  |  not  |  = /= < <= > >= :  |  -->  |
    #   |->  |  + -  |  * /  |  atoms
    # A pinned golden test covers the table.

    def expression(self, depth: int = 0) -> Node:
        if depth > _MAX_DEPTH:
            raise self.error("a shallower expression")
        return self.implies(depth + 1)

    def implies(self, depth: int) -> Node:
        left = self.or_expr(depth)
        if self.at_op("=>"):
            tok = self.advance()
            right = self.implies(depth + 1)
            return Implies(left, right, span=tok.span(self.file))
        return left

    def or_expr(self, depth: int) -> Node:
        left = self.and_expr(depth)
        while self.at_op("|") or self.at_keyword("or"):
            tok = self.advance()
            right = self.and_expr(depth + 1)
            left = Or(left, right, span=tok.span(self.file))
        return left

    def and_expr(self, depth: int) -> Node:
        left = self.not_expr(depth)
        while self.at_op("&"):
            tok = self.advance()
            right = self.not_expr(depth + 1)
            left = And(left, right, span=tok.span(self.file))
        return left

    def not_expr(self, depth: int) -> Node:
        if self.at_keyword("not"):
            tok = self.advance()
            return Not(self.not_expr(depth + 1), span=tok.span(self.file))
        return self.relation(depth)

    def relation(self, depth: int) -> Node:
        left = self.arrow(depth)
        if self.at_op(*_COMPARE_OPS):
            tok = self.advance()
            right = self.arrow(depth + 1)
            return Compare(tok.text, left, right, span=tok.span(self.file))
        if self.at_op(":"):
            tok = self.advance()
            right = self.arrow(depth + 1)
            return Member(left, right, span=tok.span(self.file))
        return left

    def arrow(self, depth: int) -> Node:
        left = self.maplet(depth)
        if self.at_op("-->"):
            tok = self.advance()
            right = self.arrow(depth + 1)
            return FuncType(left, right, span=tok.span(self.file))
        return left

    def maplet(self, depth: int) -> Node:
        left = self.additive(depth)
        if self.at_op("|->"):
            tok = self.advance()
            right = self.additive(depth + 1)
            return Maplet(left, right, span=tok.span(self.file))
        return left

    def additive(self, depth: int) -> Node:
        left = self.term(depth)
        while self.at_op("+", "-"):
            tok = self.advance()
            right = self.term(depth + 1)
            left = Arith(tok.text, left, right, span=tok.span(self.file))
        return left

    def term(self, depth: int) -> Node:
        left = self.atom(depth)
        while self.at_op("*", "/"):
            tok = self.advance()
            right = self.atom(depth + 1)
            left = Arith(tok.text, left, right, span=tok.span(self.file))
        return left

    def atom(self, depth: int) -> Node:
        if depth > _MAX_DEPTH:
            raise self.error("a shallower expression")
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(int(tok.text), span=tok.span(self.file))
        if tok.kind == "ident":
            self.advance()
            return Name(tok.text, span=tok.span(self.file))
        if tok.kind == "keyword":
            if tok.text in ("TRUE", "FALSE"):
                self.advance()
                return BoolLit(tok.text == "TRUE", span=tok.span(self.file))
            if tok.text in ("BOOL", "NAT"):
                self.advance()
                return PredefSet(tok.text, span=tok.span(self.file))
            if tok.text == "partition":
                return self.partition(depth)
        if self.at_op("("):
            self.advance()
            inner = self.expression(depth + 1)
            self.expect_op(")")
            return inner
        if self.at_op("{"):
            open_tok = self.advance()
            items = [self.expression(depth + 1)]
            while self.at_op(","):
                self.advance()
                items.append(self.expression(depth + 1))
            self.expect_op("}")
            return SetLit(tuple(items), span=open_tok.span(self.file))
        raise self.error("an expression")

    def partition(self, depth: int) -> Node:
        tok = self.expect_keyword("partition")
        self.expect_op("(")
        target = self.expression(depth + 1)
        blocks = []
        while self.at_op(","):
            self.advance()
            blocks.append(self.expression(depth + 1))
        self.expect_op(")")
        if not blocks:
            raise self.error("at least one partition block")
        return Partition(target, tuple(blocks), span=tok.span(self.file))

    def _span(self, start: Token, end: Token) -> SourceSpan:
        return SourceSpan(self.file, (start.line, start.col), (end.line, end.col))


def parse_source_tolerant(text: str, file: str = "<input>"):
    """Parse ``text``; return ``(definitions, errors)`` without raising."""
    tokens, lex_errors = tokenize(text, file)
    parser = _Parser(tokens, file)
    defs, errors = parser.parse_all()
    return defs, lex_errors + errors


def parse_source(text: str, file: str = "<input>"):
    """Parse ``text`` into raw definitions; raise :class:`ParseFailure` on error."""
    defs, errors = parse_source_tolerant(text, file)
    if errors:
        raise ParseFailure(errors)
    return defs
