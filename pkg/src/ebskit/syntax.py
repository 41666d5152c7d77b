"""Abstract syntax for machine/context specifications.

Expression and predicate nodes share one recursive tree.  Nodes carry an
optional source span (excluded from equality so that round-trip tests can
compare structure).  Definitions (contexts, machines, events) are plain
frozen dataclasses built by the parser and consumed by project resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple


@dataclass(frozen=True)
class SourceSpan:
    """Half-open region of an input file, 1-based lines and columns."""

    file: str
    start: Tuple[int, int]
    end: Tuple[int, int]

    def __str__(self) -> str:
        return f"{self.file}:{self.start[0]}:{self.start[1]}"


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    """Base class for expression/predicate nodes."""


@dataclass(frozen=True)
class Num(Node):
    value: int
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class BoolLit(Node):
    value: bool
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Name(Node):
    ident: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class PredefSet(Node):
    """BOOL or NAT."""

    which: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Arith(Node):
    """op in {+, -, *, /}; / is natural floor division, - may underflow."""

    op: str
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Compare(Node):
    """op in {=, /=, <, <=, >, >=}."""

    op: str
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Not(Node):
    operand: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Implies(Node):
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class SetLit(Node):
    items: Tuple[Node, ...]
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Maplet(Node):
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Member(Node):
    """``element : set_expr`` membership/typing predicate."""

    element: Node
    set_expr: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class FuncType(Node):
    """``A --> B``: the set of total functions from A to B."""

    domain: Node
    range: Node
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Partition(Node):
    """``partition(S, B1, ..., Bn)``: blocks are disjoint and exhaust S."""

    target: Node
    blocks: Tuple[Node, ...]
    span: Optional[SourceSpan] = _span_field()


# --- Labeled constructs and definitions -----------------------------------

AXIOM_KIND_TYPING = "typing"
AXIOM_KIND_TECHNICAL = "technical"
AXIOM_KIND_PROPERTY = "property"


def kind_from_label(label: str) -> str:
    """Axiom-group classification by label prefix (typ*/tec*, else property)."""
    if label.startswith("typ"):
        return AXIOM_KIND_TYPING
    if label.startswith("tec"):
        return AXIOM_KIND_TECHNICAL
    return AXIOM_KIND_PROPERTY


@dataclass(frozen=True)
class LabeledPredicate:
    label: str
    body: Node
    span: Optional[SourceSpan] = _span_field()

    @property
    def kind(self) -> str:
        return kind_from_label(self.label)


@dataclass(frozen=True)
class Assignment:
    label: str
    variable: str
    expr: Node
    span: Optional[SourceSpan] = _span_field()


EVENT_KIND_MODEL = "model"
EVENT_KIND_ENVIRONMENT = "environment"

INITIALISATION = "INITIALISATION"


@dataclass(frozen=True)
class EventDef:
    name: str
    refines: Tuple[str, ...] = ()
    kind: str = EVENT_KIND_MODEL
    convergent: bool = False
    guards: Tuple[LabeledPredicate, ...] = ()
    actions: Tuple[Assignment, ...] = ()
    span: Optional[SourceSpan] = _span_field()

    @property
    def is_initialisation(self) -> bool:
        return self.name == INITIALISATION

    def assigned_variables(self) -> Tuple[str, ...]:
        return tuple(a.variable for a in self.actions)


@dataclass(frozen=True)
class ContextDef:
    name: str
    extends: Tuple[str, ...] = ()
    sets: Tuple[str, ...] = ()
    constants: Tuple[str, ...] = ()
    axioms: Tuple[LabeledPredicate, ...] = ()
    theorems: Tuple[LabeledPredicate, ...] = ()
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class MachineDef:
    name: str
    refines: Optional[str] = None
    sees: Tuple[str, ...] = ()
    variables: Tuple[str, ...] = ()
    invariants: Tuple[LabeledPredicate, ...] = ()
    variant: Optional[Node] = None
    events: Tuple[EventDef, ...] = ()
    span: Optional[SourceSpan] = _span_field()

    def event(self, name: str) -> Optional[EventDef]:
        for ev in self.events:
            if ev.name == name:
                return ev
        return None


Definition = "ContextDef | MachineDef"


# --- Small tree utilities ---------------------------------------------------

def children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, (Num, BoolLit, Name, PredefSet)):
        return ()
    if isinstance(node, (Arith, Compare, And, Or, Implies, Maplet)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.operand,)
    if isinstance(node, SetLit):
        return node.items
    if isinstance(node, Member):
        return (node.element, node.set_expr)
    if isinstance(node, FuncType):
        return (node.domain, node.range)
    if isinstance(node, Partition):
        return (node.target,) + node.blocks
    raise TypeError(f"unknown node {node!r}")


def walk(node: Node):
    """Yield node and all descendants, preorder."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


def free_names(node: Node) -> frozenset:
    """All identifiers occurring in the tree (variables, constants, sets)."""
    return frozenset(n.ident for n in walk(node) if isinstance(n, Name))


def substitute(node: Node, mapping) -> Node:
    """Replace Name nodes per ``mapping`` (ident -> replacement node).

    Used to build post-state predicates: substituting each assigned
    variable's right-hand side into an invariant yields the invariant over
    the event's result state, expressed over pre-state names (simultaneous
    assignment comes for free).
    """
    if isinstance(node, Name):
        return mapping.get(node.ident, node)
    if isinstance(node, (Num, BoolLit, PredefSet)):
        return node
    if isinstance(node, Arith):
        return Arith(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Compare):
        return Compare(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Not):
        return Not(substitute(node.operand, mapping))
    if isinstance(node, And):
        return And(substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Or):
        return Or(substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Implies):
        return Implies(substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, SetLit):
        return SetLit(tuple(substitute(i, mapping) for i in node.items))
    if isinstance(node, Maplet):
        return Maplet(substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Member):
        return Member(substitute(node.element, mapping), substitute(node.set_expr, mapping))
    if isinstance(node, FuncType):
        return FuncType(substitute(node.domain, mapping), substitute(node.range, mapping))
    if isinstance(node, Partition):
        return Partition(substitute(node.target, mapping),
                         tuple(substitute(b, mapping) for b in node.blocks))
    raise TypeError(f"unknown node {node!r}")


def conjoin(preds) -> Node:
    """Conjunction of a predicate list; TRUE when empty."""
    preds = list(preds)
    if not preds:
        return BoolLit(True)
    result = preds[0]
    for p in preds[1:]:
        result = And(result, p)
    return result


def is_typing_predicate(body: Node, variables) -> Optional[str]:
    """Return the variable name if ``body`` is a typing invariant.

    Typing invariants have the shape ``v : BOOL``, ``v : NAT``,
    ``v : CarrierSet`` or ``v : A --> B`` for a declared variable v.
    Machine invariants are classified structurally (their labels are the
    usual inv1, inv2, ... and carry no kind prefix).
    """
    if not isinstance(body, Member):
        return None
    if not isinstance(body.element, Name) or body.element.ident not in variables:
        return None
    se = body.set_expr
    if isinstance(se, (PredefSet, Name)):
        return body.element.ident
    if isinstance(se, FuncType) and isinstance(se.domain, Name) and \
            isinstance(se.range, (Name, PredefSet)):
        return body.element.ident
    return None
