"""Pretty-printer for definitions and expressions.

Output reparses to a structurally identical definition.  Ordering is the
declaration order of the input, indentation is two spaces.  ``unicode=True``
swaps the ASCII operators for their mathematical forms; that rendering is for
display only and is not reparseable.
"""

from __future__ import annotations

from typing import List

from .syntax import (
    And, Arith, BoolLit, Compare, ContextDef, EventDef, FuncType, Implies,
    MachineDef, Maplet, Member, Name, Node, Not, Num, Or, Partition,
    PredefSet, SetLit,
)

_UNICODE = {
    "&": "∧", "or": "∨", "=>": "⇒", "not": "¬",
    ":": "∈", "|->": "↦", "-->": "→", "/=": "≠",
    "<=": "≤", ">=": "≥",
}

_PREC_IMPLIES = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_NOT = 4
_PREC_REL = 5
_PREC_ARROW = 6
_PREC_MAPLET = 7
_PREC_ADD = 8
_PREC_MUL = 9
_PREC_ATOM = 10


def _op(text: str, unicode: bool) -> str:
    return _UNICODE.get(text, text) if unicode else text


def format_expr(node: Node, unicode: bool = False) -> str:
    return _fmt(node, 0, unicode)


def _fmt(node: Node, min_prec: int, uni: bool) -> str:
    text, prec = _render(node, uni)
    if prec < min_prec:
        return f"({text})"
    return text


def _render(node: Node, uni: bool):
    if isinstance(node, Num):
        return str(node.value), _PREC_ATOM
    if isinstance(node, BoolLit):
        return ("TRUE" if node.value else "FALSE"), _PREC_ATOM
    if isinstance(node, Name):
        return node.ident, _PREC_ATOM
    if isinstance(node, PredefSet):
        return node.which, _PREC_ATOM
    if isinstance(node, SetLit):
        inner = ", ".join(_fmt(i, 0, uni) for i in node.items)
        return "{" + inner + "}", _PREC_ATOM
    if isinstance(node, Partition):
        args = [_fmt(node.target, 0, uni)] + [_fmt(b, 0, uni) for b in node.blocks]
        return "partition(" + ", ".join(args) + ")", _PREC_ATOM
    if isinstance(node, Arith):
        prec = _PREC_MUL if node.op in ("*", "/") else _PREC_ADD
        left = _fmt(node.left, prec, uni)
        right = _fmt(node.right, prec + 1, uni)
        return f"{left} {_op(node.op, uni)} {right}", prec
    if isinstance(node, Maplet):
        left = _fmt(node.left, _PREC_MAPLET + 1, uni)
        right = _fmt(node.right, _PREC_MAPLET + 1, uni)
        return f"{left} {_op('|->', uni)} {right}", _PREC_MAPLET
    if isinstance(node, FuncType):
        left = _fmt(node.domain, _PREC_ARROW + 1, uni)
        right = _fmt(node.range, _PREC_ARROW, uni)
        return f"{left} {_op('-->', uni)} {right}", _PREC_ARROW
    if isinstance(node, Compare):
        left = _fmt(node.left, _PREC_REL + 1, uni)
        right = _fmt(node.right, _PREC_REL + 1, uni)
        return f"{left} {_op(node.op, uni)} {right}", _PREC_REL
    if isinstance(node, Member):
        left = _fmt(node.element, _PREC_REL + 1, uni)
        right = _fmt(node.set_expr, _PREC_REL + 1, uni)
        return f"{left} {_op(':', uni)} {right}", _PREC_REL
    if isinstance(node, Not):
        inner = _fmt(node.operand, _PREC_NOT, uni)
        return f"{_op('not', uni)} {inner}", _PREC_NOT
    if isinstance(node, And):
        left = _fmt(node.left, _PREC_AND, uni)
        right = _fmt(node.right, _PREC_AND + 1, uni)
        return f"{left} {_op('&', uni)} {right}", _PREC_AND
    if isinstance(node, Or):
        left = _fmt(node.left, _PREC_OR, uni)
        right = _fmt(node.right, _PREC_OR + 1, uni)
        return f"{left} {_op('or', uni)} {right}", _PREC_OR
    if isinstance(node, Implies):
        left = _fmt(node.left, _PREC_IMPLIES + 1, uni)
        right = _fmt(node.right, _PREC_IMPLIES, uni)
        return f"{left} {_op('=>', uni)} {right}", _PREC_IMPLIES
    raise TypeError(f"unknown node {node!r}")


def _labeled(items, indent: str, uni: bool) -> List[str]:
    return [f"{indent}{it.label} {format_expr(it.body, uni)}" for it in items]


def format_context(ctx: ContextDef, unicode: bool = False) -> str:
    lines = [f"CONTEXT {ctx.name}"]
    if ctx.extends:
        lines.append(f"  EXTENDS {', '.join(ctx.extends)}")
    if ctx.sets:
        lines.append("  SETS")
        lines.append(f"    {', '.join(ctx.sets)}")
    if ctx.constants:
        lines.append("  CONSTANTS")
        lines.append(f"    {', '.join(ctx.constants)}")
    if ctx.axioms:
        lines.append("  AXIOMS")
        lines.extend(_labeled(ctx.axioms, "    ", unicode))
    if ctx.theorems:
        lines.append("  THEOREMS")
        lines.extend(_labeled(ctx.theorems, "    ", unicode))
    lines.append("END")
    return "\n".join(lines) + "\n"


def format_event(ev: EventDef, unicode: bool = False, indent: str = "  ") -> str:
    flags = ""
    if ev.kind == "environment":
        flags += "environment "
    if ev.convergent:
        flags += "convergent "
    head = f"{indent}Event {flags}{ev.name}"
    if ev.refines:
        head += f" refines {', '.join(ev.refines)}"
    lines = [head]
    if ev.guards:
        lines.append(f"{indent}  Where")
        lines.extend(_labeled(ev.guards, indent + "    ", unicode))
    if ev.actions:
        lines.append(f"{indent}  Then")
        for act in ev.actions:
            lines.append(f"{indent}    {act.label} {act.variable} := "
                         f"{format_expr(act.expr, unicode)}")
    lines.append(f"{indent}End")
    return "\n".join(lines)


def format_machine(mch: MachineDef, unicode: bool = False) -> str:
    lines = [f"MACHINE {mch.name}"]
    if mch.refines:
        lines.append(f"  REFINES {mch.refines}")
    if mch.sees:
        lines.append(f"  SEES {', '.join(mch.sees)}")
    if mch.variables:
        lines.append("  VARIABLES")
        lines.append(f"    {', '.join(mch.variables)}")
    if mch.invariants:
        lines.append("  INVARIANTS")
        lines.extend(_labeled(mch.invariants, "    ", unicode))
    if mch.variant is not None:
        lines.append(f"  VARIANT {format_expr(mch.variant, unicode)}")
    if mch.events:
        lines.append("  EVENTS")
        for ev in mch.events:
            lines.append(format_event(ev, unicode))
    lines.append("END")
    return "\n".join(lines) + "\n"


def pretty_print(definition, unicode: bool = False) -> str:
    """Render one definition (context or machine) as source text."""
    if isinstance(definition, ContextDef):
        return format_context(definition, unicode)
    if isinstance(definition, MachineDef):
        return format_machine(definition, unicode)
    raise TypeError(f"not a definition: {definition!r}")


def print_definitions(defs, unicode: bool = False) -> str:
    """Render a sequence of definitions as one source file."""
    return "\n".join(pretty_print(d, unicode) for d in defs)
