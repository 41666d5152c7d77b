"""Typing and evaluation over machine states.

This module is the reference semantics: a plain tree-walking evaluator over
immutable values.  Checkers compile hot predicates separately (see
``engine.py``); everything they report can be re-validated against the
functions here.

Values are finite: booleans, naturals (never negative; underflow is a
well-definedness failure, not wraparound), enumeration elements made finite
by partition axioms, and total functions between finite sets represented
extensionally.  A maplet-set literal evaluates to a function *fragment*; the
totality obligation is checked where the fragment meets a total-function
variable (assignment or comparison).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .project import FlatContext, FlatMachine, SpecError
from .syntax import (
    And, Arith, BoolLit, Compare, EventDef, FuncType, Implies, LabeledPredicate,
    Maplet, Member, Name, Node, Not, Num, Or, Partition, PredefSet, SetLit,
    SourceSpan, free_names, is_typing_predicate,
)

# --- well-definedness ---------------------------------------------------------

WD_DIVISION = "division-by-zero"
WD_UNDERFLOW = "natural-underflow"
WD_PARTIAL = "function-applied-outside-domain"


@dataclass(frozen=True)
class WDFailure:
    location: Optional[SourceSpan]
    reason: str

    def __str__(self) -> str:
        where = f" at {self.location}" if self.location else ""
        return f"{self.reason}{where}"


class WDError(SpecError):
    def __init__(self, reason: str, location: Optional[SourceSpan] = None):
        super().__init__(str(WDFailure(location, reason)))
        self.failure = WDFailure(location, reason)


class EvalTypeError(SpecError):
    pass


class GuardNotEnabled(SpecError):
    def __init__(self, event: str, failing: Sequence[str]):
        super().__init__(f"event {event} not enabled; failing guards: "
                         + ", ".join(failing))
        self.event = event
        self.failing = tuple(failing)


class TypingError(SpecError):
    pass


class NonFiniteCarrier(TypingError):
    def __init__(self, set_name: str):
        super().__init__(f"carrier set '{set_name}' has no partition axiom")
        self.set_name = set_name


class ConstantResolutionError(SpecError):
    pass


# --- values -------------------------------------------------------------------

@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class NatV:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise WDError(WD_UNDERFLOW)


@dataclass(frozen=True)
class EnumV:
    set_name: str
    name: str


@dataclass(frozen=True)
class FuncV:
    """Extensional function value: ordered (key, value) pairs."""

    pairs: Tuple[Tuple[EnumV, object], ...]

    def keys(self) -> frozenset:
        return frozenset(k for k, _ in self.pairs)

    def mapping(self) -> Dict[EnumV, object]:
        return dict(self.pairs)


@dataclass(frozen=True)
class SetV:
    """Internal value of set-typed expressions (carrier sets, set literals)."""

    elements: frozenset


Value = object   # BoolV | NatV | EnumV | FuncV (SetV only mid-evaluation)

State = Dict[str, Value]


# --- types --------------------------------------------------------------------

@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "BOOL"


@dataclass(frozen=True)
class NatT:
    def __str__(self) -> str:
        return "NAT"


@dataclass(frozen=True)
class EnumT:
    set_name: str

    def __str__(self) -> str:
        return self.set_name


@dataclass(frozen=True)
class FuncT:
    domain: "EnumT"
    range: object

    def __str__(self) -> str:
        return f"{self.domain} --> {self.range}"


Type = object


# --- constant environment -------------------------------------------------------

@dataclass(frozen=True)
class ConstEnv:
    """Constant valuation plus the extent of every finite carrier set."""

    consts: Dict[str, Value]
    extents: Dict[str, Tuple[EnumV, ...]]

    def extent(self, set_name: str) -> Tuple[EnumV, ...]:
        if set_name not in self.extents:
            raise NonFiniteCarrier(set_name)
        return self.extents[set_name]


def _enum_partitions(context: FlatContext):
    from .project import _enum_partition_blocks
    for ax in context.axioms:
        parsed = _enum_partition_blocks(ax)
        if parsed is not None:
            yield parsed


def resolve_constants(context: FlatContext,
                      numeric: Optional[Mapping[str, int]] = None) -> ConstEnv:
    """Derive a constant valuation satisfying every axiom of the context.

    Partition-defined constants become distinct enumeration elements; numeric
    constants are taken from ``numeric``; any remaining constant must be
    pinned down uniquely by its membership axiom (e.g. a one-element total
    function space).  Every axiom is then checked by evaluation.
    """
    numeric = dict(numeric or {})
    consts: Dict[str, Value] = {}
    extents: Dict[str, Tuple[EnumV, ...]] = {}
    for set_name, block_consts in _enum_partitions(context):
        elems = tuple(EnumV(set_name, c) for c in block_consts)
        extents[set_name] = elems
        for e in elems:
            consts[e.name] = e

    for name in context.constants:
        if name in consts:
            continue
        if name in numeric:
            value = numeric[name]
            if value < 0:
                raise ConstantResolutionError(f"constant {name} must be a natural")
            consts[name] = NatV(value)

    env = ConstEnv(consts, extents)
    unresolved = [c for c in context.constants if c not in consts]
    progress = True
    while unresolved and progress:
        progress = False
        for name in list(unresolved):
            axiom = _membership_axiom(context, name)
            if axiom is None:
                continue
            deps = free_names(axiom.body) - {name} - set(context.sets)
            if any(d not in consts for d in deps):
                continue
            candidates = _candidate_values(axiom.body.set_expr, env)
            survivors = []
            for cand in candidates:
                trial = ConstEnv({**consts, name: cand}, extents)
                if _axioms_hold_for(context, trial, focus=name):
                    survivors.append(cand)
            if len(survivors) == 1:
                consts[name] = survivors[0]
                env = ConstEnv(consts, extents)
                unresolved.remove(name)
                progress = True
            elif len(survivors) == 0:
                raise ConstantResolutionError(
                    f"no value of constant {name} satisfies the axioms")
            else:
                raise ConstantResolutionError(
                    f"constant {name} is not determined by the axioms "
                    f"({len(survivors)} candidates)")
    if unresolved:
        raise ConstantResolutionError(
            "unvalued constants (supply numeric values or membership axioms): "
            + ", ".join(unresolved))

    for ax in context.axioms:
        if not eval_pred(ax.body, {}, env):
            raise ConstantResolutionError(f"axiom {ax.label} does not hold")
    return env


def _membership_axiom(context: FlatContext, const: str) -> Optional[LabeledPredicate]:
    for ax in context.axioms:
        body = ax.body
        if isinstance(body, Member) and isinstance(body.element, Name) \
                and body.element.ident == const:
            return ax
    return None


def _candidate_values(set_expr: Node, env: ConstEnv) -> List[Value]:
    if isinstance(set_expr, FuncType):
        dom = _eval_set(set_expr.domain, {}, env)
        rng = _eval_set(set_expr.range, {}, env)
        dom_sorted = _sorted_enum(dom, env)
        rng_sorted = sorted(rng.elements, key=_value_sort_key)
        out = []
        for combo in itertools.product(rng_sorted, repeat=len(dom_sorted)):
            out.append(FuncV(tuple(zip(dom_sorted, combo))))
        return out
    value = _eval_set(set_expr, {}, env)
    return sorted(value.elements, key=_value_sort_key)


def _axioms_hold_for(context: FlatContext, env: ConstEnv, focus: str) -> bool:
    for ax in context.axioms:
        names = free_names(ax.body)
        if focus not in names:
            continue
        if not all(n in env.consts or n in env.extents or n in context.sets
                   for n in names):
            continue
        try:
            if not eval_pred(ax.body, {}, env):
                return False
        except SpecError:
            return False
    return True


def _value_sort_key(v: Value):
    if isinstance(v, BoolV):
        return (0, v.value)
    if isinstance(v, NatV):
        return (1, v.value)
    if isinstance(v, EnumV):
        return (2, v.set_name, v.name)
    if isinstance(v, FuncV):
        return (3, tuple(( _value_sort_key(k), _value_sort_key(x)) for k, x in v.pairs))
    return (9, str(v))


def _sorted_enum(s: SetV, env: ConstEnv) -> List[EnumV]:
    elems = list(s.elements)
    if elems and isinstance(elems[0], EnumV):
        extent = env.extents.get(elems[0].set_name)
        if extent is not None:
            order = {e: i for i, e in enumerate(extent)}
            if all(e in order for e in elems):
                return sorted(elems, key=lambda e: order[e])
    return sorted(elems, key=_value_sort_key)


# --- type inference -------------------------------------------------------------

def _type_from_set_expr(se: Node, context: FlatContext, env: ConstEnv) -> Type:
    if isinstance(se, PredefSet):
        return BoolT() if se.which == "BOOL" else NatT()
    if isinstance(se, Name):
        if se.ident in context.sets:
            env.extent(se.ident)    # NonFiniteCarrier when missing
            return EnumT(se.ident)
        raise TypingError(f"'{se.ident}' is not a carrier set")
    if isinstance(se, FuncType):
        dom = _type_from_set_expr(se.domain, context, env)
        rng = _type_from_set_expr(se.range, context, env)
        if not isinstance(dom, EnumT):
            raise TypingError("total-function domain must be a finite carrier set")
        return FuncT(dom, rng)
    raise TypingError(f"not a type expression: {se!r}")


def infer_types(flat: FlatMachine, env: ConstEnv) -> Dict[str, Type]:
    """Assign each variable its type from exactly one typing invariant."""
    types: Dict[str, Type] = {}
    for origin, inv in flat.invariants:
        var = is_typing_predicate(inv.body, flat.variables)
        if var is None:
            continue
        ty = _type_from_set_expr(inv.body.set_expr, flat.context, env)
        if var in types and types[var] != ty:
            raise TypingError(
                f"conflicting typings for '{var}': {types[var]} vs {ty}")
        types[var] = ty
    untyped = [v for v in flat.variables if v not in types]
    if untyped:
        raise TypingError("untyped variables: " + ", ".join(untyped))
    return types


def domain_values(ty: Type, env: ConstEnv,
                  nat_bounds: Optional[Tuple[int, int]] = None) -> List[Value]:
    """All values of a type in canonical ascending enumeration order."""
    if isinstance(ty, BoolT):
        return [BoolV(False), BoolV(True)]
    if isinstance(ty, NatT):
        if nat_bounds is None:
            raise SpecError("a NAT variable needs bounds for enumeration")
        lo, hi = nat_bounds
        return [NatV(n) for n in range(lo, hi + 1)]
    if isinstance(ty, EnumT):
        return list(env.extent(ty.set_name))
    if isinstance(ty, FuncT):
        dom = list(env.extent(ty.domain.set_name))
        rng = domain_values(ty.range, env, nat_bounds)
        return [FuncV(tuple(zip(dom, combo)))
                for combo in itertools.product(rng, repeat=len(dom))]
    raise TypingError(f"cannot enumerate type {ty}")


def value_matches_type(value: Value, ty: Type, env: ConstEnv) -> bool:
    if isinstance(ty, BoolT):
        return isinstance(value, BoolV)
    if isinstance(ty, NatT):
        return isinstance(value, NatV)
    if isinstance(ty, EnumT):
        return isinstance(value, EnumV) and value.set_name == ty.set_name
    if isinstance(ty, FuncT):
        if not isinstance(value, FuncV):
            return False
        extent = frozenset(env.extent(ty.domain.set_name))
        if value.keys() != extent:
            return False
        return all(value_matches_type(v, ty.range, env) for _, v in value.pairs)
    return False


# --- evaluation -------------------------------------------------------------------

def eval_expr(expr: Node, state: Mapping[str, Value], env: ConstEnv) -> Value:
    """Evaluate an expression or predicate; raises WDError on unsafe sites."""
    if isinstance(expr, Num):
        return NatV(expr.value)
    if isinstance(expr, BoolLit):
        return BoolV(expr.value)
    if isinstance(expr, Name):
        if expr.ident in state:
            return state[expr.ident]
        if expr.ident in env.consts:
            return env.consts[expr.ident]
        if expr.ident in env.extents:
            return SetV(frozenset(env.extents[expr.ident]))
        raise EvalTypeError(f"unbound identifier '{expr.ident}'")
    if isinstance(expr, PredefSet):
        if expr.which == "BOOL":
            return SetV(frozenset({BoolV(False), BoolV(True)}))
        raise EvalTypeError("NAT has no finite extent; it may only appear "
                            "on the right of ':'")
    if isinstance(expr, Arith):
        left = _as_nat(eval_expr(expr.left, state, env), expr)
        right = _as_nat(eval_expr(expr.right, state, env), expr)
        if expr.op == "+":
            return NatV(left + right)
        if expr.op == "-":
            if right > left:
                raise WDError(WD_UNDERFLOW, expr.span)
            return NatV(left - right)
        if expr.op == "*":
            return NatV(left * right)
        if expr.op == "/":
            if right == 0:
                raise WDError(WD_DIVISION, expr.span)
            return NatV(left // right)
        raise EvalTypeError(f"unknown arithmetic operator {expr.op}")
    if isinstance(expr, Compare):
        left = eval_expr(expr.left, state, env)
        right = eval_expr(expr.right, state, env)
        if expr.op in ("=", "/="):
            eq = _values_equal(left, right, expr)
            return BoolV(eq if expr.op == "=" else not eq)
        lnum = _as_nat(left, expr)
        rnum = _as_nat(right, expr)
        if expr.op == "<":
            return BoolV(lnum < rnum)
        if expr.op == "<=":
            return BoolV(lnum <= rnum)
        if expr.op == ">":
            return BoolV(lnum > rnum)
        if expr.op == ">=":
            return BoolV(lnum >= rnum)
        raise EvalTypeError(f"unknown comparison {expr.op}")
    if isinstance(expr, Not):
        return BoolV(not _as_bool(eval_expr(expr.operand, state, env), expr))
    if isinstance(expr, And):
        if not _as_bool(eval_expr(expr.left, state, env), expr):
            return BoolV(False)
        return BoolV(_as_bool(eval_expr(expr.right, state, env), expr))
    if isinstance(expr, Or):
        if _as_bool(eval_expr(expr.left, state, env), expr):
            return BoolV(True)
        return BoolV(_as_bool(eval_expr(expr.right, state, env), expr))
    if isinstance(expr, Implies):
        if not _as_bool(eval_expr(expr.left, state, env), expr):
            return BoolV(True)
        return BoolV(_as_bool(eval_expr(expr.right, state, env), expr))
    if isinstance(expr, Maplet):
        raise EvalTypeError("a maplet is only meaningful inside a set literal")
    if isinstance(expr, SetLit):
        return _eval_set_literal(expr, state, env)
    if isinstance(expr, Member):
        return BoolV(_eval_membership(expr, state, env))
    if isinstance(expr, FuncType):
        raise EvalTypeError("a function type may only appear on the right of ':'")
    if isinstance(expr, Partition):
        return BoolV(_eval_partition(expr, state, env))
    raise EvalTypeError(f"cannot evaluate {expr!r}")


def eval_pred(expr: Node, state: Mapping[str, Value], env: ConstEnv) -> bool:
    value = eval_expr(expr, state, env)
    if not isinstance(value, BoolV):
        raise EvalTypeError(f"predicate expected, got {value!r}")
    return value.value


def _as_nat(v: Value, expr: Node) -> int:
    if isinstance(v, NatV):
        return v.value
    raise EvalTypeError(f"natural expected in {expr!r}, got {v!r}")


def _as_bool(v: Value, expr: Node) -> bool:
    if isinstance(v, BoolV):
        return v.value
    raise EvalTypeError(f"boolean expected in {expr!r}, got {v!r}")


def _eval_set_literal(expr: SetLit, state, env) -> Value:
    values = []
    maplets = []
    for item in expr.items:
        if isinstance(item, Maplet):
            key = eval_expr(item.left, state, env)
            val = eval_expr(item.right, state, env)
            if not isinstance(key, EnumV):
                raise EvalTypeError("function fragments need enumeration keys")
            maplets.append((key, val))
        else:
            values.append(eval_expr(item, state, env))
    if maplets and values:
        raise EvalTypeError("set literal mixes maplets and plain elements")
    if maplets:
        seen: Dict[EnumV, Value] = {}
        for key, val in maplets:
            if key in seen and seen[key] != val:
                raise WDError(WD_PARTIAL, expr.span)
            seen[key] = val
        ordered = _order_pairs(seen, env)
        return FuncV(tuple(ordered))
    return SetV(frozenset(values))


def _order_pairs(mapping: Dict[EnumV, Value], env: ConstEnv):
    keys = list(mapping)
    extent = env.extents.get(keys[0].set_name) if keys else None
    if extent is not None and all(k in extent for k in keys):
        keys.sort(key=lambda k: extent.index(k))
    else:
        keys.sort(key=_value_sort_key)
    return [(k, mapping[k]) for k in keys]


def _eval_set(expr: Node, state, env) -> SetV:
    value = eval_expr(expr, state, env)
    if isinstance(value, SetV):
        return value
    raise EvalTypeError(f"set expected, got {value!r}")


def _values_equal(left: Value, right: Value, expr: Node) -> bool:
    if isinstance(left, FuncV) and isinstance(right, FuncV):
        if left.keys() != right.keys():
            # comparing a fragment against a function on another domain is
            # a totality violation, not inequality
            raise WDError(WD_PARTIAL, getattr(expr, "span", None))
        return left.mapping() == right.mapping()
    if type(left) is not type(right):
        raise EvalTypeError(f"incomparable values {left!r} and {right!r}")
    return left == right


def _eval_membership(expr: Member, state, env) -> bool:
    se = expr.set_expr
    if isinstance(se, PredefSet):
        value = eval_expr(expr.element, state, env)
        if se.which == "BOOL":
            return isinstance(value, BoolV)
        return isinstance(value, NatV)
    if isinstance(se, FuncType):
        value = eval_expr(expr.element, state, env)
        if not isinstance(value, FuncV):
            return False
        dom = _eval_set(se.domain, state, env)
        if isinstance(se.range, PredefSet) and se.range.which == "NAT":
            rng_check = lambda v: isinstance(v, NatV)
        else:
            rng = _eval_set(se.range, state, env)
            rng_check = lambda v: v in rng.elements
        if value.keys() != dom.elements:
            return False
        return all(rng_check(v) for _, v in value.pairs)
    target = _eval_set(se, state, env)
    value = eval_expr(expr.element, state, env)
    return value in target.elements


def _eval_partition(expr: Partition, state, env) -> bool:
    target = _eval_set(expr.target, state, env)
    blocks = [_eval_set(b, state, env) for b in expr.blocks]
    union: set = set()
    for block in blocks:
        if union & block.elements:
            return False
        union |= block.elements
    return union == target.elements


# --- machine-level operations -------------------------------------------------

def initial_state(flat: FlatMachine, env: ConstEnv) -> State:
    """The unique state produced by firing INITIALISATION."""
    init = flat.initialisation()
    assigned: Dict[str, Value] = {}
    for act in init.actions:
        assigned[act.variable] = eval_expr(act.expr, {}, env)
    return {var: assigned[var] for var in flat.variables}


def guard_status(event: EventDef, state: Mapping[str, Value], env: ConstEnv):
    """(enabled, failing guard labels, WD warnings); WD disables the event."""
    failing: List[str] = []
    warnings: List[str] = []
    for grd in event.guards:
        try:
            if not eval_pred(grd.body, state, env):
                failing.append(grd.label)
        except WDError as err:
            failing.append(grd.label)
            warnings.append(f"{event.name}/{grd.label}: {err.failure}")
    return (not failing), failing, warnings


def enabled_events(state: Mapping[str, Value], env: ConstEnv,
                   flat: FlatMachine, kinds: Optional[Iterable[str]] = None
                   ) -> List[str]:
    """Names of events whose guards all hold in ``state``.

    ``kinds`` restricts to event kinds ("model", "environment"); the
    INITIALISATION pseudo-event is never reported.
    """
    names, _ = enabled_events_with_warnings(state, env, flat, kinds)
    return names


def enabled_events_with_warnings(state, env, flat: FlatMachine,
                                 kinds: Optional[Iterable[str]] = None):
    kind_set = set(kinds) if kinds is not None else None
    enabled: List[str] = []
    warnings: List[str] = []
    for ev in flat.events:
        if ev.is_initialisation:
            continue
        if kind_set is not None and ev.kind not in kind_set:
            continue
        ok, _, warns = guard_status(ev, state, env)
        warnings.extend(warns)
        if ok:
            enabled.append(ev.name)
    return enabled, warnings


def fire_event(state: Mapping[str, Value], env: ConstEnv, flat: FlatMachine,
               event_name: str) -> State:
    """Fire an enabled event: all right-hand sides are evaluated in the
    pre-state, then assigned at once; unassigned variables are unchanged."""
    event = flat.event(event_name)
    if event is None or event.is_initialisation:
        raise GuardNotEnabled(event_name, ["<unknown event>"])
    ok, failing, _ = guard_status(event, state, env)
    if not ok:
        raise GuardNotEnabled(event_name, failing)
    updates: Dict[str, Value] = {}
    for act in event.actions:
        updates[act.variable] = eval_expr(act.expr, state, env)
    new_state = dict(state)
    new_state.update(updates)
    return new_state


def check_assignment_wd(value: Value, ty: Type, env: ConstEnv,
                        span: Optional[SourceSpan] = None) -> Value:
    """Totality gate for function fragments meeting a total-function slot."""
    if isinstance(ty, FuncT):
        if not isinstance(value, FuncV):
            raise EvalTypeError("total function expected")
        extent = frozenset(env.extent(ty.domain.set_name))
        if value.keys() != extent:
            raise WDError(WD_PARTIAL, span)
    return value


def violated_invariants(flat: FlatMachine, state: Mapping[str, Value],
                        env: ConstEnv) -> Tuple[str, ...]:
    """Labels of non-typing invariants that are false (or WD-fail) in state."""
    bad: List[str] = []
    for _, inv in flat.non_typing_invariants():
        try:
            if not eval_pred(inv.body, state, env):
                bad.append(inv.label)
        except WDError:
            bad.append(inv.label)
    return tuple(bad)


# --- value <-> text -------------------------------------------------------------

def value_to_text(value: Value) -> str:
    if isinstance(value, BoolV):
        return "TRUE" if value.value else "FALSE"
    if isinstance(value, NatV):
        return str(value.value)
    if isinstance(value, EnumV):
        return value.name
    if isinstance(value, FuncV):
        inner = ", ".join(f"{k.name} |-> {value_to_text(v)}" for k, v in value.pairs)
        return "{" + inner + "}"
    raise EvalTypeError(f"unprintable value {value!r}")


def value_from_text(text: str, env: ConstEnv) -> Value:
    """Parse a value literal (TRUE, 42, an enum constant, {a |-> b, ...})."""
    from .parser import ParseFailure, _Parser, tokenize
    tokens, errors = tokenize(text, "<value>")
    if errors:
        raise ParseFailure(errors)
    parser = _Parser(tokens, "<value>")
    expr = parser.expression()
    trailing = parser.peek()
    if trailing.kind != "eof":
        raise EvalTypeError(f"trailing input in value: {trailing.text!r}")
    return eval_expr(expr, {}, env)


def state_to_text(state: Mapping[str, Value], variables: Sequence[str]) -> Dict[str, str]:
    return {v: value_to_text(state[v]) for v in variables}
