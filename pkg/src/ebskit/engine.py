"""Compiled evaluation for bounded checking.

Explicit-state checking evaluates the same small predicate set over very
many states; a tree-walking evaluator dominates the run time.  This module
compiles predicates and events into Python closures over an encoded state
tuple.  Encodings: BOOL -> bool, NAT -> int, enumeration element -> extent
index, total function -> tuple of encoded range values in domain order.

The compiled path is an optimization, not a second semantics: everything it
decides can be re-checked against ``semantics.eval_expr`` (the test suite
does exactly that), and the enumeration order of encoded domains matches
``semantics.domain_values``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import semantics
from .project import FlatMachine
from .semantics import (
    BoolT, BoolV, ConstEnv, EnumT, EnumV, FuncT, FuncV, NatT, NatV, SetV,
    WDError, EvalTypeError,
)
from .syntax import (
    And, Arith, BoolLit, Compare, EventDef, FuncType, Implies, Maplet, Member,
    Name, Node, Not, Num, Or, Partition, PredefSet, SetLit, free_names,
)


class ExplorationCapExceeded(Exception):
    """A bounded check would visit more states than the configured cap."""

    def __init__(self, states: int):
        super().__init__(f"exploration cap exceeded: {states} states")
        self.states = states


class _WD(Exception):
    """Well-definedness failure inside compiled code."""


def _div(a: int, b: int) -> int:
    if b == 0:
        raise _WD("division-by-zero")
    return a // b


def _sub(a: int, b: int) -> int:
    if b > a:
        raise _WD("natural-underflow")
    return a - b


_GLOBALS = {"_div": _div, "_sub": _sub, "_WD": _WD, "__builtins__": {}}


@dataclass
class CompiledEvent:
    name: str
    kind: str
    guard: Callable          # state -> bool (False on WD failure)
    fire: Callable           # state -> state
    assigned: Tuple[int, ...]
    event: EventDef


class CompiledMachine:
    """Encoded domains plus predicate/event compilers for one machine."""

    def __init__(self, flat: FlatMachine, env: ConstEnv,
                 types: Mapping[str, object],
                 bounds: Mapping[str, Tuple[int, int]]):
        self.flat = flat
        self.env = env
        self.types = dict(types)
        self.bounds = dict(bounds)
        self.variables = list(flat.variables)
        self.var_index = {v: i for i, v in enumerate(self.variables)}
        self.domains: List[List[object]] = [
            [self.encode_value(val, self.types[v])
             for val in semantics.domain_values(self.types[v], env,
                                                self.bounds.get(v))]
            for v in self.variables
        ]
        self._counter = itertools.count()

    # -- value encoding -----------------------------------------------------

    def encode_value(self, value, ty) -> object:
        if isinstance(ty, BoolT):
            assert isinstance(value, BoolV)
            return value.value
        if isinstance(ty, NatT):
            assert isinstance(value, NatV)
            return value.value
        if isinstance(ty, EnumT):
            assert isinstance(value, EnumV)
            return self.env.extent(ty.set_name).index(value)
        if isinstance(ty, FuncT):
            assert isinstance(value, FuncV)
            extent = self.env.extent(ty.domain.set_name)
            mapping = value.mapping()
            if frozenset(mapping) != frozenset(extent):
                raise WDError(semantics.WD_PARTIAL)
            return tuple(self.encode_value(mapping[k], ty.range) for k in extent)
        raise EvalTypeError(f"cannot encode type {ty}")

    def decode_value(self, raw, ty):
        if isinstance(ty, BoolT):
            return BoolV(raw)
        if isinstance(ty, NatT):
            return NatV(raw)
        if isinstance(ty, EnumT):
            return self.env.extent(ty.set_name)[raw]
        if isinstance(ty, FuncT):
            extent = self.env.extent(ty.domain.set_name)
            return FuncV(tuple((k, self.decode_value(r, ty.range))
                               for k, r in zip(extent, raw)))
        raise EvalTypeError(f"cannot decode type {ty}")

    def encode_state(self, state: Mapping[str, object]) -> Tuple:
        return tuple(self.encode_value(state[v], self.types[v])
                     for v in self.variables)

    def decode_state(self, encoded: Sequence[object]) -> Dict[str, object]:
        return {v: self.decode_value(encoded[i], self.types[v])
                for i, v in enumerate(self.variables)}

    def initial(self) -> Tuple:
        return self.encode_state(semantics.initial_state(self.flat, self.env))

    def product_size(self, value_lists: Optional[Sequence[Sequence]] = None) -> int:
        size = 1
        for dom in (value_lists or self.domains):
            size *= len(dom)
        return size

    # -- expression compilation ----------------------------------------------

    def _expr_type(self, node: Node):
        """Best-effort static type of an expression (enough for encoding)."""
        if isinstance(node, Num):
            return NatT()
        if isinstance(node, BoolLit):
            return BoolT()
        if isinstance(node, Arith):
            return NatT()
        if isinstance(node, Name):
            if node.ident in self.types:
                return self.types[node.ident]
            value = self.env.consts.get(node.ident)
            if isinstance(value, NatV):
                return NatT()
            if isinstance(value, BoolV):
                return BoolT()
            if isinstance(value, EnumV):
                return EnumT(value.set_name)
            if isinstance(value, FuncV) and value.pairs:
                key, val = value.pairs[0]
                return FuncT(EnumT(key.set_name), self._value_type(val))
        if isinstance(node, SetLit) and node.items \
                and isinstance(node.items[0], Maplet):
            first = node.items[0]
            kt = self._expr_type(first.left)
            vt = self._expr_type(first.right)
            if isinstance(kt, EnumT) and vt is not None:
                return FuncT(kt, vt)
        return None

    def _value_type(self, value):
        if isinstance(value, BoolV):
            return BoolT()
        if isinstance(value, NatV):
            return NatT()
        if isinstance(value, EnumV):
            return EnumT(value.set_name)
        if isinstance(value, FuncV) and value.pairs:
            key, val = value.pairs[0]
            return FuncT(EnumT(key.set_name), self._value_type(val))
        return None

    def _const_foldable(self, node: Node) -> bool:
        names = free_names(node)
        return not (names & set(self.var_index))

    def _fold(self, node: Node, ty) -> str:
        """Evaluate a variable-free expression now; emit its encoded literal."""
        value = semantics.eval_expr(node, {}, self.env)
        if isinstance(value, SetV):
            encoded = frozenset(self._encode_loose(v) for v in value.elements)
            return self._bind(encoded)
        if ty is not None:
            return self._bind(self.encode_value(value, ty))
        return self._bind(self._encode_loose(value))

    def _encode_loose(self, value):
        ty = self._value_type(value)
        if ty is None:
            raise EvalTypeError(f"cannot encode {value!r}")
        return self.encode_value(value, ty)

    def _bind(self, obj) -> str:
        name = f"_k{next(self._counter)}"
        self._bindings[name] = obj
        return name

    def _slow_thunk(self, node: Node) -> str:
        """Fallback: evaluate through the reference semantics at run time."""
        decode = self.decode_state
        env = self.env

        def thunk(s):
            try:
                value = semantics.eval_expr(node, decode(s), env)
            except WDError as err:
                raise _WD(err.failure.reason) from err
            if isinstance(value, BoolV):
                return value.value
            if isinstance(value, NatV):
                return value.value
            return self._encode_loose(value)

        return f"{self._bind(thunk)}(s)"

    def _emit(self, node: Node) -> str:
        if isinstance(node, Num):
            return str(node.value)
        if isinstance(node, BoolLit):
            return "True" if node.value else "False"
        if isinstance(node, Name):
            if node.ident in self.var_index:
                return f"s[{self.var_index[node.ident]}]"
            return self._fold(node, None)
        if isinstance(node, Arith):
            left, right = self._emit(node.left), self._emit(node.right)
            if node.op == "+":
                return f"({left} + {right})"
            if node.op == "*":
                return f"({left} * {right})"
            if node.op == "-":
                return f"_sub({left}, {right})"
            if node.op == "/":
                return f"_div({left}, {right})"
        if isinstance(node, Compare):
            lt = self._expr_type(node.left)
            rt = self._expr_type(node.right)
            ty = lt if lt is not None else rt
            left = (self._fold(node.left, ty) if self._const_foldable(node.left)
                    and not isinstance(node.left, (Num, BoolLit))
                    else self._emit(node.left))
            right = (self._fold(node.right, ty) if self._const_foldable(node.right)
                     and not isinstance(node.right, (Num, BoolLit))
                     else self._emit(node.right))
            op = {"=": "==", "/=": "!="}.get(node.op, node.op)
            return f"({left} {op} {right})"
        if isinstance(node, Not):
            return f"(not {self._emit(node.operand)})"
        if isinstance(node, And):
            return f"({self._emit(node.left)} and {self._emit(node.right)})"
        if isinstance(node, Or):
            return f"({self._emit(node.left)} or {self._emit(node.right)})"
        if isinstance(node, Implies):
            return f"((not {self._emit(node.left)}) or {self._emit(node.right)})"
        if isinstance(node, Member):
            if self._const_foldable(node):
                value = semantics.eval_pred(node, {}, self.env)
                return "True" if value else "False"
            se = node.set_expr
            if isinstance(se, (PredefSet, FuncType)):
                return "True"   # type-correct enumeration makes these hold
            if isinstance(se, Name) and se.ident in self.env.extents:
                elem_ty = self._expr_type(node.element)
                if isinstance(elem_ty, EnumT) and elem_ty.set_name == se.ident:
                    return "True"
            if self._const_foldable(se):
                folded = self._fold(se, None)
                return f"({self._emit(node.element)} in {folded})"
            return self._slow_thunk(node)
        if isinstance(node, (SetLit, Maplet, Partition, FuncType, PredefSet)):
            if self._const_foldable(node):
                ty = self._expr_type(node)
                return self._fold(node, ty)
            return self._slow_thunk(node)
        raise EvalTypeError(f"cannot compile {node!r}")

    def _compile(self, source: str):
        code = f"lambda s: {source}"
        return eval(code, dict(_GLOBALS, **self._bindings))   # noqa: S307

    def compile_pred(self, node: Node) -> Callable:
        """Compile to state -> bool; WD failures surface as _WD."""
        self._bindings: Dict[str, object] = {}
        return self._compile(self._emit(node))

    def compile_pred_safe(self, node: Node, on_wd: bool) -> Callable:
        """Like compile_pred but WD failures yield ``on_wd``."""
        fn = self.compile_pred(node)

        def safe(s, _fn=fn, _default=on_wd):
            try:
                return _fn(s)
            except _WD:
                return _default

        return safe

    def compile_expr(self, node: Node) -> Callable:
        self._bindings = {}
        return self._compile(self._emit(node))

    def compile_event(self, event: EventDef) -> CompiledEvent:
        guard_fns = [self.compile_pred(g.body) for g in event.guards]

        def guard(s, _fns=tuple(guard_fns)):
            try:
                for fn in _fns:
                    if not fn(s):
                        return False
                return True
            except _WD:
                return False

        assigned = tuple(self.var_index[a.variable] for a in event.actions)
        rhs_fns = tuple(self.compile_expr(a.expr) for a in event.actions)
        n = len(self.variables)

        def fire(s, _assigned=assigned, _rhs=rhs_fns, _n=n):
            values = [fn(s) for fn in _rhs]
            out = list(s)
            for idx, val in zip(_assigned, values):
                out[idx] = val
            return tuple(out)

        return CompiledEvent(event.name, event.kind, guard, fire, assigned, event)

    def compiled_events(self, kinds: Optional[Sequence[str]] = None
                        ) -> List[CompiledEvent]:
        out = []
        for ev in self.flat.events:
            if ev.is_initialisation:
                continue
            if kinds is not None and ev.kind not in kinds:
                continue
            out.append(self.compile_event(ev))
        return out


# --- interval reduction ----------------------------------------------------------
#
# In the models we check, NAT variables occur only in comparisons against
# constant expressions (possibly through a +/- literal offset).  Then the
# truth of every atom is constant on the intervals induced by the comparison
# cutpoints, and enumerating one representative per interval is exact.  Any
# variable with a non-conforming occurrence keeps its full range.

def _linear_view(node: Node):
    """Return (var, offset) when node is v, v+c, c+v or v-c."""
    if isinstance(node, Name):
        return node.ident, 0
    if isinstance(node, Arith) and node.op in ("+", "-"):
        if isinstance(node.left, Name) and isinstance(node.right, Num):
            return node.left.ident, (node.right.value if node.op == "+"
                                     else -node.right.value)
        if node.op == "+" and isinstance(node.right, Name) \
                and isinstance(node.left, Num):
            return node.right.ident, node.left.value
    return None


def nat_value_lists(machine: CompiledMachine, predicates: Sequence[Node]
                    ) -> List[List[object]]:
    """Per-variable value lists with NAT ranges reduced to representatives."""
    cutpoints: Dict[str, set] = {}
    irreducible: set = set()
    nat_vars = {v for v, ty in machine.types.items() if isinstance(ty, NatT)}

    def scan(node: Node):
        if isinstance(node, Compare):
            for side, other in ((node.left, node.right), (node.right, node.left)):
                lin = _linear_view(side)
                if lin is None or lin[0] not in nat_vars:
                    _scan_opaque(side)
                    continue
                var, offset = lin
                if free_names(other) & set(machine.var_index):
                    irreducible.add(var)
                    continue
                try:
                    value = semantics.eval_expr(other, {}, machine.env)
                except (WDError, EvalTypeError):
                    irreducible.add(var)
                    continue
                if isinstance(value, NatV):
                    cutpoints.setdefault(var, set()).add(value.value - offset)
                else:
                    irreducible.add(var)
            return
        if isinstance(node, (And, Or, Implies)):
            scan(node.left)
            scan(node.right)
            return
        if isinstance(node, Not):
            scan(node.operand)
            return
        _scan_opaque(node)

    def _scan_opaque(node: Node):
        # any NAT variable reached outside a recognized comparison side
        # (or inside one, in a non-linear position) keeps its full range
        lin = _linear_view(node)
        if lin is not None:
            if lin[0] in nat_vars:
                irreducible.add(lin[0])
            return
        if isinstance(node, Name):
            return
        for child in _children_safe(node):
            _scan_opaque(child)

    def _children_safe(node: Node):
        from .syntax import children
        try:
            return children(node)
        except TypeError:
            return ()

    for pred in predicates:
        scan(pred)

    lists: List[List[object]] = []
    for i, var in enumerate(machine.variables):
        if var not in nat_vars or var in irreducible or var not in cutpoints:
            if var in nat_vars and var not in irreducible and var not in cutpoints:
                lo, hi = machine.bounds[var]
                lists.append([lo])     # never compared: one value suffices
            else:
                lists.append(machine.domains[i])
            continue
        lo, hi = machine.bounds[var]
        reps = {lo, hi}
        for c in cutpoints[var]:
            for candidate in (c - 1, c, c + 1):
                if lo <= candidate <= hi:
                    reps.add(candidate)
        lists.append(sorted(reps))
    return lists
