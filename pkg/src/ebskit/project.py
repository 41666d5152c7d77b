"""Project resolution: flattening of EXTENDS/SEES/REFINES chains.

``resolve`` turns raw parsed definitions into an immutable :class:`Project`
whose contexts and machines are fully flattened, with every link validated.
Flattened structures are safe to share across threads; nothing here mutates
after construction.

Context extension merges the ancestors' sets, constants and axioms.  A
partition axiom is exhaustive, so an extending context may *re-partition* an
inherited carrier set to enlarge it (the usual way a refinement introduces a
new alarm constant): when several enum-style partitions target the same set,
the one whose blocks form a superset of the others' supersedes them in the
flattened view.  Narrowing or incomparable re-partitions are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .syntax import (
    AXIOM_KIND_PROPERTY, AXIOM_KIND_TECHNICAL, AXIOM_KIND_TYPING,
    ContextDef, EventDef, INITIALISATION, LabeledPredicate, MachineDef,
    Name, Partition, SetLit, free_names, is_typing_predicate,
)


class SpecError(Exception):
    """Base class for resolution and semantic errors."""


class UnresolvedReference(SpecError):
    def __init__(self, name: str, where: str = ""):
        super().__init__(f"unresolved reference '{name}'" + (f" in {where}" if where else ""))
        self.name = name


class CyclicExtension(SpecError):
    def __init__(self, path: List[str]):
        super().__init__("cyclic extension: " + " -> ".join(path))
        self.path = path


class DuplicateName(SpecError):
    def __init__(self, name: str, where: str = ""):
        super().__init__(f"duplicate name '{name}'" + (f" in {where}" if where else ""))
        self.name = name


class UnknownMachine(SpecError):
    def __init__(self, name: str):
        super().__init__(f"unknown machine '{name}'")
        self.name = name


class ContradictoryPartition(SpecError):
    pass


class MalformedMachine(SpecError):
    pass


@dataclass(frozen=True)
class FlatContext:
    """A context with all EXTENDS ancestors merged in."""

    name: str
    sets: Tuple[str, ...]
    constants: Tuple[str, ...]
    axioms: Tuple[LabeledPredicate, ...]
    theorems: Tuple[LabeledPredicate, ...]
    superseded: Tuple[str, ...] = ()   # labels of re-partitioned axioms

    def partition_axiom(self, set_name: str) -> Optional[LabeledPredicate]:
        for ax in self.axioms:
            body = ax.body
            if isinstance(body, Partition) and isinstance(body.target, Name) \
                    and body.target.ident == set_name:
                return ax
        return None


@dataclass(frozen=True)
class FlatMachine:
    """A machine with the variables, invariants and events of its refinement
    ancestors merged in (superposition view)."""

    name: str
    chain: Tuple[str, ...]              # abstract-most first, self last
    variables: Tuple[str, ...]
    invariants: Tuple[Tuple[str, LabeledPredicate], ...]   # (origin machine, inv)
    events: Tuple[EventDef, ...]
    variant: Optional[object]
    context: FlatContext                # merged view of every seen context

    def event(self, name: str) -> Optional[EventDef]:
        for ev in self.events:
            if ev.name == name:
                return ev
        return None

    def event_names(self) -> Tuple[str, ...]:
        return tuple(ev.name for ev in self.events)

    def model_events(self) -> Tuple[EventDef, ...]:
        return tuple(ev for ev in self.events
                     if ev.kind == "model" and not ev.is_initialisation)

    def environment_events(self) -> Tuple[EventDef, ...]:
        return tuple(ev for ev in self.events if ev.kind == "environment")

    def initialisation(self) -> EventDef:
        ev = self.event(INITIALISATION)
        assert ev is not None
        return ev

    def typing_invariants(self):
        return tuple((origin, inv) for origin, inv in self.invariants
                     if is_typing_predicate(inv.body, self.variables))

    def non_typing_invariants(self):
        return tuple((origin, inv) for origin, inv in self.invariants
                     if not is_typing_predicate(inv.body, self.variables))

    def to_machine_def(self) -> MachineDef:
        """Rebuild a raw, refinement-free definition of the flattened view.

        Event-level refines annotations point into the abstraction, which a
        standalone definition no longer has; they are dropped.
        """
        import dataclasses
        return MachineDef(
            name=self.name,
            refines=None,
            sees=(self.context.name,),
            variables=self.variables,
            invariants=tuple(inv for _, inv in self.invariants),
            variant=self.variant,
            events=tuple(dataclasses.replace(ev, refines=())
                         for ev in self.events),
        )


@dataclass(frozen=True)
class Project:
    contexts: Dict[str, FlatContext]
    machines: Dict[str, MachineDef]
    flat_machines: Dict[str, FlatMachine]
    refinement_edges: Tuple[Tuple[str, str], ...]   # (concrete, abstract)
    raw_definitions: Tuple[object, ...] = field(default=(), compare=False)

    def flat(self, machine_name: str) -> FlatMachine:
        if machine_name not in self.flat_machines:
            raise UnknownMachine(machine_name)
        return self.flat_machines[machine_name]

    def abstraction_of(self, machine_name: str) -> Optional[str]:
        mch = self.machines.get(machine_name)
        if mch is None:
            raise UnknownMachine(machine_name)
        return mch.refines


# --- partition handling ------------------------------------------------------

def _enum_partition_blocks(ax: LabeledPredicate) -> Optional[Tuple[str, Tuple[str, ...]]]:
    """(set name, block constants) when ax is partition(S, {c1}, ..., {cn})."""
    body = ax.body
    if not isinstance(body, Partition) or not isinstance(body.target, Name):
        return None
    consts = []
    for block in body.blocks:
        if not (isinstance(block, SetLit) and len(block.items) == 1
                and isinstance(block.items[0], Name)):
            return None
        consts.append(block.items[0].ident)
    return body.target.ident, tuple(consts)


def _supersede_partitions(axioms: List[LabeledPredicate], where: str):
    """Keep, per carrier set, only the widest enum partition.

    Returns (kept axioms in original order, labels of superseded axioms).
    """
    winners: Dict[str, Tuple[LabeledPredicate, frozenset]] = {}
    dropped: List[str] = []
    for ax in axioms:
        parsed = _enum_partition_blocks(ax)
        if parsed is None:
            continue
        set_name, consts = parsed
        blocks = frozenset(consts)
        if set_name not in winners:
            winners[set_name] = (ax, blocks)
            continue
        prev_ax, prev_blocks = winners[set_name]
        if blocks == prev_blocks and prev_ax.body == ax.body:
            dropped.append(ax.label)
        elif blocks >= prev_blocks:
            dropped.append(prev_ax.label)
            winners[set_name] = (ax, blocks)
        elif blocks <= prev_blocks:
            dropped.append(ax.label)
        else:
            raise ContradictoryPartition(
                f"incomparable partitions of '{set_name}' in {where}: "
                f"'{prev_ax.label}' vs '{ax.label}'")
    dropped_set = set(dropped)
    kept = [ax for ax in axioms if ax.label not in dropped_set]
    return kept, tuple(dropped)


# --- context flattening ------------------------------------------------------

def _flatten_context(name: str, raw: Dict[str, ContextDef],
                     cache: Dict[str, FlatContext],
                     visiting: List[str]) -> FlatContext:
    if name in cache:
        return cache[name]
    if name in visiting:
        raise CyclicExtension(visiting[visiting.index(name):] + [name])
    ctx = raw.get(name)
    if ctx is None:
        raise UnresolvedReference(name, "EXTENDS")
    visiting.append(name)
    sets: List[str] = []
    constants: List[str] = []
    axioms: List[LabeledPredicate] = []
    theorems: List[LabeledPredicate] = []
    superseded: List[str] = []

    def merge(part_sets, part_consts, part_axioms, part_theorems):
        for s in part_sets:
            if s in sets:
                continue
            sets.append(s)
        for c in part_consts:
            if c in constants:
                continue
            constants.append(c)
        for ax in part_axioms:
            existing = next((a for a in axioms if a.label == ax.label), None)
            if existing is not None:
                if existing.body == ax.body:
                    continue
                raise DuplicateName(ax.label, f"context {name}")
            axioms.append(ax)
        for th in part_theorems:
            if any(t.label == th.label for t in theorems):
                raise DuplicateName(th.label, f"context {name}")
            theorems.append(th)

    for parent in ctx.extends:
        flat_parent = _flatten_context(parent, raw, cache, visiting)
        merge(flat_parent.sets, flat_parent.constants, flat_parent.axioms,
              flat_parent.theorems)
        superseded.extend(flat_parent.superseded)

    # own declarations must be fresh
    for s in ctx.sets:
        if s in sets or s in constants:
            raise DuplicateName(s, f"context {name}")
    for c in ctx.constants:
        if c in constants or c in sets:
            raise DuplicateName(c, f"context {name}")
    merge(ctx.sets, ctx.constants, ctx.axioms, ctx.theorems)

    kept, dropped = _supersede_partitions(axioms, f"context {name}")
    superseded.extend(dropped)

    declared = set(sets) | set(constants)
    for group in (kept, theorems):
        for lp in group:
            for ident in sorted(free_names(lp.body)):
                if ident not in declared:
                    raise UnresolvedReference(ident, f"context {name}, {lp.label}")

    visiting.pop()
    flat = FlatContext(name, tuple(sets), tuple(constants), tuple(kept),
                       tuple(theorems), tuple(dict.fromkeys(superseded)))
    cache[name] = flat
    return flat


def _merge_contexts(name: str, parts: List[FlatContext]) -> FlatContext:
    """Merge the flattened views of several seen contexts into one."""
    if len(parts) == 1:
        return parts[0]
    sets: List[str] = []
    constants: List[str] = []
    axioms: List[LabeledPredicate] = []
    theorems: List[LabeledPredicate] = []
    superseded: List[str] = []
    for part in parts:
        for s in part.sets:
            if s not in sets:
                sets.append(s)
        for c in part.constants:
            if c not in constants:
                constants.append(c)
        for ax in part.axioms:
            existing = next((a for a in axioms if a.label == ax.label), None)
            if existing is not None:
                if existing.body == ax.body:
                    continue
                raise DuplicateName(ax.label, f"contexts seen by {name}")
            axioms.append(ax)
        for th in part.theorems:
            if not any(t.label == th.label for t in theorems):
                theorems.append(th)
        superseded.extend(part.superseded)
    kept, dropped = _supersede_partitions(axioms, f"contexts seen by {name}")
    superseded.extend(dropped)
    return FlatContext("+".join(p.name for p in parts), tuple(sets),
                       tuple(constants), tuple(kept), tuple(theorems),
                       tuple(dict.fromkeys(superseded)))


# --- machine validation and flattening ---------------------------------------

def _validate_raw_machine(mch: MachineDef):
    inits = [ev for ev in mch.events if ev.is_initialisation]
    if len(inits) != 1:
        raise MalformedMachine(
            f"machine {mch.name} must contain exactly one {INITIALISATION} event")
    if inits[0].guards:
        raise MalformedMachine(
            f"{INITIALISATION} of machine {mch.name} must not have guards")
    seen_events = set()
    for ev in mch.events:
        if ev.name in seen_events:
            raise DuplicateName(ev.name, f"machine {mch.name}")
        seen_events.add(ev.name)
        assigned = set()
        for act in ev.actions:
            if act.variable in assigned:
                raise DuplicateName(
                    act.variable, f"event {ev.name} of machine {mch.name}")
            assigned.add(act.variable)
    labels = set()
    for inv in mch.invariants:
        if inv.label in labels:
            raise DuplicateName(inv.label, f"machine {mch.name}")
        labels.add(inv.label)


def _refinement_chain(name: str, machines: Dict[str, MachineDef]) -> List[str]:
    chain = []
    current: Optional[str] = name
    while current is not None:
        if current in chain:
            raise CyclicExtension(chain + [current])
        if current not in machines:
            raise UnresolvedReference(current, "REFINES")
        chain.append(current)
        current = machines[current].refines
    chain.reverse()
    return chain


def _flatten_machine(name: str, machines: Dict[str, MachineDef],
                     contexts: Dict[str, FlatContext]) -> FlatMachine:
    chain = _refinement_chain(name, machines)
    variables: List[str] = []
    invariants: List[Tuple[str, LabeledPredicate]] = []
    inv_labels = set()
    events: Dict[str, EventDef] = {}
    variant = None
    seen_context_names: List[str] = []

    for level in chain:
        mch = machines[level]
        for ctx_name in mch.sees:
            if ctx_name not in contexts:
                raise UnresolvedReference(ctx_name, f"SEES of machine {level}")
            if ctx_name not in seen_context_names:
                seen_context_names.append(ctx_name)
        for var in mch.variables:
            if var in variables:
                raise DuplicateName(var, f"machine {level} (already declared upstream)")
            variables.append(var)
        for inv in mch.invariants:
            if inv.label in inv_labels:
                raise DuplicateName(inv.label, f"machine {level}")
            inv_labels.add(inv.label)
            invariants.append((level, inv))
        ancestor_events = tuple(events)
        for ev in mch.events:
            for target in ev.refines:
                if target not in ancestor_events:
                    raise UnresolvedReference(
                        target, f"refines of event {ev.name} in machine {level}")
            events[ev.name] = ev      # same name overrides, new appends
        if mch.variant is not None:
            variant = mch.variant

    context = _merge_contexts(name, [contexts[c] for c in seen_context_names]) \
        if seen_context_names else FlatContext("(none)", (), (), (), ())

    flat = FlatMachine(
        name=name,
        chain=tuple(chain),
        variables=tuple(variables),
        invariants=tuple(invariants),
        events=tuple(events.values()),
        variant=variant,
        context=context,
    )
    _validate_flat_machine(flat)
    return flat


def _validate_flat_machine(flat: FlatMachine):
    declared = set(flat.variables) | set(flat.context.constants) | set(flat.context.sets)
    for origin, inv in flat.invariants:
        for ident in sorted(free_names(inv.body)):
            if ident not in declared:
                raise UnresolvedReference(ident, f"machine {origin}, {inv.label}")
    for ev in flat.events:
        for grd in ev.guards:
            for ident in sorted(free_names(grd.body)):
                if ident not in declared:
                    raise UnresolvedReference(
                        ident, f"event {ev.name}, {grd.label}")
        for act in ev.actions:
            if act.variable not in flat.variables:
                raise UnresolvedReference(act.variable, f"event {ev.name}, {act.label}")
            for ident in sorted(free_names(act.expr)):
                if ident not in declared:
                    raise UnresolvedReference(ident, f"event {ev.name}, {act.label}")
    if flat.variant is not None:
        for ident in sorted(free_names(flat.variant)):
            if ident not in declared:
                raise UnresolvedReference(ident, "VARIANT")

    init = flat.event(INITIALISATION)
    if init is None:
        raise MalformedMachine(f"machine {flat.name} has no {INITIALISATION}")
    assigned = init.assigned_variables()
    missing = [v for v in flat.variables if v not in assigned]
    if missing:
        raise MalformedMachine(
            f"{INITIALISATION} of {flat.name} does not assign: {', '.join(missing)}")
    consts = set(flat.context.constants) | set(flat.context.sets)
    for act in init.actions:
        refs = free_names(act.expr)
        bad = refs & set(flat.variables)
        if bad:
            raise MalformedMachine(
                f"{INITIALISATION} of {flat.name} reads variables {sorted(bad)}")
        for ident in sorted(refs - consts):
            raise UnresolvedReference(ident, f"{INITIALISATION}, {act.label}")


# --- public operations --------------------------------------------------------

def resolve(definitions) -> Project:
    """Resolve raw definitions into a validated, flattened project."""
    raw_contexts: Dict[str, ContextDef] = {}
    raw_machines: Dict[str, MachineDef] = {}
    for d in definitions:
        if isinstance(d, ContextDef):
            if d.name in raw_contexts or d.name in raw_machines:
                raise DuplicateName(d.name)
            raw_contexts[d.name] = d
        elif isinstance(d, MachineDef):
            if d.name in raw_machines or d.name in raw_contexts:
                raise DuplicateName(d.name)
            raw_machines[d.name] = d
        else:
            raise TypeError(f"not a definition: {d!r}")

    flat_contexts: Dict[str, FlatContext] = {}
    for name in raw_contexts:
        _flatten_context(name, raw_contexts, flat_contexts, [])

    for mch in raw_machines.values():
        _validate_raw_machine(mch)
        if mch.refines is not None and mch.refines not in raw_machines:
            raise UnresolvedReference(mch.refines, f"REFINES of machine {mch.name}")

    flat_machines: Dict[str, FlatMachine] = {}
    for name in raw_machines:
        _refinement_chain(name, raw_machines)   # cycle check up front
    for name in raw_machines:
        flat_machines[name] = _flatten_machine(name, raw_machines, flat_contexts)

    edges = tuple((m.name, m.refines) for m in raw_machines.values()
                  if m.refines is not None)
    return Project(
        contexts=flat_contexts,
        machines=raw_machines,
        flat_machines=flat_machines,
        refinement_edges=edges,
        raw_definitions=tuple(definitions),
    )


def flatten_machine(project: Project, machine_name: str) -> FlatMachine:
    """Superposition view of a machine (ancestors merged in)."""
    return project.flat(machine_name)


def classify_axioms(context: FlatContext) -> Dict[str, List[LabeledPredicate]]:
    """Partition a context's axioms into typing/technical/property groups."""
    groups: Dict[str, List[LabeledPredicate]] = {
        AXIOM_KIND_TYPING: [], AXIOM_KIND_TECHNICAL: [], AXIOM_KIND_PROPERTY: [],
    }
    for ax in context.axioms:
        groups[ax.kind].append(ax)
    return groups
