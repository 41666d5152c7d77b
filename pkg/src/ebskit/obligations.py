"""Proof obligations and their discharge by bounded enumeration.

Obligation kinds:

INV   invariant preservation: for an event E and non-typing invariant I whose
      free variables meet E's assigned variables, the goal is I with every
      assigned variable replaced by its right-hand side (so the goal is a
      pre-state predicate); hypotheses are all non-typing invariants and E's
      guards.  INITIALISATION gets one INV per invariant with no hypotheses.
WD    well-definedness: divisor non-zero per division site, no underflow per
      subtraction site, totality per function-fragment site.
GRD   guard strengthening: concrete guards imply the refined event's guards.
EQL   preserved-variable consistency: a refining event that reassigns an
      abstract variable must assign the same value the abstract event does;
      where the abstract event leaves the variable alone, the new value must
      stay within the variable's type (the preserved-variable reading used
      throughout this corpus, where monitors re-target the alarm).
VAR   variant decrease for convergent events.
THM   theorems under their context's axioms.

Discharge enumerates every type-correct state within the configured bounds
that satisfies the hypotheses and checks the goal: discharged when it always
holds, failed with the first violating state otherwise, vacuous when no
state satisfies the hypotheses.  Enumeration order is variables in
declaration order, values ascending.  Results are "bounded up to the
config": no claim of unbounded proof is made.  When the raw product space is
large, natural-number ranges are reduced to one representative per interval
induced by the comparison cutpoints, which is exact for the comparison-only
shapes these models use (see engine.nat_value_lists).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import semantics
from .engine import CompiledMachine, ExplorationCapExceeded, _WD, nat_value_lists
from .project import FlatMachine, Project, SpecError
from .semantics import (
    BoolT, ConstEnv, EnumT, FuncT, NatT, infer_types, resolve_constants,
)
from .syntax import (
    And, Arith, Compare, EventDef, FuncType, Maplet, Member, Name, Node, Num,
    PredefSet, SetLit, conjoin, free_names, substitute, walk,
)

STATUS_PENDING = "pending"
STATUS_DISCHARGED = "discharged"
STATUS_FAILED = "failed"
STATUS_VACUOUS = "vacuous"

DEFAULT_CAP = 1_000_000
FULL_ENUM_LIMIT = 20_000


class ConfigError(SpecError):
    pass


@dataclass(frozen=True)
class CheckConfig:
    """Bounds for NAT variables, numeric constants, and the state cap."""

    bounds: Mapping[str, Tuple[int, int]] = field(default_factory=dict)
    consts: Mapping[str, int] = field(default_factory=dict)
    cap: int = DEFAULT_CAP
    full_enum_limit: int = FULL_ENUM_LIMIT

    def bound_for(self, var: str) -> Tuple[int, int]:
        if var not in self.bounds:
            raise ConfigError(f"NAT variable '{var}' has no bound")
        lo, hi = self.bounds[var]
        if lo > hi:
            raise ConfigError(f"bound for '{var}' has lower > upper")
        return lo, hi


@dataclass(frozen=True)
class BoundMachine:
    """A flattened machine together with everything needed to run checks."""

    project: Project
    flat: FlatMachine
    env: ConstEnv
    types: Dict[str, object]
    config: CheckConfig

    @classmethod
    def from_project(cls, project: Project, machine: str,
                     config: CheckConfig) -> "BoundMachine":
        flat = project.flat(machine)
        env = resolve_constants(flat.context, config.consts)
        types = infer_types(flat, env)
        for var, ty in types.items():
            if isinstance(ty, NatT):
                config.bound_for(var)
        return cls(project, flat, env, types, config)

    def compiled(self) -> CompiledMachine:
        bounds = {v: self.config.bound_for(v)
                  for v, ty in self.types.items() if isinstance(ty, NatT)}
        return CompiledMachine(self.flat, self.env, self.types, bounds)


@dataclass(frozen=True)
class ProofObligation:
    id: str
    kind: str
    machine: str
    event: Optional[str]
    hypotheses: Tuple[Node, ...]
    goal: Node
    description: str = ""
    status: str = STATUS_PENDING
    counterexample: Optional[Dict[str, object]] = None
    states_enumerated: int = 0


@dataclass(frozen=True)
class POReport:
    machine: str
    total: int
    discharged: int
    failed: int
    vacuous: int
    wall_time: float
    obligations: Tuple[ProofObligation, ...]

    def __post_init__(self):
        assert self.total == self.discharged + self.failed + self.vacuous


# --- generation -----------------------------------------------------------------

def _type_expr(ty) -> Node:
    if isinstance(ty, BoolT):
        return PredefSet("BOOL")
    if isinstance(ty, NatT):
        return PredefSet("NAT")
    if isinstance(ty, EnumT):
        return Name(ty.set_name)
    if isinstance(ty, FuncT):
        return FuncType(_type_expr(ty.domain), _type_expr(ty.range))
    raise SpecError(f"no type expression for {ty}")


def _action_map(event: EventDef) -> Dict[str, Node]:
    return {act.variable: act.expr for act in event.actions}


def _wd_goals(node: Node) -> List[Tuple[Node, str]]:
    """(goal, reason) per division/subtraction site inside ``node``."""
    goals = []
    for sub in walk(node):
        if isinstance(sub, Arith) and sub.op == "/":
            goals.append((Compare("/=", sub.right, Num(0)), "division"))
        elif isinstance(sub, Arith) and sub.op == "-":
            goals.append((Compare(">=", sub.left, sub.right), "underflow"))
    return goals


def _totality_goals(node: Node, flat: FlatMachine, types) -> List[Node]:
    """Totality goals for function fragments compared to typed variables."""
    goals = []
    for sub in walk(node):
        if not isinstance(sub, Compare) or sub.op not in ("=", "/="):
            continue
        for lit, other in ((sub.left, sub.right), (sub.right, sub.left)):
            if isinstance(lit, SetLit) and lit.items \
                    and isinstance(lit.items[0], Maplet) \
                    and isinstance(other, Name) \
                    and isinstance(types.get(other.ident), FuncT):
                goals.append(Member(lit, _type_expr(types[other.ident])))
    return goals


def _refinement_targets(event: EventDef, abstract: FlatMachine) -> List[EventDef]:
    if event.refines:
        return [abstract.event(t) for t in event.refines
                if abstract.event(t) is not None]
    same = abstract.event(event.name)
    return [same] if same is not None and not same.is_initialisation else []


def generate_pos(bound: BoundMachine) -> List[ProofObligation]:
    """All obligations for one machine, in deterministic order."""
    flat = bound.flat
    project = bound.project
    types = bound.types
    machine = flat.name
    non_typing = [inv for _, inv in flat.non_typing_invariants()]
    hyp_base = tuple(inv.body for inv in non_typing)
    pos: List[ProofObligation] = []

    def add(kind, event, label, hyps, goal, description):
        pos.append(ProofObligation(
            id=f"{machine}/{event or '-'}/{label}/{kind}",
            kind=kind, machine=machine, event=event,
            hypotheses=tuple(hyps), goal=goal, description=description))

    # INV for INITIALISATION: no hypotheses, invariants over the initial values
    init = flat.initialisation()
    init_map = _action_map(init)
    for inv in non_typing:
        add("INV", init.name, inv.label, (),
            substitute(inv.body, init_map),
            f"{inv.label} holds initially")

    # INV for model events
    for ev in flat.model_events():
        assigned = set(ev.assigned_variables())
        act_map = _action_map(ev)
        hyps = hyp_base + tuple(g.body for g in ev.guards)
        for inv in non_typing:
            if not (free_names(inv.body) & assigned):
                continue
            add("INV", ev.name, inv.label, hyps,
                substitute(inv.body, act_map),
                f"{ev.name} preserves {inv.label}")

    # WD sites in guards, actions and invariants (INITIALISATION and model
    # events; environment stimuli are corpus additions checked by exploration)
    for ev in (init,) + flat.model_events():
        prior: List[Node] = [] if ev.is_initialisation else list(hyp_base)
        for grd in ev.guards:
            for n, (goal, reason) in enumerate(_wd_goals(grd.body), start=1):
                add("WD", ev.name, f"{grd.label}.{n}", tuple(prior), goal,
                    f"{reason} safe in {ev.name}/{grd.label}")
            prior.append(grd.body)
        for act in ev.actions:
            for n, (goal, reason) in enumerate(_wd_goals(act.expr), start=1):
                add("WD", ev.name, f"{act.label}.{n}", tuple(prior), goal,
                    f"{reason} safe in {ev.name}/{act.label}")
            ty = types.get(act.variable)
            if isinstance(ty, FuncT) and isinstance(act.expr, SetLit):
                add("WD", ev.name, f"{act.label}.total", tuple(prior),
                    Member(act.expr, _type_expr(ty)),
                    f"fragment assigned in {ev.name}/{act.label} is total")
            for n, goal in enumerate(_totality_goals(act.expr, flat, types), 1):
                add("WD", ev.name, f"{act.label}.frag{n}", tuple(prior), goal,
                    f"fragment compared in {ev.name}/{act.label} is total")
        for grd in ev.guards:
            for n, goal in enumerate(_totality_goals(grd.body, flat, types), 1):
                add("WD", ev.name, f"{grd.label}.frag{n}",
                    hyp_base, goal,
                    f"fragment compared in {ev.name}/{grd.label} is total")
    prior_invs: List[Node] = []
    for _, inv in flat.non_typing_invariants():
        for n, (goal, reason) in enumerate(_wd_goals(inv.body), start=1):
            add("WD", None, f"{inv.label}.{n}", tuple(prior_invs), goal,
                f"{reason} safe in {inv.label}")
        for n, goal in enumerate(_totality_goals(inv.body, flat, types), 1):
            add("WD", None, f"{inv.label}.frag{n}", tuple(prior_invs), goal,
                f"fragment compared in {inv.label} is total")
        prior_invs.append(inv.body)

    # GRD / EQL against the direct abstraction, for re-declared events
    abstract_name = project.abstraction_of(machine)
    if abstract_name is not None:
        abstract = project.flat(abstract_name)
        own = project.machines[machine]
        for ev in own.events:
            if ev.is_initialisation or ev.kind != "model":
                continue
            hyps = hyp_base + tuple(g.body for g in ev.guards)
            act_map = _action_map(ev)
            for target in _refinement_targets(ev, abstract):
                add("GRD", ev.name, target.name, hyps,
                    conjoin(g.body for g in target.guards),
                    f"{ev.name} strengthens guards of {target.name}")
                target_map = _action_map(target)
                for var in ev.assigned_variables():
                    if var not in abstract.variables:
                        continue
                    if var in target_map:
                        goal = Compare("=", act_map[var], target_map[var])
                        note = f"{ev.name} assigns {var} as {target.name} does"
                    else:
                        goal = Member(act_map[var], _type_expr(types[var]))
                        note = f"{ev.name} keeps {var} within its type"
                    add("EQL", ev.name, var, hyps, goal, note)

    # VAR for convergent events
    for ev in flat.model_events():
        if not ev.convergent:
            continue
        if flat.variant is None:
            raise SpecError(
                f"convergent event {ev.name} in {machine} without VARIANT")
        act_map = _action_map(ev)
        hyps = hyp_base + tuple(g.body for g in ev.guards)
        goal = And(Compare("<", substitute(flat.variant, act_map), flat.variant),
                   Member(flat.variant, PredefSet("NAT")))
        add("VAR", ev.name, "variant", hyps, goal,
            f"{ev.name} decreases the variant")

    # THM: theorems under the context's axioms (axioms hold by construction
    # of the constant valuation)
    for thm in flat.context.theorems:
        add("THM", None, thm.label, (), thm.body,
            f"theorem {thm.label} of {flat.context.name}")

    return pos


# --- discharge -------------------------------------------------------------------

def discharge(po: ProofObligation, bound: BoundMachine,
              compiled: Optional[CompiledMachine] = None) -> ProofObligation:
    """Decide one obligation by enumeration; returns the updated obligation."""
    cm = compiled or bound.compiled()
    preds = list(po.hypotheses) + [po.goal]
    relevant = set()
    for p in preds:
        relevant |= free_names(p) & set(cm.var_index)

    value_lists = list(cm.domains)
    size = 1
    for i, var in enumerate(cm.variables):
        if var in relevant:
            size *= len(value_lists[i])
    if size > bound.config.full_enum_limit:
        value_lists = nat_value_lists(cm, preds)
    for i, var in enumerate(cm.variables):
        if var not in relevant:
            value_lists[i] = value_lists[i][:1]
    total = 1
    for lst in value_lists:
        total *= len(lst)
    if total > bound.config.cap:
        raise ExplorationCapExceeded(total)

    hyp_fns = [cm.compile_pred(h) for h in po.hypotheses]
    goal_fn = cm.compile_pred(po.goal)

    any_hyp_state = False
    enumerated = 0
    for state in itertools.product(*value_lists):
        enumerated += 1
        ok = True
        try:
            for fn in hyp_fns:
                if not fn(state):
                    ok = False
                    break
        except _WD:
            ok = False       # a hypothesis that cannot be evaluated is not true
        if not ok:
            continue
        any_hyp_state = True
        try:
            holds = goal_fn(state)
        except _WD:
            holds = False    # the goal must be well-defined wherever it applies
        if not holds:
            return replace(po, status=STATUS_FAILED,
                           counterexample=cm.decode_state(state),
                           states_enumerated=enumerated)
    if not any_hyp_state:
        return replace(po, status=STATUS_VACUOUS, states_enumerated=enumerated)
    return replace(po, status=STATUS_DISCHARGED, states_enumerated=enumerated)


def discharge_all(bound: BoundMachine,
                  pos: Optional[Sequence[ProofObligation]] = None
                  ) -> List[ProofObligation]:
    cm = bound.compiled()
    return [discharge(po, bound, cm) for po in (pos or generate_pos(bound))]


def report(bound: BoundMachine) -> POReport:
    """Generate, discharge and aggregate, Table-style."""
    start = time.perf_counter()
    done = discharge_all(bound)
    wall = time.perf_counter() - start
    counts = {STATUS_DISCHARGED: 0, STATUS_FAILED: 0, STATUS_VACUOUS: 0}
    for po in done:
        counts[po.status] += 1
    return POReport(
        machine=bound.flat.name,
        total=len(done),
        discharged=counts[STATUS_DISCHARGED],
        failed=counts[STATUS_FAILED],
        vacuous=counts[STATUS_VACUOUS],
        wall_time=wall,
        obligations=tuple(done),
    )


def obligation_record(po: ProofObligation) -> Dict[str, object]:
    """One machine-readable record per obligation (JSON-serializable)."""
    record: Dict[str, object] = {"id": po.id, "kind": po.kind, "status": po.status}
    if po.counterexample is not None:
        record["counterexample"] = {
            var: semantics.value_to_text(val)
            for var, val in po.counterexample.items()
        }
    return record
