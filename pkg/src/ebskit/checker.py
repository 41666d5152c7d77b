"""Explicit-state reachability checking.

Exploration is a breadth-first search from the initial state, expanding
events in declaration order, so reports and counterexample traces are fully
deterministic and violation traces are minimal in step count.

Two modes.  Closed mode fires only model events and checks the machine on
its own terms: any reachable invariant violation is a failure.  Driven mode
also fires the environment (sensor stimulus) events.  An environment step
may legitimately land in a state where a monitor-response invariant is
momentarily false, so driven mode attributes violations instead of flatly
reporting them:

* a violating state reached by an environment event is a *hazard*;
* a model event may shrink the set of violated invariants (a monitor doing
  its job) but must never grow it - an edge that introduces a new violated
  invariant is a model fault and is reported as a violation;
* every hazard state should offer some enabled model event whose firing
  restores all invariants in one step (response discipline); hazard states
  without one are reported separately as unresolved.

Refinement checking walks the concrete machine in driven mode and checks,
per the same attribution idea on the abstract projection: (a) model steps
never grow the set of violated *abstract* invariants, (b) a refining
event's guards imply its abstract event's guards wherever it is enabled,
(c) a refining event assigns preserved variables the way the abstract event
does (type-consistent re-targeting allowed where the abstract event leaves
the variable alone), and (d) new events never grow the abstract violation
set either (they must be invisible, or benign, through the projection).
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import semantics
from .engine import CompiledMachine, ExplorationCapExceeded, _WD
from .obligations import BoundMachine, CheckConfig, _refinement_targets
from .project import Project, SpecError
from .syntax import Compare, INITIALISATION


class NotSuperposition(SpecError):
    pass


MODE_CLOSED = "closed"
MODE_DRIVEN = "driven"
_MODE_KINDS = {
    MODE_CLOSED: ("model",),
    MODE_DRIVEN: ("model", "environment"),
}


@dataclass(frozen=True)
class TraceStep:
    event: str
    state: Dict[str, object]
    perturbed: bool = False


@dataclass(frozen=True)
class Trace:
    machine: str
    initial: Dict[str, object]
    steps: Tuple[TraceStep, ...] = ()

    def final_state(self) -> Dict[str, object]:
        return self.steps[-1].state if self.steps else self.initial

    def to_records(self, variables: Sequence[str]) -> List[Dict[str, object]]:
        records = [{
            "step": 0, "event": INITIALISATION, "perturbed": False,
            "state": semantics.state_to_text(self.initial, variables),
        }]
        for i, step in enumerate(self.steps, start=1):
            records.append({
                "step": i, "event": step.event, "perturbed": step.perturbed,
                "state": semantics.state_to_text(step.state, variables),
            })
        return records

    def to_jsonl(self, variables: Sequence[str]) -> str:
        return "\n".join(json.dumps(r, sort_keys=False)
                         for r in self.to_records(variables)) + "\n"


@dataclass(frozen=True)
class ReachReport:
    machine: str
    mode: str
    states_visited: int
    transitions: int
    frontier_exhausted: bool
    events_covered: Dict[str, int]
    violations: Tuple[Tuple[str, Trace], ...]
    deadlocks: Tuple[Trace, ...]
    hazard_states: int
    unresolved_hazards: Tuple[Tuple[Tuple[str, ...], Trace], ...]
    warnings: Tuple[str, ...] = ()

    @property
    def deadlock_free(self) -> bool:
        return not self.deadlocks

    def uncovered_events(self) -> Tuple[str, ...]:
        return tuple(name for name, n in self.events_covered.items() if n == 0)


class _Search:
    """Shared BFS bookkeeping: parents, per-state violation sets, traces."""

    def __init__(self, cm: CompiledMachine, mode: str, cap: int):
        self.cm = cm
        self.mode = mode
        self.cap = cap
        self.events = cm.compiled_events(_MODE_KINDS[mode])
        flat = cm.flat
        self.inv_fns = [(inv.label, cm.compile_pred_safe(inv.body, on_wd=False))
                        for _, inv in flat.non_typing_invariants()]
        self.parents: Dict[tuple, Optional[Tuple[tuple, str, bool]]] = {}
        self.violated: Dict[tuple, frozenset] = {}
        self.queue: deque = deque()
        self.coverage: Counter = Counter({ev.name: 0 for ev in self.events})
        self.coverage[INITIALISATION] = 1
        self.transitions = 0

    def violations_of(self, state: tuple) -> frozenset:
        cached = self.violated.get(state)
        if cached is None:
            cached = frozenset(label for label, fn in self.inv_fns
                               if not fn(state))
            self.violated[state] = cached
        return cached

    def start(self) -> tuple:
        init = self.cm.initial()
        self.parents[init] = None
        self.queue.append(init)
        return init

    def push(self, state: tuple, source: tuple, event: str, perturbed: bool):
        if state not in self.parents:
            self.parents[state] = (source, event, perturbed)
            if len(self.parents) > self.cap:
                raise ExplorationCapExceeded(len(self.parents))
            self.queue.append(state)

    def trace_to(self, state: tuple) -> Trace:
        steps: List[TraceStep] = []
        current = state
        while True:
            parent = self.parents[current]
            if parent is None:
                break
            source, event, perturbed = parent
            steps.append(TraceStep(event, self.cm.decode_state(current), perturbed))
            current = source
        steps.reverse()
        return Trace(self.cm.flat.name, self.cm.decode_state(current),
                     tuple(steps))


def explore(bound: BoundMachine, mode: str = MODE_CLOSED) -> ReachReport:
    """Breadth-first reachability with invariant, deadlock and hazard checks."""
    cm = bound.compiled()
    search = _Search(cm, mode, bound.config.cap)
    init = search.start()
    warnings: List[str] = []
    violation_labels_seen: set = set()
    violations: List[Tuple[str, Trace]] = []
    deadlocks: List[Trace] = []
    hazards: Dict[tuple, None] = {}

    init_violations = search.violations_of(init)
    for label in sorted(init_violations):
        violation_labels_seen.add(label)
        violations.append((label, search.trace_to(init)))

    while search.queue:
        state = search.queue.popleft()
        pre_violations = search.violations_of(state)
        any_enabled = False
        for ce in search.events:
            if not ce.guard(state):
                continue
            any_enabled = True
            try:
                succ = ce.fire(state)
            except _WD as err:
                warnings.append(f"{ce.name}: action not well-defined ({err})")
                continue
            search.transitions += 1
            search.coverage[ce.name] += 1
            perturbed = ce.kind == "environment"
            search.push(succ, state, ce.name, perturbed)
            succ_violations = search.violations_of(succ)
            if not succ_violations:
                continue
            if perturbed:
                hazards.setdefault(succ)
            else:
                grown = succ_violations - pre_violations
                if grown:
                    for label in sorted(grown):
                        if label not in violation_labels_seen:
                            violation_labels_seen.add(label)
                            violations.append((label, search.trace_to(succ)))
                else:
                    hazards.setdefault(succ)
        if not any_enabled:
            deadlocks.append(search.trace_to(state))

    unresolved: List[Tuple[Tuple[str, ...], Trace]] = []
    for state in hazards:
        restored = False
        for ce in search.events:
            if ce.kind != "model" or not ce.guard(state):
                continue
            try:
                succ = ce.fire(state)
            except _WD:
                continue
            if not search.violations_of(succ):
                restored = True
                break
        if not restored:
            unresolved.append((tuple(sorted(search.violations_of(state))),
                               search.trace_to(state)))

    return ReachReport(
        machine=cm.flat.name,
        mode=mode,
        states_visited=len(search.parents),
        transitions=search.transitions,
        frontier_exhausted=True,
        events_covered=dict(search.coverage),
        violations=tuple(violations),
        deadlocks=tuple(deadlocks),
        hazard_states=len(hazards),
        unresolved_hazards=tuple(unresolved),
        warnings=tuple(warnings),
    )


def check_invariants(bound: BoundMachine, mode: str = MODE_CLOSED
                     ) -> Optional[Trace]:
    """None when fine; otherwise the shortest violating trace (BFS order)."""
    report = explore(bound, mode)
    if report.violations:
        return report.violations[0][1]
    return None


def coverage(bound: BoundMachine, mode: str = MODE_CLOSED) -> Dict[str, int]:
    return explore(bound, mode).events_covered


# --- refinement -----------------------------------------------------------------

@dataclass(frozen=True)
class RefinementFinding:
    check: str                 # "a" | "b" | "c" | "d"
    event: Optional[str]
    detail: str
    trace: Trace


@dataclass(frozen=True)
class RefinementReport:
    abstract: str
    concrete: str
    pairs_checked: int
    abstract_invariant_failures: Tuple[RefinementFinding, ...]
    guard_strengthening_failures: Tuple[RefinementFinding, ...]
    action_equality_failures: Tuple[RefinementFinding, ...]
    new_event_frame_violations: Tuple[RefinementFinding, ...]

    @property
    def passed(self) -> bool:
        return not (self.abstract_invariant_failures
                    or self.guard_strengthening_failures
                    or self.action_equality_failures
                    or self.new_event_frame_violations)

    def findings(self) -> Tuple[RefinementFinding, ...]:
        return (self.abstract_invariant_failures
                + self.guard_strengthening_failures
                + self.action_equality_failures
                + self.new_event_frame_violations)


def check_refinement(project: Project, abstract: str, concrete: str,
                     config: CheckConfig) -> RefinementReport:
    """Check a superposition refinement pair by driven exploration."""
    if abstract not in project.flat_machines:
        raise SpecError(f"unknown machine '{abstract}'")
    bound = BoundMachine.from_project(project, concrete, config)
    abstract_flat = project.flat(abstract)
    if abstract not in bound.flat.chain[:-1]:
        raise NotSuperposition(
            f"{concrete} does not refine {abstract}")
    missing = [v for v in abstract_flat.variables if v not in bound.flat.variables]
    if missing:
        raise NotSuperposition(
            f"abstract variables missing from {concrete}: {', '.join(missing)}")

    cm = bound.compiled()
    search = _Search(cm, MODE_DRIVEN, bound.config.cap)

    abs_inv_fns = [(inv.label, cm.compile_pred_safe(inv.body, on_wd=False))
                   for _, inv in abstract_flat.non_typing_invariants()]
    abs_violated: Dict[tuple, frozenset] = {}

    def abs_violations(state: tuple) -> frozenset:
        cached = abs_violated.get(state)
        if cached is None:
            cached = frozenset(label for label, fn in abs_inv_fns
                               if not fn(state))
            abs_violated[state] = cached
        return cached

    # classify concrete events against the abstraction
    pairs = []          # (compiled event, abstract event name, abs guard fn, eq checks)
    new_events = []     # compiled model events with no abstract counterpart
    compiled_by_name = {ce.name: ce for ce in search.events}
    for ev in bound.flat.events:
        if ev.is_initialisation or ev.kind != "model":
            continue
        ce = compiled_by_name[ev.name]
        targets = _refinement_targets(ev, abstract_flat)
        if not targets:
            new_events.append(ce)
            continue
        act_map = {a.variable: a.expr for a in ev.actions}
        for target in targets:
            target_map = {a.variable: a.expr for a in target.actions}
            guard_fn = cm.compile_pred_safe(
                _conjoin_guards(target), on_wd=False)
            eq_checks = []
            for var in ev.assigned_variables():
                if var not in abstract_flat.variables:
                    continue
                if var in target_map:
                    eq_fn = cm.compile_pred_safe(
                        Compare("=", act_map[var], target_map[var]), on_wd=False)
                    eq_checks.append((var, "equal", eq_fn))
                else:
                    ty = bound.types[var]
                    eq_checks.append((var, "typed", _type_check_fn(cm, var, act_map[var], ty)))
            pairs.append((ce, target.name, guard_fn, eq_checks))

    a_failures: List[RefinementFinding] = []
    b_failures: List[RefinementFinding] = []
    c_failures: List[RefinementFinding] = []
    d_failures: List[RefinementFinding] = []
    b_seen: set = set()
    c_seen: set = set()
    a_seen: set = set()
    d_seen: set = set()

    init = search.start()
    init_abs = abs_violations(init)
    if init_abs:
        a_failures.append(RefinementFinding(
            "a", None,
            f"initial projection violates {', '.join(sorted(init_abs))}",
            search.trace_to(init)))

    while search.queue:
        state = search.queue.popleft()
        pre_abs = abs_violations(state)
        for ce, target_name, guard_fn, eq_checks in pairs:
            if not ce.guard(state):
                continue
            if not guard_fn(state) and (ce.name, target_name) not in b_seen:
                b_seen.add((ce.name, target_name))
                b_failures.append(RefinementFinding(
                    "b", ce.name,
                    f"guards of {ce.name} do not imply guards of {target_name}",
                    search.trace_to(state)))
            for var, how, fn in eq_checks:
                if not fn(state) and (ce.name, var) not in c_seen:
                    c_seen.add((ce.name, var))
                    what = ("assigns a different value than the abstract event"
                            if how == "equal" else "assigns outside the type")
                    c_failures.append(RefinementFinding(
                        "c", ce.name, f"{ce.name} {what} for {var}",
                        search.trace_to(state)))
        for ce in search.events:
            if not ce.guard(state):
                continue
            try:
                succ = ce.fire(state)
            except _WD:
                continue
            search.push(succ, state, ce.name, ce.kind == "environment")
            if ce.kind == "environment":
                continue
            grown = abs_violations(succ) - pre_abs
            if grown:
                is_new = any(ce is ne for ne in new_events)
                key = (ce.name, tuple(sorted(grown)))
                bucket, seen, check = (
                    (d_failures, d_seen, "d") if is_new
                    else (a_failures, a_seen, "a"))
                if key not in seen:
                    seen.add(key)
                    bucket.append(RefinementFinding(
                        check, ce.name,
                        f"{ce.name} breaks abstract {', '.join(sorted(grown))}",
                        search.trace_to(succ)))

    return RefinementReport(
        abstract=abstract,
        concrete=concrete,
        pairs_checked=len(pairs),
        abstract_invariant_failures=tuple(a_failures),
        guard_strengthening_failures=tuple(b_failures),
        action_equality_failures=tuple(c_failures),
        new_event_frame_violations=tuple(d_failures),
    )


def _conjoin_guards(event):
    from .syntax import conjoin
    return conjoin(g.body for g in event.guards)


def _type_check_fn(cm: CompiledMachine, var: str, rhs, ty) -> Callable:
    """state -> bool: the value assigned to var stays within var's type."""
    decode = cm.decode_state
    env = cm.env

    def check(s) -> bool:
        try:
            value = semantics.eval_expr(rhs, decode(s), env)
        except semantics.WDError:
            return False
        return semantics.value_matches_type(value, ty, env)

    return check
