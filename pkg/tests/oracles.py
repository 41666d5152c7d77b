"""Independent brute-force oracles.

These deliberately share no code with the production discharge/exploration
paths: plain product-domain enumeration and fixpoint reachability over the
tree-walking reference evaluator.  Checker and obligation results are
compared against them for exact agreement.
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Optional, Tuple

from ebskit import semantics
from ebskit.obligations import BoundMachine, ProofObligation
from ebskit.semantics import NatT, WDError


def _domains(bound: BoundMachine) -> List[Tuple[str, list]]:
    out = []
    for var in bound.flat.variables:
        ty = bound.types[var]
        nat_bounds = bound.config.bound_for(var) if isinstance(ty, NatT) else None
        out.append((var, semantics.domain_values(ty, bound.env, nat_bounds)))
    return out


def oracle_discharge(po: ProofObligation, bound: BoundMachine):
    """(status, counterexample) by full product-domain enumeration."""
    domains = _domains(bound)
    names = [v for v, _ in domains]
    any_hyp = False
    for combo in itertools.product(*(vals for _, vals in domains)):
        state = dict(zip(names, combo))
        ok = True
        for hyp in po.hypotheses:
            try:
                if not semantics.eval_pred(hyp, state, bound.env):
                    ok = False
                    break
            except WDError:
                ok = False
                break
        if not ok:
            continue
        any_hyp = True
        try:
            holds = semantics.eval_pred(po.goal, state, bound.env)
        except WDError:
            holds = False
        if not holds:
            return "failed", state
    if not any_hyp:
        return "vacuous", None
    return "discharged", None


def oracle_reach(bound: BoundMachine, mode: str):
    """Fixpoint reachability over the reference evaluator.

    Returns a comparable summary: states visited, transitions, coverage,
    model-fault invariant labels (edges where a model event grows the
    violated set), deadlocked state count, and whether any state deadlocks.
    """
    flat = bound.flat
    env = bound.env
    kinds = {"closed": ("model",), "driven": ("model", "environment")}[mode]
    events = [ev for ev in flat.events
              if not ev.is_initialisation and ev.kind in kinds]

    def violated(state) -> frozenset:
        return frozenset(semantics.violated_invariants(flat, state, env))

    init = semantics.initial_state(flat, env)

    def key(state):
        return tuple(state[v] for v in flat.variables)

    reachable: Dict[tuple, dict] = {key(init): init}
    frontier = [init]
    while frontier:
        new_frontier = []
        for state in frontier:
            for ev in events:
                enabled, _, _ = semantics.guard_status(ev, state, env)
                if not enabled:
                    continue
                try:
                    succ = semantics.fire_event(state, env, flat, ev.name)
                except WDError:
                    continue
                k = key(succ)
                if k not in reachable:
                    reachable[k] = succ
                    new_frontier.append(succ)
        frontier = new_frontier

    transitions = 0
    coverage = {ev.name: 0 for ev in events}
    coverage["INITIALISATION"] = 1
    fault_labels = set()
    deadlocked = 0
    init_faults = violated(init)
    fault_labels |= init_faults
    for state in reachable.values():
        pre = violated(state)
        any_enabled = False
        for ev in events:
            enabled, _, _ = semantics.guard_status(ev, state, env)
            if not enabled:
                continue
            any_enabled = True
            try:
                succ = semantics.fire_event(state, env, flat, ev.name)
            except WDError:
                continue
            transitions += 1
            coverage[ev.name] += 1
            if ev.kind == "model":
                fault_labels |= (violated(succ) - pre)
        if not any_enabled:
            deadlocked += 1
    return {
        "states": len(reachable),
        "transitions": transitions,
        "coverage": coverage,
        "fault_labels": frozenset(fault_labels),
        "deadlocked_states": deadlocked,
    }


def reach_summary(report) -> dict:
    """The comparable summary of a production ReachReport."""
    return {
        "states": report.states_visited,
        "transitions": report.transitions,
        "coverage": dict(report.events_covered),
        "fault_labels": frozenset(label for label, _ in report.violations),
        "deadlocked_states": len(report.deadlocks),
    }


def iterative_deepening_first_fault(bound: BoundMachine, mode: str,
                                    max_depth: int = 20) -> Optional[int]:
    """Minimal number of steps to reach a model-fault edge (or a violating
    initial state), by iterative deepening; None if unreachable in bound."""
    flat = bound.flat
    env = bound.env
    kinds = {"closed": ("model",), "driven": ("model", "environment")}[mode]
    events = [ev for ev in flat.events
              if not ev.is_initialisation and ev.kind in kinds]

    def violated(state) -> frozenset:
        return frozenset(semantics.violated_invariants(flat, state, env))

    init = semantics.initial_state(flat, env)
    if violated(init):
        return 0

    def dfs(state, pre, depth_left):
        if depth_left == 0:
            return None
        for ev in events:
            enabled, _, _ = semantics.guard_status(ev, state, env)
            if not enabled:
                continue
            try:
                succ = semantics.fire_event(state, env, flat, ev.name)
            except WDError:
                continue
            post = violated(succ)
            if ev.kind == "model" and (post - pre):
                return 1
            deeper = dfs(succ, post, depth_left - 1)
            if deeper is not None:
                return deeper + 1
        return None

    for depth in range(1, max_depth + 1):
        found = dfs(init, frozenset(), depth)
        if found is not None:
            return found
    return None
