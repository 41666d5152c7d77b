"""Acceptance suite: one test per acceptance criterion, each printing a
pass/fail line (visible even under pytest's capture).  Tolerances are exact:
the state space is discrete, so every comparison is equality; the only
numeric tolerance is the 60 s wall-clock budget of the closed-mode sweep.
"""

import random
import string
import sys
import time

import pytest

from ebskit import semantics
from ebskit.animator import parse_scenario, run_scenario
from ebskit.checker import (
    MODE_CLOSED, MODE_DRIVEN, check_refinement, explore,
)
from ebskit.corpus import load_mutant, scenario_text
from ebskit.obligations import (
    BoundMachine, CheckConfig, discharge, generate_pos, report,
)
from ebskit.parser import parse_source, parse_source_tolerant
from ebskit.project import resolve

from .generators import random_machine_source
from .oracles import oracle_discharge, oracle_reach, reach_summary

WALL_BUDGET_SECONDS = 60.0
FUZZ_INPUTS = 100_000
ORACLE_CASES = 100
REPLAY_RUNS = 100


def _criterion(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else "")
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def _replay_trace(trace, bound):
    """Re-validate a trace through the reference semantics; returns the
    final state it reaches."""
    state = dict(trace.initial)
    for step in trace.steps:
        if step.perturbed:
            state = dict(step.state)
        else:
            state = semantics.fire_event(state, bound.env, bound.flat,
                                         step.event)
            assert state == step.state
    return state


def test_a1_corpus_green_closed_mode(project, manifest, bind):
    start = time.perf_counter()
    units_ok = (set(manifest.contexts) == set(project.contexts)
                and set(manifest.machines) == set(project.machines))
    for name in manifest.machines:
        bind(name)                      # resolves constants, infers types
    failed = 0
    violations = 0
    for name in manifest.machines:
        bound = bind(name)
        failed += report(bound).failed
        violations += len(explore(bound, MODE_CLOSED).violations)
    wall = time.perf_counter() - start
    _criterion(
        "A1 corpus green: every unit parses, resolves and type-checks; "
        "closed-mode check of all 11 machines has 0 failed obligations "
        "and 0 invariant violations",
        units_ok and failed == 0 and violations == 0 and wall < WALL_BUDGET_SECONDS,
        f"{len(manifest.units())} units, failed={failed}, "
        f"violations={violations}, wall={wall:.1f}s < {WALL_BUDGET_SECONDS:.0f}s")


def test_a2_refinement_chains_and_mutants(project, manifest, config):
    chains_ok = True
    for chain in manifest.chains:
        for abstract, concrete in zip(chain, chain[1:]):
            if not check_refinement(project, abstract, concrete, config).passed:
                chains_ok = False
    mutants_caught = 0
    for m in manifest.mutants:
        mutated = load_mutant(m.file)
        bound = BoundMachine.from_project(mutated, m.target, config)
        caught_here = False
        for expect in m.expect:
            if expect.startswith("scenario:"):
                file = expect.split(":", 1)[1] + ".scn"
                result = run_scenario(parse_scenario(scenario_text(file), file),
                                      mutated, config)
                assert not result.passed, (m.file, expect)
                index, reason = result.failure
                # the witness re-validates: replay the trace, then check the
                # failed expectation against the reference evaluator
                final = _replay_trace(result.trace, bound)
                assert final == result.final_state
                if "assertion failed" in reason:
                    step = parse_scenario(scenario_text(file), file).steps[index]
                    assert not semantics.eval_pred(step.predicate, final,
                                                   bound.env)
                caught_here = True
            elif expect == "po":
                failed = [po for po in
                          (discharge(po, bound) for po in generate_pos(bound))
                          if po.status == "failed"]
                assert failed, (m.file, expect)
                po = failed[0]
                for hyp in po.hypotheses:
                    assert semantics.eval_pred(hyp, po.counterexample, bound.env)
                assert not semantics.eval_pred(po.goal, po.counterexample,
                                               bound.env)
                caught_here = True
            elif expect == "closed_invariant":
                reach = explore(bound, MODE_CLOSED)
                assert reach.violations, (m.file, expect)
                label, trace = reach.violations[0]
                final = _replay_trace(trace, bound)
                inv = {i.label: i for _, i in bound.flat.invariants}[label]
                assert not semantics.eval_pred(inv.body, final, bound.env)
                caught_here = True
            elif expect.startswith("refine_"):
                abstract = mutated.machines[m.target].refines
                rr = check_refinement(mutated, abstract, m.target, config)
                findings = {
                    "refine_a": rr.abstract_invariant_failures,
                    "refine_b": rr.guard_strengthening_failures,
                    "refine_c": rr.action_equality_failures,
                    "refine_d": rr.new_event_frame_violations,
                }[expect]
                assert findings, (m.file, expect)
                finding = findings[0]
                final = _replay_trace(finding.trace, bound)
                if expect in ("refine_a", "refine_d"):
                    abstract_flat = mutated.flat(abstract)
                    assert any(
                        not semantics.eval_pred(inv.body, final, bound.env)
                        for _, inv in abstract_flat.non_typing_invariants())
                elif expect == "refine_b":
                    concrete_ev = bound.flat.event(finding.event)
                    assert semantics.guard_status(concrete_ev, final,
                                                  bound.env)[0]
                caught_here = True
        if caught_here:
            mutants_caught += 1
    _criterion(
        "A2 refinement: all three chains pass; every shipped mutant fails "
        "with a concrete witness that re-validates under the reference "
        "evaluator",
        chains_ok and mutants_caught == len(manifest.mutants)
        and len(manifest.mutants) >= 6,
        f"chains ok, {mutants_caught}/{len(manifest.mutants)} mutants caught")


def test_a3_threshold_boundaries(project, manifest, config):
    all_pass = True
    for file, expected in manifest.scenarios.items():
        result = run_scenario(parse_scenario(scenario_text(file), file),
                              project, config)
        if result.passed != (expected == "pass"):
            all_pass = False
    # the boundary pins, stated directly against the kernel:
    from ebskit.animator import new_session, step_fire, step_perturb
    s = new_session(project, "MCP1", config)
    s = step_fire(s, "startBloodPumping")
    s = step_perturb(s, "fillingBloodVolume", "400")
    volume_400_disabled = "fillingBloodVolumeMonitoring" not in s.enabled_events()
    s = step_perturb(s, "fillingBloodVolume", "401")
    s = step_fire(s, "fillingBloodVolumeMonitoring")
    volume_401_alarm = s.state["alarm"] == semantics.EnumV("Alarms", "ALM344")

    s = new_session(project, "MBP0", config)
    s = step_fire(s, "startBloodPumping")
    s = step_perturb(s, "bloodFlow", "FALSE")
    s = step_perturb(s, "noFlowDetectionTime", "120")
    noflow_120_enabled = "noFlowMonitoring" in s.enabled_events()

    s = new_session(project, "MBP1", config)
    s = step_fire(s, "startBloodPumping")
    s = step_perturb(s, "actualBloodFlow", "70")
    flow_70_disabled = "lessBloodFlowMonitoring" not in s.enabled_events()
    s = step_perturb(s, "actualBloodFlow", "69")
    s = step_fire(s, "lessBloodFlowMonitoring")
    flow_69_alarm = s.state["alarm"] == semantics.EnumV("Alarms", "ALM755")

    ok = (all_pass and volume_400_disabled and volume_401_alarm
          and noflow_120_enabled and flow_70_disabled and flow_69_alarm)
    _criterion(
        "A3 threshold boundaries: 400/401 ml, 310/311 s, 120 s, 70%/69%, "
        "41->42 C and 33->32 C all behave per the scenario suite",
        ok, f"{len(manifest.scenarios)} scenarios")


def test_a4_oracle_equivalence(bind):
    # the pump machine, production vs brute force
    bound = bind("MCP0")
    exact = True
    for po in generate_pos(bound):
        got = discharge(po, bound)
        want_status, want_ce = oracle_discharge(po, bound)
        if got.status != want_status or (want_ce is not None
                                         and got.counterexample != want_ce):
            exact = False
    for mode in (MODE_CLOSED, MODE_DRIVEN):
        if reach_summary(explore(bound, mode)) != oracle_reach(bound, mode):
            exact = False

    # one hundred seeded random three-variable machines
    agreed = 0
    for seed in range(ORACLE_CASES):
        source, bounds = random_machine_source(seed)
        project = resolve(parse_source(source))
        rb = BoundMachine.from_project(project, "RM0",
                                       CheckConfig(bounds=bounds))
        case_ok = True
        for po in generate_pos(rb):
            got = discharge(po, rb)
            want_status, want_ce = oracle_discharge(po, rb)
            if got.status != want_status:
                case_ok = False
            elif want_ce is not None and got.counterexample != want_ce:
                case_ok = False
        for mode in (MODE_CLOSED, MODE_DRIVEN):
            if reach_summary(explore(rb, mode)) != oracle_reach(rb, mode):
                case_ok = False
        agreed += int(case_ok)
    _criterion(
        "A4 oracle equivalence: discharge and exploration agree exactly with "
        "an independent brute-force product-domain evaluator",
        exact and agreed == ORACLE_CASES,
        f"MCP0 exact; {agreed}/{ORACLE_CASES} random machines exact")


def test_a5_driven_liveness(bind, manifest):
    deadlock_free = 0
    monitors_covered = True
    for name in manifest.machines:
        reach = explore(bind(name), MODE_DRIVEN)
        deadlock_free += int(reach.deadlock_free)
        for monitor in manifest.expectations[name].monitors:
            if reach.events_covered.get(monitor, 0) < 1:
                monitors_covered = False
    closed_mtm0 = explore(bind("MTM0"), MODE_CLOSED)
    mtm0_initial_deadlock = (not closed_mtm0.deadlock_free
                             and closed_mtm0.deadlocks[0].steps == ())
    _criterion(
        "A5 driven-mode liveness: all 11 machines deadlock-free when driven; "
        "the temperature machine deadlocks at its initial state in closed "
        "mode; every monitor event fires during driven exploration",
        deadlock_free == len(manifest.machines) and mtm0_initial_deadlock
        and monitors_covered,
        f"{deadlock_free}/11 deadlock-free driven")


def test_a6_robustness(project, manifest, config):
    rng = random.Random(20260809)
    vocabulary = (
        list(string.printable) * 2 +
        ["MACHINE", "CONTEXT", "Event", "Where", "Then", "End", "END",
         "partition", "|->", "-->", ":=", "=>", "&", "or", "not", "{", "}",
         "(", ")", ",", ":", "inv1", "grd1", "act1", "x", "y", "0", "42"]
    )
    crashes = 0
    for i in range(FUZZ_INPUTS):
        style = i % 4
        if style == 0:
            text = "".join(rng.choice(string.printable)
                           for _ in range(rng.randrange(0, 60)))
        elif style == 1:
            text = bytes(rng.randrange(256)
                         for _ in range(rng.randrange(0, 40))).decode(
                "latin-1")
        elif style == 2:
            text = " ".join(rng.choice(vocabulary)
                            for _ in range(rng.randrange(0, 30)))
        else:
            base = scenario_text("s01_cp0_pump_cycle.scn") if i % 8 else \
                "MACHINE M VARIABLES x INVARIANTS inv1 x : BOOL EVENTS " \
                "Event INITIALISATION Then act1 x := FALSE End END"
            cut = rng.randrange(len(base))
            text = base[:cut] + rng.choice(vocabulary) + base[cut:]
        try:
            defs, errors = parse_source_tolerant(text)
            assert isinstance(defs, list) and isinstance(errors, list)
        except Exception:
            crashes += 1

    # replay determinism: repeated scenario runs produce byte-identical traces
    deterministic = True
    for file in manifest.scenarios:
        scenario = parse_scenario(scenario_text(file), file)
        flat = project.flat(scenario.machine)
        baseline = run_scenario(scenario, project, config) \
            .trace.to_jsonl(flat.variables)
        for _ in range(REPLAY_RUNS - 1):
            again = run_scenario(scenario, project, config) \
                .trace.to_jsonl(flat.variables)
            if again != baseline:
                deterministic = False
                break
    _criterion(
        "A6 robustness: parser survives 100000 fuzz inputs with errors only; "
        "100 repeated runs of each scenario yield byte-identical traces",
        crashes == 0 and deterministic,
        f"{FUZZ_INPUTS} fuzz inputs, 0 crashes; "
        f"{len(manifest.scenarios)} scenarios x {REPLAY_RUNS} runs")
