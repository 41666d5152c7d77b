"""Interactive and scripted execution of machines.

A session is a value: stepping returns a new session, so undo is just
restoring the recorded predecessor.  Perturbations write a sensor variable
directly; they are first-class but quarantined - trace steps record whether
they came from the model or from the environment, and a session whose state
violates invariants stays usable with the violated labels exposed as
pending hazards.

Scenario files drive a session from a text script, one step per line:

    machine MBP0                  // header: target machine
    const SetBloodFlow 100        // header: numeric constant
    bound noFlowDetectionTime 0 130
    fire startBloodPumping        // fire an enabled event
    fire noFlowTick x121          // repetition: fire 121 times
    perturb bloodFlow FALSE       // write a sensor value
    assert alarm = ALM382         // check a predicate
    expect_enabled noFlowMonitoring
    expect_disabled startBloodPumping

A scenario failure is data in the report, never an exception: replaying a
scenario in front of an audience must not abort mid-demonstration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

from . import semantics
from .checker import Trace, TraceStep
from .obligations import BoundMachine, CheckConfig
from .project import Project, SpecError
from .semantics import (
    GuardNotEnabled, NatT, NatV, Value, WDError, value_from_text,
    value_matches_type, violated_invariants,
)
from .syntax import Node


class TypeMismatch(SpecError):
    pass


class OutOfBounds(SpecError):
    pass


class EmptyHistory(SpecError):
    pass


class ScenarioParseError(SpecError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioValidationError(SpecError):
    pass


# --- sessions -----------------------------------------------------------------

@dataclass(frozen=True)
class HistoryEntry:
    action: str
    prev_state: Dict[str, Value]


@dataclass(frozen=True)
class Session:
    bound: BoundMachine
    state: Dict[str, Value]
    history: Tuple[HistoryEntry, ...] = ()
    trace_steps: Tuple[TraceStep, ...] = ()

    @property
    def machine(self) -> str:
        return self.bound.flat.name

    @property
    def hazards(self) -> Tuple[str, ...]:
        return violated_invariants(self.bound.flat, self.state, self.bound.env)

    def enabled_events(self) -> List[str]:
        return semantics.enabled_events(self.state, self.bound.env, self.bound.flat)

    def trace(self) -> Trace:
        return Trace(self.machine, semantics.initial_state(self.bound.flat,
                                                           self.bound.env),
                     self.trace_steps)


def new_session(project: Project, machine: str, config: CheckConfig) -> Session:
    """A session at the INITIALISATION state with empty history."""
    bound = BoundMachine.from_project(project, machine, config)
    state = semantics.initial_state(bound.flat, bound.env)
    return Session(bound=bound, state=state)


def step_fire(session: Session, event: str) -> Session:
    """Advance by firing an enabled event; GuardNotEnabled otherwise."""
    new_state = semantics.fire_event(session.state, session.bound.env,
                                     session.bound.flat, event)
    entry = HistoryEntry(f"fire {event}", dict(session.state))
    step = TraceStep(event, dict(new_state), perturbed=False)
    return replace(session, state=new_state,
                   history=session.history + (entry,),
                   trace_steps=session.trace_steps + (step,))


def step_perturb(session: Session, variable: str,
                 value: Union[Value, str]) -> Session:
    """Write a sensor variable directly (an environment stimulus)."""
    bound = session.bound
    if variable not in bound.flat.variables:
        raise TypeMismatch(f"unknown variable '{variable}'")
    if isinstance(value, str):
        value = value_from_text(value, bound.env)
    ty = bound.types[variable]
    if not value_matches_type(value, ty, bound.env):
        raise TypeMismatch(
            f"value {semantics.value_to_text(value)} does not fit "
            f"{variable} : {ty}")
    if isinstance(ty, NatT):
        lo, hi = bound.config.bound_for(variable)
        assert isinstance(value, NatV)
        if not lo <= value.value <= hi:
            raise OutOfBounds(
                f"{variable} := {value.value} outside [{lo}, {hi}]")
    new_state = dict(session.state)
    new_state[variable] = value
    entry = HistoryEntry(f"perturb {variable}", dict(session.state))
    step = TraceStep(f"perturb {variable}", dict(new_state), perturbed=True)
    return replace(session, state=new_state,
                   history=session.history + (entry,),
                   trace_steps=session.trace_steps + (step,))


def undo(session: Session) -> Session:
    """Remove the last step and restore its recorded pre-state."""
    if not session.history:
        raise EmptyHistory("nothing to undo")
    entry = session.history[-1]
    return replace(session, state=dict(entry.prev_state),
                   history=session.history[:-1],
                   trace_steps=session.trace_steps[:-1])


# --- scenarios -----------------------------------------------------------------

@dataclass(frozen=True)
class FireStep:
    event: str
    line: int


@dataclass(frozen=True)
class PerturbStep:
    variable: str
    value_text: str
    line: int


@dataclass(frozen=True)
class AssertStep:
    predicate: Node
    text: str
    line: int


@dataclass(frozen=True)
class ExpectStep:
    event: str
    enabled: bool
    line: int


ScenarioStep = Union[FireStep, PerturbStep, AssertStep, ExpectStep]


@dataclass(frozen=True)
class Scenario:
    machine: str
    steps: Tuple[ScenarioStep, ...]
    consts: Dict[str, int] = field(default_factory=dict)
    bounds: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    source: str = "<scenario>"


@dataclass(frozen=True)
class ScenarioReport:
    machine: str
    source: str
    steps_executed: int
    failure: Optional[Tuple[int, str]]        # (expanded step index, reason)
    final_state: Dict[str, Value]
    trace: Trace

    @property
    def passed(self) -> bool:
        return self.failure is None


def _parse_predicate(text: str, line: int) -> Node:
    from .parser import _Parser, tokenize
    tokens, errors = tokenize(text, "<scenario>")
    if errors:
        raise ScenarioParseError(line, str(errors[0]))
    parser = _Parser(tokens, "<scenario>")
    try:
        expr = parser.expression()
    except Exception as err:           # ParseError
        raise ScenarioParseError(line, str(err)) from err
    if parser.peek().kind != "eof":
        raise ScenarioParseError(line, f"trailing input: {parser.peek().text!r}")
    return expr


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    machine: Optional[str] = None
    consts: Dict[str, int] = {}
    bounds: Dict[str, Tuple[int, int]] = {}
    steps: List[ScenarioStep] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0]
        if word == "machine":
            if len(parts) != 2:
                raise ScenarioParseError(line_no, "usage: machine <name>")
            machine = parts[1]
        elif word == "const":
            if len(parts) != 3:
                raise ScenarioParseError(line_no, "usage: const <name> <value>")
            try:
                consts[parts[1]] = int(parts[2])
            except ValueError:
                raise ScenarioParseError(line_no, "constant value must be a natural")
        elif word == "bound":
            if len(parts) != 4:
                raise ScenarioParseError(line_no, "usage: bound <var> <lo> <hi>")
            try:
                bounds[parts[1]] = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ScenarioParseError(line_no, "bounds must be naturals")
        elif word == "fire":
            if len(parts) == 2:
                steps.append(FireStep(parts[1], line_no))
            elif len(parts) == 3 and parts[2].startswith("x"):
                try:
                    times = int(parts[2][1:])
                except ValueError:
                    raise ScenarioParseError(line_no, "repetition must be xN")
                if times < 1:
                    raise ScenarioParseError(line_no, "repetition must be positive")
                steps.extend(FireStep(parts[1], line_no) for _ in range(times))
            else:
                raise ScenarioParseError(line_no, "usage: fire <event> [xN]")
        elif word == "perturb":
            if len(parts) < 3:
                raise ScenarioParseError(line_no, "usage: perturb <var> <value>")
            steps.append(PerturbStep(parts[1], line.split(None, 2)[2], line_no))
        elif word == "assert":
            body = line.split(None, 1)
            if len(body) != 2:
                raise ScenarioParseError(line_no, "usage: assert <predicate>")
            steps.append(AssertStep(_parse_predicate(body[1], line_no),
                                    body[1], line_no))
        elif word in ("expect_enabled", "expect_disabled"):
            if len(parts) != 2:
                raise ScenarioParseError(line_no, f"usage: {word} <event>")
            steps.append(ExpectStep(parts[1], word == "expect_enabled", line_no))
        else:
            raise ScenarioParseError(line_no, f"unknown step '{word}'")

    if machine is None:
        raise ScenarioParseError(0, "missing 'machine <name>' header")
    return Scenario(machine=machine, steps=tuple(steps), consts=consts,
                    bounds=bounds, source=source)


def validate_scenario(scenario: Scenario, project: Project):
    """Referenced machine, events and variables must exist."""
    if scenario.machine not in project.flat_machines:
        raise ScenarioValidationError(f"unknown machine '{scenario.machine}'")
    flat = project.flat(scenario.machine)
    events = set(flat.event_names())
    for step in scenario.steps:
        if isinstance(step, (FireStep, ExpectStep)):
            if step.event not in events or step.event == "INITIALISATION":
                raise ScenarioValidationError(
                    f"line {step.line}: unknown event '{step.event}'")
        elif isinstance(step, PerturbStep):
            if step.variable not in flat.variables:
                raise ScenarioValidationError(
                    f"line {step.line}: unknown variable '{step.variable}'")


def run_scenario(scenario: Scenario, project: Project,
                 base_config: Optional[CheckConfig] = None) -> ScenarioReport:
    """Execute a scenario; the report carries the verdict and the trace."""
    validate_scenario(scenario, project)
    base = base_config or CheckConfig()
    config = CheckConfig(
        bounds={**dict(base.bounds), **scenario.bounds},
        consts={**dict(base.consts), **scenario.consts},
        cap=base.cap,
        full_enum_limit=base.full_enum_limit,
    )
    session = new_session(project, scenario.machine, config)

    failure: Optional[Tuple[int, str]] = None
    executed = 0
    for index, step in enumerate(scenario.steps):
        try:
            if isinstance(step, FireStep):
                session = step_fire(session, step.event)
            elif isinstance(step, PerturbStep):
                session = step_perturb(session, step.variable, step.value_text)
            elif isinstance(step, AssertStep):
                if not semantics.eval_pred(step.predicate, session.state,
                                           session.bound.env):
                    failure = (index, f"assertion failed: {step.text}")
                    break
            elif isinstance(step, ExpectStep):
                enabled = step.event in session.enabled_events()
                if enabled != step.enabled:
                    expected = "enabled" if step.enabled else "disabled"
                    failure = (index, f"expected {step.event} {expected}")
                    break
        except (GuardNotEnabled, TypeMismatch, OutOfBounds, WDError,
                semantics.EvalTypeError) as err:
            failure = (index, str(err))
            break
        executed += 1

    return ScenarioReport(
        machine=scenario.machine,
        source=scenario.source,
        steps_executed=executed,
        failure=failure,
        final_state=dict(session.state),
        trace=session.trace(),
    )
