"""Local HTTP session service: the backend of the browser animator.

A thin adapter over the animator: every endpoint response is reconstructible
from one animator/checker call.  Sessions live in memory, are serialized per
session id, and are evicted after 30 minutes idle.  This is a stakeholder
demo tool for localhost, not a deployment target: no authentication, no
persistence.

Status codes: 404 unknown entity, 409 guard not enabled or precondition
failed, 422 type/bounds error.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import HTMLResponse, PlainTextResponse
from pydantic import BaseModel

from . import animator, semantics
from .animator import (
    EmptyHistory, OutOfBounds, ScenarioParseError, ScenarioValidationError,
    Session, TypeMismatch, new_session, parse_scenario, run_scenario,
    step_fire, step_perturb, undo,
)
from .obligations import CheckConfig
from .printer import format_expr
from .project import Project, SpecError
from .semantics import GuardNotEnabled
from .syntax import is_typing_predicate

DEFAULT_TTL_SECONDS = 30 * 60


@dataclass
class _Stored:
    session: Session
    lock: threading.Lock
    created: float
    last_access: float


class SessionStore:
    def __init__(self, ttl: float = DEFAULT_TTL_SECONDS):
        self.ttl = ttl
        self._sessions: Dict[str, _Stored] = {}
        self._lock = threading.Lock()
        self._ids = itertools.count(1)

    def create(self, session: Session) -> str:
        now = time.monotonic()
        with self._lock:
            self._evict(now)
            sid = f"s{next(self._ids)}"
            self._sessions[sid] = _Stored(session, threading.Lock(), now, now)
            return sid

    def get(self, sid: str) -> _Stored:
        now = time.monotonic()
        with self._lock:
            self._evict(now)
            stored = self._sessions.get(sid)
            if stored is None:
                raise HTTPException(404, f"unknown session {sid}")
            stored.last_access = now
            return stored

    def _evict(self, now: float):
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_access > self.ttl]
        for sid in dead:
            del self._sessions[sid]


class CreateSessionBody(BaseModel):
    machine: str
    consts: Optional[Dict[str, int]] = None
    bounds: Optional[Dict[str, Tuple[int, int]]] = None


class FireBody(BaseModel):
    event: str


class PerturbBody(BaseModel):
    variable: str
    value: object


def _value_text(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        inner = ", ".join(f"{k} |-> {_value_text(v)}" for k, v in value.items())
        return "{" + inner + "}"
    raise HTTPException(422, f"unsupported value {value!r}")


def _snapshot(sid: str, session: Session) -> dict:
    flat = session.bound.flat
    return {
        "id": sid,
        "machine": session.machine,
        "state": semantics.state_to_text(session.state, flat.variables),
        "enabled": session.enabled_events(),
        "hazards": list(session.hazards),
        "history_length": len(session.history),
    }


def create_app(project: Project, config: CheckConfig,
               ttl: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="ebskit session service")
    # a localhost demo tool: the browser client may be served from anywhere
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(ttl)

    @app.get("/machines")
    def machines():
        return {
            "machines": list(project.machines),
            "edges": [[concrete, abstract]
                      for concrete, abstract in project.refinement_edges],
        }

    @app.get("/machines/{name}")
    def machine(name: str):
        if name not in project.flat_machines:
            raise HTTPException(404, f"unknown machine {name}")
        flat = project.flat(name)
        env = semantics.resolve_constants(flat.context, config.consts)
        types = semantics.infer_types(flat, env)
        bounds = {v: list(config.bounds[v]) for v, ty in types.items()
                  if isinstance(ty, semantics.NatT) and v in config.bounds}
        return {
            "name": name,
            "refines": project.machines[name].refines,
            "variables": [{"name": v, "type": str(types[v])}
                          for v in flat.variables],
            "sets": {s: [e.name for e in extent]
                     for s, extent in env.extents.items()},
            "bounds": bounds,
            "invariants": [{
                "label": inv.label,
                "text": format_expr(inv.body),
                "typing": is_typing_predicate(inv.body, flat.variables) is not None,
                "origin": origin,
            } for origin, inv in flat.invariants],
            "events": [{
                "name": ev.name,
                "kind": ev.kind,
                "refines": list(ev.refines),
                "guards": [{"label": g.label, "text": format_expr(g.body)}
                           for g in ev.guards],
                "actions": [{"label": a.label, "variable": a.variable,
                             "text": format_expr(a.expr)} for a in ev.actions],
            } for ev in flat.events],
        }

    @app.post("/sessions", status_code=201)
    def create(body: CreateSessionBody):
        if body.machine not in project.flat_machines:
            raise HTTPException(404, f"unknown machine {body.machine}")
        session_config = CheckConfig(
            bounds={**dict(config.bounds), **(body.bounds or {})},
            consts={**dict(config.consts), **(body.consts or {})},
            cap=config.cap,
            full_enum_limit=config.full_enum_limit,
        )
        try:
            session = new_session(project, body.machine, session_config)
        except SpecError as err:
            raise HTTPException(422, str(err))
        sid = store.create(session)
        return _snapshot(sid, session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        stored = store.get(sid)
        with stored.lock:
            return _snapshot(sid, stored.session)

    @app.post("/sessions/{sid}/fire")
    def fire(sid: str, body: FireBody):
        stored = store.get(sid)
        with stored.lock:
            flat = stored.session.bound.flat
            event = flat.event(body.event)
            if event is None or event.is_initialisation:
                raise HTTPException(404, f"unknown event {body.event}")
            try:
                stored.session = step_fire(stored.session, body.event)
            except GuardNotEnabled as err:
                raise HTTPException(409, {
                    "error": "guard-not-enabled",
                    "event": body.event,
                    "failing_guards": list(err.failing),
                })
            return _snapshot(sid, stored.session)

    @app.post("/sessions/{sid}/perturb")
    def perturb(sid: str, body: PerturbBody):
        stored = store.get(sid)
        with stored.lock:
            flat = stored.session.bound.flat
            if body.variable not in flat.variables:
                raise HTTPException(404, f"unknown variable {body.variable}")
            try:
                stored.session = step_perturb(stored.session, body.variable,
                                              _value_text(body.value))
            except (TypeMismatch, OutOfBounds, SpecError) as err:
                raise HTTPException(422, str(err))
            return _snapshot(sid, stored.session)

    @app.post("/sessions/{sid}/undo")
    def undo_step(sid: str):
        stored = store.get(sid)
        with stored.lock:
            try:
                stored.session = undo(stored.session)
            except EmptyHistory as err:
                raise HTTPException(409, str(err))
            return _snapshot(sid, stored.session)

    @app.get("/sessions/{sid}/trace")
    def trace(sid: str):
        stored = store.get(sid)
        with stored.lock:
            session = stored.session
            text = session.trace().to_jsonl(session.bound.flat.variables)
        return PlainTextResponse(text, media_type="application/jsonl")

    @app.post("/scenarios/run")
    async def scenarios_run(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            scenario = parse_scenario(text)
            result = run_scenario(scenario, project, config)
        except (ScenarioParseError, ScenarioValidationError) as err:
            raise HTTPException(422, str(err))
        except SpecError as err:
            raise HTTPException(422, str(err))
        flat = project.flat(scenario.machine)
        return {
            "machine": result.machine,
            "passed": result.passed,
            "steps_executed": result.steps_executed,
            "failure": None if result.failure is None else {
                "step": result.failure[0], "reason": result.failure[1]},
            "final_state": semantics.state_to_text(result.final_state,
                                                   flat.variables),
            "trace": result.trace.to_records(flat.variables),
        }

    @app.get("/", response_class=HTMLResponse)
    def index():
        return ("<html><body><h1>ebskit session service</h1>"
                "<p>See GET /machines, POST /sessions, GET /docs.</p>"
                "</body></html>")

    return app
