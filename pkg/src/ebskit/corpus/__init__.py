"""Built-in model corpus: a hemodialysis-machine safety model.

Three component chains (patient connection, blood pumping, dialysate
temperature monitoring) ship as ``.ebs`` sources together with a manifest of
default bounds, expected verdicts, a scenario suite and a set of mutant
machines for negative testing.  The corpus is a build asset: failure to load
it is a packaging bug, so loading raises rather than reports.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Optional, Tuple

from ..parser import parse_source
from ..project import Project, resolve


@dataclass(frozen=True)
class MachineExpectation:
    name: str
    closed_deadlock_free: bool
    driven_deadlock_free: bool
    closed_violations: int
    driven_violations: int
    po_failed: int
    response_discipline: str          # "clean" | "gaps"
    monitors: Tuple[str, ...]
    vacuity_suspect: Tuple[str, ...]


@dataclass(frozen=True)
class ThresholdExpectation:
    requirement: str
    machine: str
    container: str                     # event name, or "-" for an invariant
    label: str                         # guard/invariant label
    literal: int


@dataclass(frozen=True)
class MutantExpectation:
    file: str
    target: str
    expect: Tuple[str, ...]            # e.g. ("scenario:s03...",) or ("refine_a",)
    note: str


@dataclass(frozen=True)
class CorpusManifest:
    files: Tuple[str, ...]
    contexts: Tuple[str, ...]
    machines: Tuple[str, ...]
    chains: Tuple[Tuple[str, ...], ...]
    bounds: Dict[str, Tuple[int, int]]
    consts: Dict[str, int]
    thresholds: Tuple[ThresholdExpectation, ...]
    alarms: Dict[Tuple[str, str], str]
    expectations: Dict[str, MachineExpectation]
    scenarios: Dict[str, str]          # file -> expected verdict
    mutants: Tuple[MutantExpectation, ...]
    notes: Dict[str, str] = field(default_factory=dict)

    def units(self) -> Tuple[str, ...]:
        return self.contexts + self.machines


def _data_text(*parts: str) -> str:
    node = resources.files(__package__).joinpath("data", *parts)
    return node.read_text(encoding="utf-8")


def load_manifest() -> CorpusManifest:
    cp = configparser.ConfigParser()
    cp.optionxform = str          # variable and event names are case-sensitive
    cp.read_string(_data_text("manifest.ini"))

    corpus = cp["corpus"]
    chains = tuple(tuple(part.strip().split(">"))
                   for part in corpus["chains"].split("|"))
    bounds = {var: tuple(int(x) for x in value.split())
              for var, value in cp["bounds"].items()}
    consts = {name: int(value) for name, value in cp["consts"].items()}

    thresholds = []
    for req, value in cp["thresholds"].items():
        machine, container, label, literal = value.split()
        thresholds.append(ThresholdExpectation(req, machine, container, label,
                                               int(literal)))

    alarms = {}
    for key, value in cp["alarms"].items():
        machine, event = key.split(".")
        alarms[(machine, event)] = value

    expectations = {}
    scenarios = {}
    mutants = []
    for section in cp.sections():
        if section.startswith("machine "):
            name = section.split(None, 1)[1]
            s = cp[section]
            expectations[name] = MachineExpectation(
                name=name,
                closed_deadlock_free=s.getboolean("closed_deadlock_free"),
                driven_deadlock_free=s.getboolean("driven_deadlock_free"),
                closed_violations=s.getint("closed_violations"),
                driven_violations=s.getint("driven_violations"),
                po_failed=s.getint("po_failed"),
                response_discipline=s.get("response_discipline"),
                monitors=tuple(s.get("monitors", "").split()),
                vacuity_suspect=tuple(s.get("vacuity_suspect", "").split()),
            )
        elif section.startswith("scenario "):
            scenarios[section.split(None, 1)[1]] = cp[section]["expected"]
        elif section.startswith("mutant "):
            file = section.split(None, 1)[1]
            s = cp[section]
            mutants.append(MutantExpectation(
                file=file,
                target=s["target"],
                expect=tuple(s["expect"].split()),
                note=s.get("note", ""),
            ))

    notes = dict(cp["notes"]) if cp.has_section("notes") else {}

    return CorpusManifest(
        files=tuple(corpus["files"].split()),
        contexts=tuple(corpus["contexts"].split()),
        machines=tuple(corpus["machines"].split()),
        chains=chains,
        bounds=bounds,
        consts=consts,
        thresholds=tuple(thresholds),
        alarms=alarms,
        expectations=expectations,
        scenarios=scenarios,
        mutants=tuple(mutants),
        notes=notes,
    )


def corpus_definitions(manifest: Optional[CorpusManifest] = None):
    manifest = manifest or load_manifest()
    defs = []
    for file in manifest.files:
        defs.extend(parse_source(_data_text(file), file))
    return defs


def load_corpus() -> Tuple[Project, CorpusManifest]:
    """Parse and resolve the embedded corpus; returns (project, manifest)."""
    manifest = load_manifest()
    project = resolve(corpus_definitions(manifest))
    return project, manifest


def scenario_text(file: str) -> str:
    return _data_text("scenarios", file)


def mutant_text(file: str) -> str:
    return _data_text("mutants", file)


def load_mutant(file: str, manifest: Optional[CorpusManifest] = None) -> Project:
    """The corpus with one machine replaced by its mutant definition."""
    manifest = manifest or load_manifest()
    mutant_defs = parse_source(mutant_text(file), file)
    replaced = {d.name: d for d in mutant_defs}
    defs = []
    for d in corpus_definitions(manifest):
        defs.append(replaced.pop(d.name, d))
    defs.extend(replaced.values())
    return resolve(defs)


def corpus_source_files() -> Dict[str, str]:
    """File name -> source text, for installing the corpus on disk."""
    manifest = load_manifest()
    out = {file: _data_text(file) for file in manifest.files}
    out["manifest.ini"] = _data_text("manifest.ini")
    for scn in manifest.scenarios:
        out[f"scenarios/{scn}"] = scenario_text(scn)
    return out
