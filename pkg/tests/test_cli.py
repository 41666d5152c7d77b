import json
from pathlib import Path

import pytest

from ebskit.cli import main
from ebskit.corpus import corpus_source_files, mutant_text, scenario_text

from .conftest import DATA


@pytest.fixture()
def corpus_on_disk(tmp_path):
    """The corpus written out as plain files, the way a user would edit it."""
    paths = []
    for name, text in corpus_source_files().items():
        target = tmp_path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        if name.endswith(".ebs"):
            paths.append(str(target))
    bounds = tmp_path / "bounds.ini"
    bounds.write_text(
        "[bounds]\nbloodPumpingTime = 0 320\nnoFlowDetectionTime = 0 130\n"
        "fillingBloodVolume = 0 450\ndialysateTemperature = 0 50\n"
        "actualBloodFlow = 0 150\n[consts]\nSetBloodFlow = 100\n",
        encoding="utf-8")
    return tmp_path, paths, str(bounds)


def test_check_corpus_machine_is_green(capsys):
    rc = main(["check", "--corpus", "--machine", "MCP0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "failed: 0" in out
    assert "bounded up to" in out


def test_check_explicit_paths_and_report(corpus_on_disk, capsys):
    tmp_path, paths, bounds = corpus_on_disk
    report = tmp_path / "report.jsonl"
    rc = main(["check", "--machine", "MBP0", "--bounds", bounds,
               "--report", str(report)] + paths)
    assert rc == 0
    records = [json.loads(line) for line in report.read_text().splitlines()]
    kinds = {r["type"] for r in records}
    assert kinds >= {"obligation", "machine"}
    assert all(r["status"] != "failed" for r in records
               if r["type"] == "obligation")


def test_check_mutated_corpus_fails(tmp_path, corpus_on_disk, capsys):
    base, paths, bounds = corpus_on_disk
    mutated = tmp_path / "mcp2_mutant.ebs"
    mutated.write_text(mutant_text("m3_tick_cap.ebs"), encoding="utf-8")
    keep = [p for p in paths]
    # replace MCP2 by its mutant: load originals plus the mutant last wins is
    # not a thing - machines are unique - so rewrite the patient file
    patient = next(p for p in paths if "patient_connection" in p)
    text = Path(patient).read_text()
    start = text.index("MACHINE MCP2")
    end = text.index("MACHINE MCP3")
    Path(patient).write_text(text[:start] + mutated.read_text() + "\n"
                             + text[end:])
    rc = main(["check", "--machine", "MCP2", "--bounds", bounds] + keep)
    out = capsys.readouterr().out
    assert rc == 1
    assert "counterexample" in out or "violation" in out


def test_cli_report_records_equal_library_records(tmp_path, manifest):
    import json as _json

    from ebskit.corpus import load_corpus
    from ebskit.obligations import (
        BoundMachine, CheckConfig, discharge_all, obligation_record,
    )

    report_path = tmp_path / "r.jsonl"
    rc = main(["check", "--corpus", "--machine", "MBP1",
               "--report", str(report_path)])
    assert rc == 0
    cli_records = [line for line in report_path.read_text().splitlines()
                   if _json.loads(line)["type"] == "obligation"]
    project, _ = load_corpus()
    bound = BoundMachine.from_project(
        project, "MBP1",
        CheckConfig(bounds=manifest.bounds, consts=manifest.consts))
    library_records = [
        _json.dumps({"type": "obligation", "machine": "MBP1",
                     **obligation_record(po)})
        for po in discharge_all(bound)]
    assert cli_records == library_records    # byte-for-byte


def test_check_nonexistent_file_is_usage_error(capsys):
    rc = main(["check", "/nonexistent/nowhere.ebs"])
    assert rc == 2


def test_parse_errors_are_reported_with_positions(tmp_path, capsys):
    bad = tmp_path / "bad.ebs"
    bad.write_text("MACHINE M SEES C VARIABLES EVENTS END", encoding="utf-8")
    rc = main(["check", str(bad)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "expected" in err


def test_refine_chain_pair(capsys):
    assert main(["refine", "--corpus", "MCP0", "MCP1"]) == 0
    out = capsys.readouterr().out
    assert "pass" in out


def test_refine_unrelated_machines(capsys):
    assert main(["refine", "--corpus", "MCP0", "MTM0"]) == 2


def test_refine_mutant_fails_with_witness(tmp_path, corpus_on_disk, capsys):
    base, paths, bounds = corpus_on_disk
    patient = next(p for p in paths if "patient_connection" in p)
    text = Path(patient).read_text()
    start = text.index("MACHINE MCP1")
    end = text.index("MACHINE MCP2")
    Path(patient).write_text(text[:start] + mutant_text("m4_dropped_action.ebs")
                             + "\n" + text[end:])
    rc = main(["refine", "--bounds", bounds, "MCP0", "MCP1"] + paths)
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out and "witness" in out


def test_pos_lists_every_obligation(capsys):
    rc = main(["pos", "--corpus", "--machine", "MCP0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "MCP0/stopBloodPumping/inv5/INV" in out
    assert "0 failed" in out


def test_animate_scenario_pass_and_trace(tmp_path, capsys):
    scn = tmp_path / "noflow.scn"
    scn.write_text(scenario_text("s06_bp0_noflow_timeout.scn"),
                   encoding="utf-8")
    trace = tmp_path / "out.trace.jsonl"
    rc = main(["animate", "--corpus", str(scn), "--trace", str(trace)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "pass" in out
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert records[0]["event"] == "INITIALISATION"
    assert records[-1]["state"]["alarm"] == "ALM382"


def test_animate_wrong_assertion_fails_at_the_assert_step(tmp_path, capsys):
    scn = tmp_path / "wrong.scn"
    scn.write_text((DATA / "wrong_alarm.scn").read_text(), encoding="utf-8")
    rc = main(["animate", "--corpus", str(scn)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "assertion failed" in out


def test_animate_malformed_scenario_is_usage_error(tmp_path, capsys):
    scn = tmp_path / "broken.scn"
    scn.write_text("machine MCP0\nfire\n", encoding="utf-8")
    rc = main(["animate", "--corpus", str(scn)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "line 2" in err


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 2
    assert main(["check"]) == 2        # neither paths nor --corpus
