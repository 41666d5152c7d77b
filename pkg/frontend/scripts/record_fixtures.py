"""Record API fixtures for the browser client's tests.

Runs the session service in-process and captures the exact JSON the UI
consumes, so the UI test suite runs without a live service.  Re-run after
changing the corpus or the API:

    python3 frontend/scripts/record_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from ebskit.corpus import load_corpus
from ebskit.obligations import CheckConfig
from ebskit.service import create_app

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def dump(name: str, payload):
    OUT.mkdir(exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2) + "\n",
                            encoding="utf-8")
    print(f"wrote fixtures/{name}")


def main():
    project, manifest = load_corpus()
    config = CheckConfig(bounds=manifest.bounds, consts=manifest.consts)
    client = TestClient(create_app(project, config))

    dump("machines.json", client.get("/machines").json())
    dump("machine_mcp0.json", client.get("/machines/MCP0").json())
    dump("machine_mtm0.json", client.get("/machines/MTM0").json())

    created = client.post("/sessions", json={"machine": "MCP0"})
    dump("mcp0_initial.json", created.json())

    # the over-temperature walkthrough: connect, Priming, 43 C, fire monitor
    steps = []
    created = client.post("/sessions", json={"machine": "MTM0"})
    sid = created.json()["id"]
    steps.append({"label": "create session", "method": "POST",
                  "path": "/sessions", "body": {"machine": "MTM0"},
                  "response": created.json()})
    for label, variable, value in [
        ("connect the dialyser", "dialyserState",
         {"Dialysate": "DialyserConnected"}),
        ("select priming", "operation", "Priming"),
        ("heat the dialysate to 43", "dialysateTemperature", 43),
    ]:
        r = client.post(f"/sessions/{sid}/perturb",
                        json={"variable": variable, "value": value})
        steps.append({"label": label, "method": "POST",
                      "path": f"/sessions/{sid}/perturb",
                      "body": {"variable": variable, "value": value},
                      "response": r.json()})
    r = client.post(f"/sessions/{sid}/fire",
                    json={"event": "disconnectDialyserPreparation"})
    steps.append({"label": "fire the preparation monitor", "method": "POST",
                  "path": f"/sessions/{sid}/fire",
                  "body": {"event": "disconnectDialyserPreparation"},
                  "response": r.json()})
    trace = client.get(f"/sessions/{sid}/trace").text
    dump("walkthrough_mtm0.json", {
        "steps": steps,
        "trace": [json.loads(line) for line in trace.strip().splitlines()],
    })


if __name__ == "__main__":
    main()
