// Contract tests against recorded API fixtures: the derived view must
// reflect the service's answers exactly, with no client-side invention.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  MachineDescriptor,
  MachineList,
  Snapshot,
} from "../src/types.js";
import {
  alarmBanner,
  eventBoard,
  machineGroups,
  perturbWidgets,
  timeline,
} from "../src/viewmodel.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(here, "..", "fixtures", name), "utf-8"),
  ) as T;
}

const machines = fixture<MachineList>("machines.json");
const mcp0 = fixture<MachineDescriptor>("machine_mcp0.json");
const mcp0Initial = fixture<Snapshot>("mcp0_initial.json");

describe("machine picker grouping", () => {
  it("groups machines by refinement chain, abstract-most first", () => {
    const groups = machineGroups(machines);
    expect(groups.map((g) => g.root)).toEqual(["MCP0", "MBP0", "MTM0"]);
    const patient = groups.find((g) => g.root === "MCP0")!;
    expect(patient.machines).toEqual(["MCP0", "MCP1", "MCP2", "MCP3"]);
    expect(patient.label).toBe("patient connection");
  });

  it("covers every machine exactly once", () => {
    const groups = machineGroups(machines);
    const all = groups.flatMap((g) => g.machines).sort();
    expect(all).toEqual([...machines.machines].sort());
  });
});

describe("event board flags", () => {
  it("match the fixture's enabled list exactly", () => {
    const board = eventBoard(mcp0, mcp0Initial);
    const flags = new Map(
      [...board.model, ...board.environment].map((e) => [e.name, e.enabled]),
    );
    const enabled = new Set(mcp0Initial.enabled);
    for (const event of mcp0.events) {
      if (event.name === "INITIALISATION") {
        expect(flags.has(event.name)).toBe(false);
        continue;
      }
      expect(flags.get(event.name)).toBe(enabled.has(event.name));
    }
  });

  it("only the pump start is clickable among model events initially", () => {
    const board = eventBoard(mcp0, mcp0Initial);
    const clickable = board.model.filter((e) => e.enabled).map((e) => e.name);
    expect(clickable).toEqual(["startBloodPumping"]);
  });

  it("splits environment stimuli from model events", () => {
    const board = eventBoard(mcp0, mcp0Initial);
    expect(board.environment.map((e) => e.name)).toEqual([
      "dropFlow",
      "restoreFlow",
    ]);
  });

  it("disabled buttons carry their guards as hover text", () => {
    const board = eventBoard(mcp0, mcp0Initial);
    const stop = board.model.find((e) => e.name === "stopBloodPumping")!;
    expect(stop.enabled).toBe(false);
    expect(stop.guardTitle).toContain("grd1");
    expect(stop.guardTitle).toContain("bloodPumping = BPStarted");
  });
});

describe("alarm banner", () => {
  it("is quiet while the alarm variable is Null", () => {
    expect(alarmBanner(mcp0Initial)).toBeNull();
  });
});

describe("perturbation widgets", () => {
  it("are typed per variable", () => {
    const widgets = perturbWidgets(mcp0, mcp0Initial);
    const byName = new Map(widgets.map((w) => [w.variable, w]));
    expect(byName.get("bloodFlow")!.kind).toBe("toggle");
    expect(byName.get("alarm")!.kind).toBe("dropdown");
    expect(byName.get("alarm")!.options).toContain("ALM382");
  });

  it("give NAT variables their configured bounds", () => {
    const mtm0 = fixture<MachineDescriptor>("machine_mtm0.json");
    const walkthrough = fixture<{
      steps: { response: Snapshot }[];
    }>("walkthrough_mtm0.json");
    const widgets = perturbWidgets(mtm0, walkthrough.steps[0].response);
    const temperature = widgets.find(
      (w) => w.variable === "dialysateTemperature",
    )!;
    expect(temperature.kind).toBe("number");
    expect(temperature.lo).toBe(0);
    expect(temperature.hi).toBe(50);
    const dialyser = widgets.find((w) => w.variable === "dialyserState")!;
    expect(dialyser.kind).toBe("dropdown");
    expect(dialyser.options).toEqual([
      "{Dialysate |-> DialyserConnected}",
      "{Dialysate |-> DialyserDisconnected}",
    ]);
  });
});

describe("timeline", () => {
  it("marks perturbed steps and summarizes changes", () => {
    const walkthrough = fixture<{
      trace: { step: number; event: string; perturbed: boolean;
               state: Record<string, string> }[];
    }>("walkthrough_mtm0.json");
    const entries = timeline(walkthrough.trace);
    expect(entries[0].event).toBe("INITIALISATION");
    expect(entries.filter((e) => e.perturbed)).toHaveLength(3);
    const last = entries[entries.length - 1];
    expect(last.perturbed).toBe(false);
    expect(last.changes).toContain("alarm: Null → ALM377");
  });
});
