// The recorded over-temperature walkthrough, rendered step by step: the
// view must track each snapshot, end with the ALM377 banner, and reproduce
// identically when re-rendered from the same payloads (page reload).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  renderAlarmBanner,
  renderEventBoard,
  renderHazards,
  renderSession,
} from "../src/render.js";
import {
  MachineDescriptor,
  Snapshot,
  TraceRecord,
} from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(here, "..", "fixtures", name), "utf-8"),
  ) as T;
}

interface Walkthrough {
  steps: { label: string; response: Snapshot }[];
  trace: TraceRecord[];
}

const descriptor = fixture<MachineDescriptor>("machine_mtm0.json");
const walkthrough = fixture<Walkthrough>("walkthrough_mtm0.json");

describe("over-temperature walkthrough", () => {
  it("starts quiet and hazard-free", () => {
    const first = walkthrough.steps[0].response;
    expect(renderAlarmBanner(first)).toContain("no alarm");
    expect(renderHazards(descriptor, first)).toContain("all invariants hold");
  });

  it("shows the pending hazard and lights the monitor after 43 degrees", () => {
    const heated = walkthrough.steps[3].response;
    expect(heated.state.dialysateTemperature).toBe("43");
    const hazards = renderHazards(descriptor, heated);
    expect(hazards).toContain("inv6");
    const board = renderEventBoard(descriptor, heated);
    expect(board).toMatch(
      /<button class="event-button model" data-event="disconnectDialyserPreparation"/,
    );
  });

  it("ends with the ALM377 banner rendered", () => {
    const final = walkthrough.steps[walkthrough.steps.length - 1].response;
    expect(final.state.alarm).toBe("ALM377");
    const banner = renderAlarmBanner(final);
    expect(banner).toContain("banner-alarm");
    expect(banner).toContain("ALM377");
    const page = renderSession(descriptor, final, walkthrough.trace);
    expect(page).toContain("banner-alarm");
    expect(page).toContain("alarm ALM377");
    // hazards cleared by the monitor
    expect(renderHazards(descriptor, final)).toContain("all invariants hold");
  });

  it("renders the perturbed trace steps with the environment badge", () => {
    const final = walkthrough.steps[walkthrough.steps.length - 1].response;
    const page = renderSession(descriptor, final, walkthrough.trace);
    const perturbedRows = page.match(/timeline-step perturbed/g) ?? [];
    expect(perturbedRows).toHaveLength(3);
    expect(page).toContain(`<span class="badge">environment</span>`);
  });

  it("reload reproduces the identical view", () => {
    const final = walkthrough.steps[walkthrough.steps.length - 1].response;
    const once = renderSession(descriptor, final, walkthrough.trace);
    const again = renderSession(
      fixture<MachineDescriptor>("machine_mtm0.json"),
      fixture<Walkthrough>("walkthrough_mtm0.json").steps[4].response,
      fixture<Walkthrough>("walkthrough_mtm0.json").trace,
    );
    expect(again).toBe(once);
  });

  it("every intermediate view derives from its snapshot alone", () => {
    for (const step of walkthrough.steps) {
      const once = renderSession(descriptor, step.response, walkthrough.trace);
      const twice = renderSession(descriptor, step.response, walkthrough.trace);
      expect(twice).toBe(once);
    }
  });
});
