// HTML string renderers. Pure: the same inputs render the same markup, so
// a page reload that re-fetches the session reproduces the identical view.

import {
  InvariantInfo,
  MachineDescriptor,
  ScenarioOutcome,
  Snapshot,
  TraceRecord,
} from "./types.js";
import {
  alarmBanner,
  BoardEntry,
  eventBoard,
  machineGroups,
  perturbWidgets,
  timeline,
} from "./viewmodel.js";
import { MachineList } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderMachinePicker(list: MachineList, selected?: string): string {
  const groups = machineGroups(list)
    .map(
      (group) => `
  <optgroup label="${escapeHtml(group.label)}">
    ${group.machines
      .map(
        (name) =>
          `<option value="${escapeHtml(name)}"${
            name === selected ? " selected" : ""
          }>${escapeHtml(name)}</option>`,
      )
      .join("\n    ")}
  </optgroup>`,
    )
    .join("");
  return `<select id="machine-picker">
  <option value="">choose a machine…</option>${groups}
</select>`;
}

export function renderAlarmBanner(snapshot: Snapshot): string {
  const alarm = alarmBanner(snapshot);
  if (alarm === null) {
    return `<div class="banner banner-quiet">no alarm</div>`;
  }
  return `<div class="banner banner-alarm" role="alert">alarm ${escapeHtml(
    alarm,
  )}</div>`;
}

export function renderStateTable(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): string {
  const rows = descriptor.variables
    .map(({ name, type }) => {
      const value = snapshot.state[name] ?? "?";
      return `<tr><td class="var">${escapeHtml(name)}</td>` +
        `<td class="type">${escapeHtml(type)}</td>` +
        `<td class="value">${escapeHtml(value)}</td></tr>`;
    })
    .join("\n");
  return `<table class="state-table">
<thead><tr><th>variable</th><th>type</th><th>value</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>`;
}

export function renderHazards(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): string {
  if (snapshot.hazards.length === 0) {
    return `<div class="hazards hazards-none">all invariants hold</div>`;
  }
  const byLabel = new Map<string, InvariantInfo>(
    descriptor.invariants.map((inv) => [inv.label, inv]),
  );
  const items = snapshot.hazards
    .map((label) => {
      const inv = byLabel.get(label);
      const text = inv ? escapeHtml(inv.text) : "";
      return `<li class="hazard"><strong>${escapeHtml(label)}</strong> ${text}</li>`;
    })
    .join("\n");
  return `<div class="hazards hazards-pending">pending hazards:
<ul>${items}</ul></div>`;
}

function renderButton(entry: BoardEntry): string {
  const classes = ["event-button", entry.kind];
  if (!entry.enabled) {
    classes.push("disabled");
  }
  const badge =
    entry.kind === "environment"
      ? `<span class="badge">environment</span>`
      : "";
  return (
    `<button class="${classes.join(" ")}" data-event="${escapeHtml(entry.name)}"` +
    `${entry.enabled ? "" : " disabled"} title="${escapeHtml(entry.guardTitle)}">` +
    `${escapeHtml(entry.name)}${badge}</button>`
  );
}

export function renderEventBoard(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): string {
  const board = eventBoard(descriptor, snapshot);
  return `<div class="event-board">
<h3>model events</h3>
<div class="board-model">
${board.model.map(renderButton).join("\n")}
</div>
<h3>environment events</h3>
<div class="board-environment">
${board.environment.map(renderButton).join("\n")}
</div>
</div>`;
}

export function renderPerturbationPanel(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): string {
  const widgets = perturbWidgets(descriptor, snapshot)
    .map((w) => {
      const name = escapeHtml(w.variable);
      if (w.kind === "toggle") {
        const checked = w.current === "TRUE" ? " checked" : "";
        return `<label class="widget">${name}
  <input type="checkbox" data-perturb="${name}"${checked} /></label>`;
      }
      if (w.kind === "number") {
        const hi = w.hi !== undefined ? ` max="${w.hi}"` : "";
        return `<label class="widget">${name}
  <input type="number" data-perturb="${name}" min="${w.lo ?? 0}"${hi} value="${escapeHtml(
    w.current,
  )}" /></label>`;
      }
      if (w.kind === "dropdown" && w.options) {
        const options = w.options
          .map(
            (option) =>
              `<option${option === w.current ? " selected" : ""}>${escapeHtml(
                option,
              )}</option>`,
          )
          .join("");
        return `<label class="widget">${name}
  <select data-perturb="${name}">${options}</select></label>`;
      }
      return `<label class="widget">${name}
  <input type="text" data-perturb="${name}" value="${escapeHtml(w.current)}" /></label>`;
    })
    .join("\n");
  return `<div class="perturbation-panel">
<h3>environment perturbations</h3>
${widgets}
</div>`;
}

export function renderTimeline(records: TraceRecord[]): string {
  const rows = timeline(records)
    .map((entry) => {
      const classes = entry.perturbed ? "timeline-step perturbed" : "timeline-step";
      const badge = entry.perturbed ? `<span class="badge">environment</span>` : "";
      return (
        `<li class="${classes}"><span class="step">${entry.step}</span> ` +
        `<span class="event">${escapeHtml(entry.event)}</span>${badge} ` +
        `<span class="changes">${escapeHtml(entry.changes)}</span></li>`
      );
    })
    .join("\n");
  return `<ol class="timeline">
${rows}
</ol>`;
}

export function renderScenarioOutcome(outcome: ScenarioOutcome): string {
  const verdict = outcome.passed
    ? `<div class="scenario-verdict pass">pass</div>`
    : `<div class="scenario-verdict fail">fail at step ${outcome.failure!.step}: ${escapeHtml(
        outcome.failure!.reason,
      )}</div>`;
  return `<div class="scenario-outcome">
${verdict}
<div class="scenario-steps">${outcome.steps_executed} step(s) executed</div>
${renderTimeline(outcome.trace)}
</div>`;
}

/** The full session view. Everything derives from the two payloads. */
export function renderSession(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
  trace: TraceRecord[],
): string {
  return `<div class="session" data-session="${escapeHtml(snapshot.id)}">
<h2>${escapeHtml(snapshot.machine)}</h2>
${renderAlarmBanner(snapshot)}
${renderHazards(descriptor, snapshot)}
<div class="columns">
<div class="column">${renderStateTable(descriptor, snapshot)}
${renderPerturbationPanel(descriptor, snapshot)}</div>
<div class="column">${renderEventBoard(descriptor, snapshot)}
<button id="undo" ${snapshot.history_length ? "" : "disabled"}>undo</button>
<a id="download-trace" href="#">download trace</a>
${renderTimeline(trace)}</div>
</div>
</div>`;
}
