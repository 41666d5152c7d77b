// Browser glue: wire the rendered markup to the service. One active
// session per tab; every mutation is a sequential API call and the view is
// re-rendered from the response - there is no optimistic client state.

import { ApiClient, ApiError } from "./api.js";
import {
  renderMachinePicker,
  renderScenarioOutcome,
  renderSession,
} from "./render.js";
import { MachineDescriptor, Snapshot } from "./types.js";

const api = new ApiClient(
  (window as unknown as { EBS_API_BASE?: string }).EBS_API_BASE ?? "",
);

let descriptor: MachineDescriptor | null = null;
let snapshot: Snapshot | null = null;
let busy = false;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function notice(text: string, isError = false): void {
  const node = el("notice");
  node.textContent = text;
  node.className = isError ? "notice error" : "notice";
}

async function refresh(): Promise<void> {
  if (!descriptor || !snapshot) {
    return;
  }
  const trace = await api.trace(snapshot.id);
  el("session").innerHTML = renderSession(descriptor, snapshot, trace);
  wireSession();
}

async function act(operation: () => Promise<Snapshot>): Promise<void> {
  if (busy || !snapshot) {
    return;
  }
  busy = true;
  try {
    snapshot = await operation();
    notice("");
  } catch (err) {
    if (err instanceof ApiError) {
      const guard = err.guardFailure();
      if (guard) {
        notice(
          `${guard.event} is not enabled; failing guards: ` +
            guard.failing_guards.join(", "),
          true,
        );
        snapshot = await api.session(snapshot.id); // re-sync a stale view
      } else {
        notice(String(err.detail), true);
      }
    } else {
      notice(`service unreachable: ${err}`, true);
    }
  } finally {
    busy = false;
  }
  await refresh();
}

function wireSession(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>(
    "button.event-button",
  )) {
    button.addEventListener("click", () =>
      act(() => api.fire(snapshot!.id, button.dataset.event!)),
    );
  }
  for (const input of document.querySelectorAll<HTMLInputElement>(
    "[data-perturb]",
  )) {
    input.addEventListener("change", () => {
      const variable = input.dataset.perturb!;
      let value: unknown = input.value;
      if (input.type === "checkbox") {
        value = input.checked;
      } else if (input.type === "number") {
        value = Number(input.value);
      }
      void act(() => api.perturb(snapshot!.id, variable, value));
    });
  }
  el("undo").addEventListener("click", () =>
    act(() => api.undo(snapshot!.id)),
  );
  el("download-trace").addEventListener("click", (event) => {
    event.preventDefault();
    void api.trace(snapshot!.id).then((records) => {
      const blob = new Blob(
        [records.map((r) => JSON.stringify(r)).join("\n") + "\n"],
        { type: "application/jsonl" },
      );
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${snapshot!.machine}.trace.jsonl`;
      link.click();
      URL.revokeObjectURL(link.href);
    });
  });
}

async function selectMachine(name: string): Promise<void> {
  if (!name) {
    return;
  }
  try {
    descriptor = await api.machine(name);
    snapshot = await api.createSession(name); // old session is discarded
    notice("");
    await refresh();
  } catch (err) {
    notice(`cannot reach the session service: ${err}`, true);
  }
}

async function boot(): Promise<void> {
  try {
    const list = await api.machines();
    el("picker").innerHTML = renderMachinePicker(list);
    el("machine-picker").addEventListener("change", (event) => {
      void selectMachine((event.target as HTMLSelectElement).value);
    });
    notice("");
  } catch (err) {
    notice(
      `cannot reach the session service: ${err}. Start it with ` +
        `"ebs serve --corpus" and reload.`,
      true,
    );
    setTimeout(() => void boot(), 3000); // retry banner behavior
  }

  el("run-scenario").addEventListener("click", () => {
    const text = (el("scenario-text") as HTMLTextAreaElement).value;
    void api
      .runScenario(text)
      .then((outcome) => {
        el("scenario-result").innerHTML = renderScenarioOutcome(outcome);
      })
      .catch((err) => notice(String(err), true));
  });
}

window.addEventListener("DOMContentLoaded", () => void boot());
