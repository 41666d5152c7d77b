// Thin fetch wrapper over the session service. Mutations are funneled
// through sequential calls; the UI renders only what comes back.

import {
  GuardFailure,
  MachineDescriptor,
  MachineList,
  ScenarioOutcome,
  Snapshot,
  TraceRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }

  guardFailure(): GuardFailure | null {
    const d = this.detail as { error?: string } | null;
    if (this.status === 409 && d && d.error === "guard-not-enabled") {
      return this.detail as GuardFailure;
    }
    return null;
  }
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = (await response.json()).detail;
      } catch {
        detail = await response.text();
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  machines(): Promise<MachineList> {
    return this.request<MachineList>("/machines");
  }

  machine(name: string): Promise<MachineDescriptor> {
    return this.request<MachineDescriptor>(`/machines/${name}`);
  }

  createSession(machine: string): Promise<Snapshot> {
    return this.post<Snapshot>("/sessions", { machine });
  }

  session(id: string): Promise<Snapshot> {
    return this.request<Snapshot>(`/sessions/${id}`);
  }

  fire(id: string, event: string): Promise<Snapshot> {
    return this.post<Snapshot>(`/sessions/${id}/fire`, { event });
  }

  perturb(id: string, variable: string, value: unknown): Promise<Snapshot> {
    return this.post<Snapshot>(`/sessions/${id}/perturb`, { variable, value });
  }

  undo(id: string): Promise<Snapshot> {
    return this.post<Snapshot>(`/sessions/${id}/undo`);
  }

  async trace(id: string): Promise<TraceRecord[]> {
    const response = await fetch(`${this.base}/sessions/${id}/trace`);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    const text = await response.text();
    return text
      .trim()
      .split("\n")
      .filter((line) => line.length > 0)
      .map((line) => JSON.parse(line) as TraceRecord);
  }

  async runScenario(text: string): Promise<ScenarioOutcome> {
    const response = await fetch(`${this.base}/scenarios/run`, {
      method: "POST",
      headers: { "Content-Type": "text/plain" },
      body: text,
    });
    if (!response.ok) {
      let detail: unknown;
      try {
        detail = (await response.json()).detail;
      } catch {
        detail = await response.text();
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as ScenarioOutcome;
  }
}
