// Pure derivations from API payloads to what the panels render.
// Nothing here mutates or caches: the rendered view is a function of the
// latest server snapshot, so reloading and re-fetching reproduces it.

import {
  EventInfo,
  MachineDescriptor,
  MachineList,
  Snapshot,
  TraceRecord,
} from "./types.js";

export interface MachineGroup {
  root: string;
  label: string;
  machines: string[]; // abstract-most first
}

const COMPONENT_LABELS: Record<string, string> = {
  MCP0: "patient connection",
  MBP0: "blood pumping",
  MTM0: "temperature monitoring",
};

/** Group machines into refinement chains, abstract-most first. */
export function machineGroups(list: MachineList): MachineGroup[] {
  const abstractOf = new Map<string, string>();
  for (const [concrete, abstract] of list.edges) {
    abstractOf.set(concrete, abstract);
  }
  const rootOf = (name: string): string => {
    let current = name;
    while (abstractOf.has(current)) {
      current = abstractOf.get(current)!;
    }
    return current;
  };
  const groups = new Map<string, string[]>();
  for (const name of list.machines) {
    const root = rootOf(name);
    if (!groups.has(root)) {
      groups.set(root, []);
    }
    groups.get(root)!.push(name);
  }
  return [...groups.entries()].map(([root, machines]) => ({
    root,
    label: COMPONENT_LABELS[root] ?? `${root} chain`,
    machines: machines.sort(
      (a, b) => chainDepth(a, abstractOf) - chainDepth(b, abstractOf),
    ),
  }));
}

function chainDepth(name: string, abstractOf: Map<string, string>): number {
  let depth = 0;
  let current = name;
  while (abstractOf.has(current)) {
    current = abstractOf.get(current)!;
    depth += 1;
  }
  return depth;
}

export interface BoardEntry {
  name: string;
  kind: "model" | "environment";
  enabled: boolean;
  guardTitle: string; // hover text: the guards that gate the event
}

export interface EventBoard {
  model: BoardEntry[];
  environment: BoardEntry[];
}

/** One button per event; enabled flags come from the snapshot only. */
export function eventBoard(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): EventBoard {
  const enabled = new Set(snapshot.enabled);
  const entries = descriptor.events
    .filter((ev) => ev.name !== "INITIALISATION")
    .map((ev) => ({
      name: ev.name,
      kind: ev.kind,
      enabled: enabled.has(ev.name),
      guardTitle: guardTitle(ev),
    }));
  return {
    model: entries.filter((e) => e.kind === "model"),
    environment: entries.filter((e) => e.kind === "environment"),
  };
}

function guardTitle(ev: EventInfo): string {
  if (ev.guards.length === 0) {
    return "always enabled";
  }
  return ev.guards.map((g) => `${g.label}: ${g.text}`).join("\n");
}

/** The alarm banner: prominent whenever the alarm variable is not Null. */
export function alarmBanner(snapshot: Snapshot): string | null {
  const alarm = snapshot.state["alarm"];
  return alarm !== undefined && alarm !== "Null" ? alarm : null;
}

export type WidgetKind = "toggle" | "dropdown" | "number" | "text";

export interface PerturbWidget {
  variable: string;
  kind: WidgetKind;
  options?: string[]; // dropdown
  lo?: number; // number
  hi?: number;
  current: string;
}

/** Typed input widget per variable: toggle for BOOL, dropdown for enums
 * and (small) total-function values, bounded number input for NAT. */
export function perturbWidgets(
  descriptor: MachineDescriptor,
  snapshot: Snapshot,
): PerturbWidget[] {
  return descriptor.variables.map(({ name, type }) => {
    const current = snapshot.state[name];
    if (type === "BOOL") {
      return { variable: name, kind: "toggle" as const, current };
    }
    if (type === "NAT") {
      const bound = descriptor.bounds[name];
      return {
        variable: name,
        kind: "number" as const,
        lo: bound ? bound[0] : 0,
        hi: bound ? bound[1] : undefined,
        current,
      };
    }
    const arrow = type.indexOf("-->");
    if (arrow >= 0) {
      const domain = descriptor.sets[type.slice(0, arrow).trim()];
      const range = descriptor.sets[type.slice(arrow + 3).trim()];
      if (domain && range && domain.length === 1) {
        return {
          variable: name,
          kind: "dropdown" as const,
          options: range.map((r) => `{${domain[0]} |-> ${r}}`),
          current,
        };
      }
      return { variable: name, kind: "text" as const, current };
    }
    const options = descriptor.sets[type];
    if (options) {
      return { variable: name, kind: "dropdown" as const, options, current };
    }
    return { variable: name, kind: "text" as const, current };
  });
}

export interface TimelineEntry {
  step: number;
  event: string;
  perturbed: boolean;
  changes: string; // "var: old -> new" summary against the previous record
}

export function timeline(records: TraceRecord[]): TimelineEntry[] {
  return records.map((record, i) => {
    const changes: string[] = [];
    if (i > 0) {
      const previous = records[i - 1].state;
      for (const [variable, value] of Object.entries(record.state)) {
        if (previous[variable] !== value) {
          changes.push(`${variable}: ${previous[variable]} → ${value}`);
        }
      }
    }
    return {
      step: record.step,
      event: record.event,
      perturbed: record.perturbed,
      changes: changes.join(", ") || "(no change)",
    };
  });
}
