// Wire types of the session service. The client renders these verbatim:
// every piece of truth lives server-side.

export interface MachineList {
  machines: string[];
  edges: [string, string][]; // [concrete, abstract]
}

export interface GuardInfo {
  label: string;
  text: string;
}

export interface ActionInfo {
  label: string;
  variable: string;
  text: string;
}

export interface EventInfo {
  name: string;
  kind: "model" | "environment";
  refines: string[];
  guards: GuardInfo[];
  actions: ActionInfo[];
}

export interface InvariantInfo {
  label: string;
  text: string;
  typing: boolean;
  origin: string;
}

export interface VariableInfo {
  name: string;
  type: string;
}

export interface MachineDescriptor {
  name: string;
  refines: string | null;
  variables: VariableInfo[];
  sets: Record<string, string[]>;
  bounds: Record<string, [number, number]>;
  invariants: InvariantInfo[];
  events: EventInfo[];
}

export interface Snapshot {
  id: string;
  machine: string;
  state: Record<string, string>;
  enabled: string[];
  hazards: string[];
  history_length: number;
}

export interface TraceRecord {
  step: number;
  event: string;
  perturbed: boolean;
  state: Record<string, string>;
}

export interface ScenarioOutcome {
  machine: string;
  passed: boolean;
  steps_executed: number;
  failure: { step: number; reason: string } | null;
  final_state: Record<string, string>;
  trace: TraceRecord[];
}

export interface GuardFailure {
  error: string;
  event: string;
  failing_guards: string[];
}
