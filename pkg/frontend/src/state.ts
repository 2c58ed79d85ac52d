// Dashboard state: a pure reducer over gateway events.
//
// Event delivery is at-least-once; entries are deduplicated by the
// gateway-assigned event id and the feed stays sorted by it, so concurrent
// polling and user actions can never reorder what the user sees.

import type { GatewayEvent, ServicePanel } from "./api.js";

export type EscalationStatus = "pending" | "submitting" | "approved" | "denied" | "expired";

export interface EscalationEntry {
  nonce: string;
  service: string;
  question: string;
  operation: string; // the concrete call, operands included
  status: EscalationStatus;
  note?: string; // rejection notices (reused nonce, expiry)
}

export interface FeedEntry {
  id: number;
  kind: string; // faithful | injected | notice
  tool: string;
  decision: string; // permit | deny | escalate | info
  authorizedBy?: string;
  label?: string;
  detail?: string;
}

export interface DashboardState {
  taskId: string | null;
  taskText: string;
  services: string[];
  panels: Record<string, ServicePanel>;
  feed: FeedEntry[];
  escalations: EscalationEntry[];
  done: boolean;
  stale: boolean;
  seen: Set<number>;
  cursor: number;
}

export function initialState(): DashboardState {
  return {
    taskId: null,
    taskText: "",
    services: [],
    panels: {},
    feed: [],
    escalations: [],
    done: false,
    stale: false,
    seen: new Set(),
    cursor: 0,
  };
}

export function forTask(taskId: string): DashboardState {
  return { ...initialState(), taskId };
}

function pushFeed(state: DashboardState, entry: FeedEntry): void {
  state.feed.push(entry);
  state.feed.sort((a, b) => a.id - b.id);
}

function applyOne(state: DashboardState, event: GatewayEvent): void {
  switch (event.type) {
    case "task_submitted": {
      state.taskText = String(event.text ?? "");
      state.services = (event.services as string[]) ?? [];
      break;
    }
    case "slice_ack": {
      const service = String(event.service);
      state.panels[service] = {
        ok: Boolean(event.ok),
        error: (event.error as string | null) ?? null,
        slices: (event.slices as string[]) ?? [],
        artifact_hash: String(event.artifact_hash ?? ""),
        program_hash: String(event.program_hash ?? ""),
      };
      break;
    }
    case "call_decision": {
      const decision = (event.decision ?? {}) as Record<string, unknown>;
      pushFeed(state, {
        id: event.id,
        kind: String(event.kind ?? "faithful"),
        tool: String(event.tool ?? ""),
        decision: String(decision.kind ?? "unknown"),
        authorizedBy: decision.authorized_by as string | undefined,
        label: event.label as string | undefined,
        detail: (decision.reason as string | undefined) ?? undefined,
      });
      break;
    }
    case "escalation_request": {
      const nonce = String(event.nonce);
      if (!state.escalations.some((e) => e.nonce === nonce)) {
        state.escalations.push({
          nonce,
          service: String(event.service ?? ""),
          question: String(event.question ?? ""),
          operation: String(event.operation ?? ""),
          status: "pending",
        });
      }
      pushFeed(state, {
        id: event.id,
        kind: "notice",
        tool: String(event.service ?? ""),
        decision: "escalate",
        detail: String(event.question ?? ""),
      });
      break;
    }
    case "escalation_resolved": {
      const nonce = String(event.nonce);
      const entry = state.escalations.find((e) => e.nonce === nonce);
      const verdict = event.decision === "approve" ? "approved" : "denied";
      if (entry && entry.status !== verdict) {
        entry.status = verdict;
      }
      pushFeed(state, {
        id: event.id,
        kind: "notice",
        tool: String(event.service ?? ""),
        decision: verdict,
        detail: String(event.operation ?? ""),
      });
      break;
    }
    case "divergence_warning": {
      pushFeed(state, {
        id: event.id,
        kind: "notice",
        tool: "",
        decision: "info",
        detail: `services generated divergent programs: ${JSON.stringify(event.hashes)}`,
      });
      break;
    }
    case "task_done": {
      state.done = true;
      break;
    }
    default:
      break; // unknown event types are ignored, never fatal
  }
}

export function applyEvents(state: DashboardState, events: GatewayEvent[]): DashboardState {
  for (const event of events) {
    if (state.taskId !== null && event.task_id !== state.taskId) {
      continue;
    }
    if (state.seen.has(event.id)) {
      continue; // at-least-once delivery: replays are dropped
    }
    state.seen.add(event.id);
    state.cursor = Math.max(state.cursor, event.id);
    applyOne(state, event);
  }
  return state;
}

export function setStale(state: DashboardState, stale: boolean): DashboardState {
  state.stale = stale;
  return state;
}

export function markSubmitting(state: DashboardState, nonce: string): void {
  const entry = state.escalations.find((e) => e.nonce === nonce);
  if (entry && entry.status === "pending") {
    entry.status = "submitting";
  }
}

// Rejected decisions (reused nonce, expired escalation) surface on the entry
// instead of silently disappearing.
export function markRejected(state: DashboardState, nonce: string, error: string): void {
  const entry = state.escalations.find((e) => e.nonce === nonce);
  if (!entry) {
    return;
  }
  if (entry.status === "submitting") {
    entry.status = "pending";
  }
  entry.note =
    error === "unknown-nonce" || error === "nonce-used"
      ? "already answered or expired"
      : `rejected: ${error}`;
}

export function pendingEscalations(state: DashboardState): EscalationEntry[] {
  return state.escalations.filter((e) => e.status === "pending");
}
