// DOM rendering. The dashboard is read/decide only: the single write path
// is the decision button, which goes through the gateway's escalation
// endpoint and nothing else.

import type { CaseInfo } from "./api.js";
import type { DashboardState } from "./state.js";

export interface Handlers {
  onSubmit(caseId: string, injected: boolean): void;
  onDecision(nonce: string, decision: "approve" | "deny"): void;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderCasePicker(root: HTMLElement, cases: CaseInfo[], handlers: Handlers): void {
  root.replaceChildren();
  const select = document.createElement("select");
  select.id = "case-select";
  for (const c of cases) {
    const option = document.createElement("option");
    option.value = c.case;
    option.textContent = `${c.suite}/${c.case} — ${c.text.slice(0, 80)}`;
    select.appendChild(option);
  }
  const injected = document.createElement("input");
  injected.type = "checkbox";
  injected.id = "with-injection";
  injected.checked = true;
  const injectedLabel = el("label", "inline", " run with forced injection");
  injectedLabel.prepend(injected);
  const button = el("button", "primary", "Submit task") as HTMLButtonElement;
  button.onclick = () => handlers.onSubmit(select.value, injected.checked);
  root.append(select, injectedLabel, button);
}

function decisionBadge(decision: string, authorizedBy?: string): HTMLElement {
  const badge = el("span", `badge ${decision}`, decision);
  if (decision === "permit" && authorizedBy === "user") {
    badge.textContent = "permit (user-authorized)";
    badge.className = "badge user-permit";
  }
  return badge;
}

export function renderDashboard(root: HTMLElement, state: DashboardState, handlers: Handlers): void {
  root.replaceChildren();
  if (state.taskId === null) {
    root.append(el("p", "muted", "Submit a task to watch its slices, calls, and decisions."));
    return;
  }

  if (state.stale) {
    root.append(el("div", "banner stale", "connection lost — showing last known state"));
  }

  const header = el("div", "task-header");
  header.append(el("h2", "", `task ${state.taskId}${state.done ? " — done" : ""}`));
  header.append(el("p", "task-text", state.taskText));
  root.append(header);

  const panels = el("div", "panels");
  for (const [service, panel] of Object.entries(state.panels).sort()) {
    const box = el("section", "panel");
    box.append(el("h3", "", `${service} ${panel.ok ? "✓" : `✗ ${panel.error ?? ""}`}`));
    if (panel.slices.length === 0) {
      box.append(el("p", "muted", "no expected calls (default-deny for everything)"));
    }
    for (const slice of panel.slices) {
      box.append(el("pre", "slice", slice));
    }
    box.append(el("p", "hash", `rules ${panel.artifact_hash.slice(0, 12)} · program ${panel.program_hash.slice(0, 12)}`));
    panels.append(box);
  }
  root.append(panels);

  const pending = state.escalations.filter((e) => e.status === "pending" || e.status === "submitting");
  if (pending.length > 0) {
    const ask = el("section", "escalations");
    ask.append(el("h3", "", "Waiting for you"));
    for (const entry of pending) {
      const card = el("div", "escalation");
      card.append(el("p", "question", entry.question));
      card.append(el("code", "operation", entry.operation));
      const approve = el("button", "approve", "Approve") as HTMLButtonElement;
      const deny = el("button", "deny", "Deny") as HTMLButtonElement;
      approve.disabled = deny.disabled = entry.status === "submitting";
      approve.onclick = () => handlers.onDecision(entry.nonce, "approve");
      deny.onclick = () => handlers.onDecision(entry.nonce, "deny");
      card.append(approve, deny);
      if (entry.note) {
        card.append(el("p", "note", entry.note));
      }
      ask.append(card);
    }
    root.append(ask);
  }

  const feed = el("section", "feed");
  feed.append(el("h3", "", "Call & decision feed"));
  const list = el("ol", "feed-list");
  for (const item of state.feed) {
    const row = el("li", `feed-item ${item.kind}`);
    row.append(decisionBadge(item.decision, item.authorizedBy));
    const what = item.kind === "notice" ? item.detail ?? "" : `${item.tool}${item.label ? ` [${item.label}]` : ""}`;
    row.append(el("span", "what", ` ${what}`));
    list.append(row);
  }
  feed.append(list);
  root.append(feed);
}
