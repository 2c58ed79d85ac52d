import { GatewayClient } from "./api.js";
import { EventPoller } from "./poll.js";
import { renderCasePicker, renderDashboard } from "./render.js";
import {
  applyEvents,
  forTask,
  initialState,
  markRejected,
  markSubmitting,
  setStale,
  type DashboardState,
} from "./state.js";

// session token from ?token=... (kept for the session); reads stay open
const tokenParam = new URLSearchParams(window.location.search).get("token");
if (tokenParam) {
  window.sessionStorage.setItem("taskscope-token", tokenParam);
}
const sessionToken = tokenParam ?? window.sessionStorage.getItem("taskscope-token");
const client = new GatewayClient(window.location.origin, undefined, sessionToken);
const pickerRoot = document.getElementById("picker") as HTMLElement;
const dashboardRoot = document.getElementById("dashboard") as HTMLElement;

let state: DashboardState = initialState();
let poller: EventPoller | null = null;

const handlers = {
  onSubmit(caseId: string, injected: boolean): void {
    void submit(caseId, injected);
  },
  onDecision(nonce: string, decision: "approve" | "deny"): void {
    markSubmitting(state, nonce);
    redraw();
    void client.submitDecision(nonce, decision).then((outcome) => {
      if (!outcome.ok) {
        markRejected(state, nonce, outcome.error ?? "rejected");
        redraw();
      }
      // success arrives through the event feed, which owns ordering
    });
  },
};

function redraw(): void {
  renderDashboard(dashboardRoot, state, handlers);
}

async function submit(caseId: string, injected: boolean): Promise<void> {
  poller?.stop();
  const taskId = await client.submitTask(caseId, injected);
  state = forTask(taskId);
  redraw();
  poller = new EventPoller(client, taskId, {
    onEvents(events) {
      applyEvents(state, events);
      redraw();
    },
    onStale(stale) {
      if (state.stale !== stale) {
        setStale(state, stale);
        redraw();
      }
    },
  });
  void poller.run();
}

async function boot(): Promise<void> {
  const cases = await client.getCases();
  renderCasePicker(pickerRoot, cases, handlers);
  redraw();
}

void boot();
