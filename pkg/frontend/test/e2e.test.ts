// End-to-end against a live gateway: spawns `taskscope serve`, submits the
// Citi/Chase task through the dashboard's own client + reducer, answers the
// $301 prompt, and checks the resulting events both for the deny path and
// for the explicitly-authorized approve path on a rerun.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { EventPoller } from "../src/poll.js";
import { applyEvents, forTask, pendingEscalations, type DashboardState } from "../src/state.js";

const PORT = 8673;
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = "e2e-session-token";

let server: ChildProcess;

function authedClient(): GatewayClient {
  return new GatewayClient(BASE, undefined, TOKEN);
}

async function waitForGateway(client: GatewayClient): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      await client.getCases();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error("gateway did not come up");
}

beforeAll(async () => {
  server = spawn("taskscope", ["serve", "--port", String(PORT), "--token", TOKEN],
                 { stdio: "ignore" });
  await waitForGateway(new GatewayClient(BASE));
}, 30_000);

afterAll(() => {
  server.kill("SIGTERM");
});

async function driveCase(decision: "approve" | "deny"): Promise<DashboardState> {
  const client = authedClient();
  const taskId = await client.submitTask("citi_chase", true);
  const state = forTask(taskId);

  const slices = await client.getSlices(taskId);
  expect(Object.keys(slices.services).sort()).toEqual(["Chase", "Citi"]);
  expect(slices.services["Chase"].slices.join("\n")).toContain("assert bal > 1000");
  expect(slices.services["Citi"].slices.join("\n")).toContain('Citi.getBalance("Me@Citi")');

  const poller = new EventPoller(client, taskId, {
    onEvents: (events) => applyEvents(state, events),
    onStale: () => undefined,
  }, 2);

  const answered = new Set<string>();
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline && !state.done) {
    await poller.runOnce();
    for (const entry of pendingEscalations(state)) {
      if (!answered.has(entry.nonce)) {
        answered.add(entry.nonce);
        const outcome = await client.submitDecision(entry.nonce, decision);
        expect(outcome.ok).toBe(true);
        // a second click on the same nonce is rejected by the gateway
        const again = await client.submitDecision(entry.nonce, decision);
        expect(again.ok).toBe(false);
      }
    }
  }
  expect(state.done).toBe(true);
  return state;
}

describe("dashboard end to end", () => {
  it("rejects mutations without the session token", async () => {
    const anonymous = new GatewayClient(BASE);
    await expect(anonymous.submitTask("citi_chase", true)).rejects.toThrow(/unauthorized/);
  });

  it("deny path: the injected $301 transfer raises a prompt and ends denied", async () => {
    const state = await driveCase("deny");

    const prompt = state.escalations.find((e) => e.question.includes("301"));
    expect(prompt, "the $301 call must raise a prompt").toBeDefined();
    expect(prompt!.question).toContain("John@Chase");
    expect(prompt!.status).toBe("denied");

    const injected = state.feed.find((f) => f.kind === "injected");
    expect(injected).toBeDefined();
    expect(injected!.decision).toBe("deny");

    // faithful calls still went through
    const permits = state.feed.filter((f) => f.kind === "faithful" && f.decision === "permit");
    expect(permits.map((f) => f.tool)).toEqual(["Citi.getBalance", "Chase.transfer"]);
  }, 60_000);

  it("approve path on a rerun: the prompt yields an explicitly-authorized permit", async () => {
    const state = await driveCase("approve");

    const injected = state.feed.find((f) => f.kind === "injected");
    expect(injected).toBeDefined();
    expect(injected!.decision).toBe("permit");
    expect(injected!.authorizedBy).toBe("user");
  }, 60_000);
});
