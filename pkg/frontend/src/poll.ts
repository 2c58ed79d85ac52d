// Long-poll loop for one task's event feed.
//
// Connection loss flips the stale flag (the UI shows a banner) and retries
// with backoff; recovery resumes from the cursor, so nothing is lost and
// duplicates are handled by the reducer.

import type { GatewayClient, GatewayEvent } from "./api.js";

export interface PollerHooks {
  onEvents(events: GatewayEvent[]): void;
  onStale(stale: boolean): void;
}

export class EventPoller {
  private stopped = false;
  private cursor = 0;

  constructor(
    private readonly client: GatewayClient,
    private readonly taskId: string,
    private readonly hooks: PollerHooks,
    private readonly timeoutSec = 10,
    private readonly retryMs = 1000,
  ) {}

  stop(): void {
    this.stopped = true;
  }

  async runOnce(): Promise<boolean> {
    try {
      const batch = await this.client.pollEvents(this.taskId, this.cursor, this.timeoutSec);
      this.cursor = Math.max(this.cursor, batch.next);
      this.hooks.onStale(false);
      if (batch.events.length > 0) {
        this.hooks.onEvents(batch.events);
      }
      return true;
    } catch {
      this.hooks.onStale(true);
      return false;
    }
  }

  async run(): Promise<void> {
    while (!this.stopped) {
      const ok = await this.runOnce();
      if (!ok && !this.stopped) {
        await new Promise((resolve) => setTimeout(resolve, this.retryMs));
      }
    }
  }
}
