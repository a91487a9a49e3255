/**
 * Client-side deployment table state. The table is seeded from
 * GET /deployments and then driven by the event feed: job transition
 * events apply in place, while events that reference jobs the store has
 * never seen (newly submitted ones arrive with no job document) flag a
 * reconcile, after which the owner view refetches the authoritative
 * list. Either path converges the table to the server's state.
 */

import type { Job, StreamEvent } from "./types.js";

export type StoreChange = "none" | "updated" | "reconcile";

export class DeploymentStore {
  private jobs = new Map<string, Job>();

  reset(list: Job[]): void {
    this.jobs = new Map(list.map((job) => [job.id, job]));
  }

  upsert(job: Job): void {
    this.jobs.set(job.id, job);
  }

  get(id: string): Job | undefined {
    return this.jobs.get(id);
  }

  /** Jobs sorted by id; ids are zero-padded so this is creation order. */
  list(): Job[] {
    return [...this.jobs.values()].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  }

  /**
   * Fold one platform event into the table. Returns what the view should
   * do: re-render, refetch the full list, or nothing.
   */
  applyEvent(event: StreamEvent): StoreChange {
    switch (event.kind) {
      case "command.job.submit":
        // the submit command carries no job id, so the new row can only
        // come from the authoritative list
        return "reconcile";
      case "derived.job.transition": {
        const p = event.payload as { job_id?: string; to?: string; provider?: string | null; reason?: string };
        if (!p.job_id || typeof p.to !== "string") return "none";
        const job = this.jobs.get(p.job_id);
        if (!job) return "reconcile";
        job.status = p.to;
        if (p.provider !== undefined) job.provider = p.provider;
        if (p.reason !== undefined) job.reason = p.reason;
        if (p.to === "running" && job.started_at === null) job.started_at = event.ts;
        if (["completed", "stopped", "failed", "expired"].includes(p.to) && job.finished_at === null) {
          job.finished_at = event.ts;
        }
        return "updated";
      }
      case "derived.job.notice": {
        const p = event.payload as { job_id?: string };
        const job = p.job_id ? this.jobs.get(p.job_id) : undefined;
        if (!job) return "none";
        job.notified = true;
        return "updated";
      }
      default:
        return "none";
    }
  }
}
