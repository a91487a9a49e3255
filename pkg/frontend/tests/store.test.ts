import { describe, expect, it } from "vitest";
import { DeploymentStore } from "../src/store.js";
import type { Job, StreamEvent } from "../src/types.js";
import { sampleJob } from "./helpers.js";

let seq = 0;
function event(kind: string, payload: Record<string, unknown>, ts = 2_000_000): StreamEvent {
  seq += 1;
  return { seq, ts, kind, payload };
}

describe("DeploymentStore", () => {
  it("applies transition events in place", () => {
    const store = new DeploymentStore();
    const job = sampleJob({ status: "queued", provider: null, started_at: null });
    store.reset([job]);

    let change = store.applyEvent(
      event("derived.job.transition", { job_id: job.id, from: "queued", to: "scheduled", provider: "pr-0002" }),
    );
    expect(change).toBe("updated");
    change = store.applyEvent(
      event("derived.job.transition", { job_id: job.id, from: "scheduled", to: "running", provider: "pr-0002" }, 2_000_100),
    );
    expect(change).toBe("updated");

    const updated = store.get(job.id)!;
    expect(updated.status).toBe("running");
    expect(updated.provider).toBe("pr-0002");
    expect(updated.started_at).toBe(2_000_100);
  });

  it("stamps finish time on terminal transitions", () => {
    const store = new DeploymentStore();
    const job = sampleJob({ status: "running" });
    store.reset([job]);
    store.applyEvent(event("derived.job.transition", { job_id: job.id, from: "running", to: "expired", reason: "ttl" }, 9_999));
    expect(store.get(job.id)!.status).toBe("expired");
    expect(store.get(job.id)!.finished_at).toBe(9_999);
    expect(store.get(job.id)!.reason).toBe("ttl");
  });

  it("asks for a reconcile on submits and unknown jobs", () => {
    const store = new DeploymentStore();
    expect(store.applyEvent(event("command.job.submit", { kind: "batch" }))).toBe("reconcile");
    expect(store.applyEvent(event("derived.job.transition", { job_id: "job-9999", to: "running" }))).toBe("reconcile");
    expect(store.applyEvent(event("command.provider.heartbeat", {}))).toBe("none");
  });

  it("latches the expiry notice flag", () => {
    const store = new DeploymentStore();
    const job = sampleJob({ kind: "tryme", status: "running" });
    store.reset([job]);
    expect(store.applyEvent(event("derived.job.notice", { job_id: job.id, kind: "tryme_notice" }))).toBe("updated");
    expect(store.get(job.id)!.notified).toBe(true);
  });

  it("lists jobs in id order regardless of insertion order", () => {
    const store = new DeploymentStore();
    store.reset([sampleJob(), sampleJob(), sampleJob()].reverse());
    const ids = store.list().map((j) => j.id);
    expect(ids).toEqual([...ids].sort());
  });

  it("converges to the server state after replaying a mocked stream", () => {
    // the eventual-consistency contract: seed from a stale snapshot,
    // replay the event trail, reconcile when the store says so, and the
    // result must deep-equal the authoritative list
    const j1 = sampleJob({ status: "queued", provider: null, started_at: null });
    const j2 = sampleJob({ status: "running", kind: "batch" });
    const store = new DeploymentStore();
    store.reset([j1, j2]);

    const serverAfter: Job[] = [
      { ...j1, status: "running", provider: "pr-0001", started_at: 2_000_050 },
      { ...j2, status: "completed", finished_at: 2_000_200 },
      sampleJob({ status: "queued", provider: null, started_at: null }), // submitted mid-stream
    ];

    const stream: StreamEvent[] = [
      event("derived.job.transition", { job_id: j1.id, from: "queued", to: "scheduled", provider: "pr-0001" }, 2_000_050),
      event("derived.job.transition", { job_id: j1.id, from: "scheduled", to: "running", provider: "pr-0001" }, 2_000_050),
      event("command.job.complete", { job_id: j2.id, user: "ann" }),
      event("derived.job.transition", { job_id: j2.id, from: "running", to: "completed" }, 2_000_200),
      event("command.job.submit", { kind: "standard" }),
    ];

    let needsReconcile = false;
    for (const e of stream) {
      if (store.applyEvent(e) === "reconcile") needsReconcile = true;
    }
    expect(needsReconcile).toBe(true);
    store.reset(serverAfter); // what the view's refetch does

    expect(store.list()).toEqual([...serverAfter].sort((a, b) => a.id.localeCompare(b.id)));
  });

  it("pure transition streams converge without any refetch", () => {
    const j1 = sampleJob({ status: "queued", provider: null, started_at: null, kind: "tryme" });
    const store = new DeploymentStore();
    store.reset([j1]);
    const trail = [
      event("derived.job.transition", { job_id: j1.id, from: "queued", to: "scheduled", provider: "pr-0003" }, 10),
      event("derived.job.transition", { job_id: j1.id, from: "scheduled", to: "running", provider: "pr-0003" }, 10),
      event("derived.job.notice", { job_id: j1.id, kind: "tryme_notice" }, 300_010),
      event("derived.job.transition", { job_id: j1.id, from: "running", to: "expired", reason: "tryme ttl elapsed" }, 600_011),
    ];
    const changes = trail.map((e) => store.applyEvent(e));
    expect(changes).toEqual(["updated", "updated", "updated", "updated"]);
    const job = store.get(j1.id)!;
    expect(job.status).toBe("expired");
    expect(job.provider).toBe("pr-0003");
    expect(job.notified).toBe(true);
    expect(job.started_at).toBe(10);
    expect(job.finished_at).toBe(600_011);
  });
});
