/**
 * Unit-test scaffolding: an in-memory fetch that serves canned route
 * handlers and records every request (the route-guard tests audit that
 * log), plus builders for the documents the API would return.
 */

import type { FetchInit, FetchLike, MinimalResponse } from "../src/api.js";
import { mountShell, type Shell } from "../src/dom.js";
import type { Claims, Session } from "../src/session.js";
import type { Job, ModelRecord, ProvDoc, StatsDoc } from "../src/types.js";

export interface RecordedCall {
  method: string;
  url: string;
  path: string;
  body?: unknown;
}

type Handler = object | unknown[] | string | ((call: RecordedCall) => unknown);

function respond(status: number, payload: unknown): MinimalResponse {
  const isText = typeof payload === "string";
  const text = isText ? (payload as string) : JSON.stringify(payload);
  return {
    ok: status >= 200 && status < 300,
    status,
    headers: { get: (n: string) => (n.toLowerCase() === "content-type" ? (isText ? "text/plain" : "application/json") : null) },
    json: async () => JSON.parse(text),
    text: async () => text,
  };
}

/** A streaming response whose body async-iterates the SSE text. */
function sseRespond(text: string): MinimalResponse {
  async function* body() {
    yield new TextEncoder().encode(text);
  }
  return {
    ok: true,
    status: 200,
    headers: { get: (n: string) => (n.toLowerCase() === "content-type" ? "text/event-stream" : null) },
    json: async () => ({}),
    text: async () => text,
    body: body(),
  };
}

/**
 * Handlers are keyed "METHOD /path" (query string ignored for matching).
 * A handler may be a document, a text body, or a function of the call;
 * functions may return {status, body} to shape errors.
 */
export function fakeFetch(handlers: Record<string, Handler>): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (url: string, init: FetchInit = {}) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const call: RecordedCall = {
      method: init.method ?? "GET",
      url,
      path,
      body: init.body ? JSON.parse(init.body) : undefined,
    };
    calls.push(call);
    const handler = handlers[`${call.method} ${path}`];
    if (handler === undefined) {
      return respond(404, { error: { code: "not_found", message: `no handler for ${call.method} ${path}` } });
    }
    const result = typeof handler === "function" ? handler(call) : handler;
    if (result && typeof result === "object" && "sse" in (result as Record<string, unknown>)) {
      return sseRespond((result as { sse: string }).sse);
    }
    if (result && typeof result === "object" && "status" in (result as Record<string, unknown>) && "body" in (result as Record<string, unknown>)) {
      const shaped = result as { status: number; body: unknown };
      return respond(shaped.status, shaped.body);
    }
    return respond(200, result);
  };
  return { fetchFn, calls };
}

export function claimsOf(role: "full" | "demo", user = role === "full" ? "ann" : "bob"): Claims {
  return { user, vo: "vo-agri", role, exp: Date.now() + 3_600_000 };
}

export function sessionOf(role: "full" | "demo", user?: string): Session {
  const claims = claimsOf(role, user);
  // token body is only decoded for display; tests fabricate the segment
  const encoded = btoa(JSON.stringify(claims)).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
  return { apiUrl: "http://api.test", token: `${encoded}.sig`, claims };
}

export function freshShell(): Shell {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  root.id = "app";
  document.body.append(root);
  return mountShell(root);
}

let jobCounter = 0;

export function sampleJob(over: Partial<Job> = {}): Job {
  jobCounter += 1;
  return {
    id: `job-${String(jobCounter).padStart(4, "0")}`,
    owner: "ann",
    vo: "vo-agri",
    kind: "standard",
    resources: { gpus: 2, cpu_ghz: 0, disk_gb: 0 },
    record_id: null,
    datasets: [],
    status: "running",
    provider: "pr-0001",
    created_at: 1_000_000,
    started_at: 1_000_500,
    finished_at: null,
    expires_at: null,
    notify_at: null,
    notified: false,
    reason: "",
    ...over,
  };
}

export function sampleRecord(over: Partial<ModelRecord> = {}, id = "mod-0001"): ModelRecord {
  return {
    id,
    owner: "ann",
    vo: "vo-agri",
    metadata: {
      title: `Model ${id}`,
      summary: "A test model",
      license: "Apache-2.0",
      links: { source_repo: "https://example.org/repo" },
      authors: [{ name: "Ada Lovelace" }],
      tags: { domain: ["agriculture"] },
    },
    version: 1,
    created_at: 1_000_000,
    modified_at: 1_000_000,
    release: null,
    ...over,
  };
}

export function sampleStats(): StatsDoc {
  return {
    providers: [
      {
        id: "pr-0001",
        name: "alpha",
        country: "NL",
        status: "alive",
        capacity: { gpus: 20, cpu_ghz: 1600, disk_gb: 1600 },
        allocated: { gpus: 2, cpu_ghz: 0, disk_gb: 0 },
        free: { gpus: 18, cpu_ghz: 1600, disk_gb: 1600 },
        score: 0.25,
        last_heartbeat: 1_000_000,
      },
    ],
    totals: {
      capacity: { gpus: 20, cpu_ghz: 1600, disk_gb: 1600 },
      allocated: { gpus: 2, cpu_ghz: 0, disk_gb: 0 },
      free: { gpus: 18, cpu_ghz: 1600, disk_gb: 1600 },
    },
    jobs: { running: 1 },
    models: 1,
    endpoints: [
      {
        id: "ep-0001",
        record_id: "mod-0001",
        replicas: 1,
        metrics: {
          invocations: 3,
          errors: 0,
          latency_ms_total: 900,
          histogram: [0, 1, 0, 0, 2, 0],
          buckets_ms: [10, 50, 100, 500, 1000],
          replica_ms: 0,
        },
      },
    ],
    events: 42,
  };
}

/** The canonical worked lifecycle: 7 nodes, 6 edges. */
export function sampleProv(): ProvDoc {
  return {
    nodes: {
      "model:mod-0001": { type: "entity", attrs: { title: "Model" } },
      "author:ada-lovelace": { type: "agent", attrs: { name: "Ada Lovelace" } },
      "author:grace-hopper": { type: "agent", attrs: { name: "Grace Hopper" } },
      "build:run-0001": { type: "activity", attrs: { digest: "abc" } },
      "training:job-0001": { type: "activity", attrs: {} },
      "dataset:ds-wheat": { type: "entity", attrs: {} },
      "user:ann": { type: "agent", attrs: {} },
    },
    edges: [
      { subject: "model:mod-0001", relation: "wasAttributedTo", object: "author:ada-lovelace" },
      { subject: "model:mod-0001", relation: "wasAttributedTo", object: "author:grace-hopper" },
      { subject: "model:mod-0001", relation: "wasGeneratedBy", object: "build:run-0001" },
      { subject: "model:mod-0001", relation: "wasDerivedFrom", object: "dataset:ds-wheat" },
      { subject: "training:job-0001", relation: "used", object: "dataset:ds-wheat" },
      { subject: "training:job-0001", relation: "wasAssociatedWith", object: "user:ann" },
    ],
  };
}
