/**
 * Typed client for the control-plane HTTP API. Every call carries the
 * bearer token; server errors arrive as {"error": {"code", "message"}}
 * and are rethrown as ApiError so views can surface the diagnostic.
 *
 * The fetch implementation is injectable so tests can swap transports;
 * only the members below are required of a response.
 */

import type {
  Capacity,
  Endpoint,
  InvocationResult,
  Job,
  ModelRecord,
  PipelineRun,
  ProvDoc,
  Provider,
  SecretSummary,
  StatsDoc,
} from "./types.js";

export interface MinimalResponse {
  ok: boolean;
  status: number;
  headers: { get(name: string): string | null };
  json(): Promise<unknown>;
  text(): Promise<string>;
  body?: unknown;
}

export interface FetchInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
  signal?: AbortSignal;
}

export type FetchLike = (url: string, init?: FetchInit) => Promise<MinimalResponse>;

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    public base: string,
    public token: string,
    public fetchFn: FetchLike = globalThis.fetch as unknown as FetchLike,
  ) {}

  url(path: string): string {
    return `${this.base}${path}`;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    let res: MinimalResponse;
    try {
      res = await this.fetchFn(this.url(path), {
        method,
        headers: {
          Authorization: `Bearer ${this.token}`,
          ...(body === undefined ? {} : { "Content-Type": "application/json" }),
        },
        ...(body === undefined ? {} : { body: JSON.stringify(body) }),
      });
    } catch (err) {
      throw new ApiError("network", `cannot reach the API at ${this.base || "same origin"}: ${String(err)}`, 0);
    }
    const type = res.headers.get("content-type") ?? "";
    if (!res.ok) {
      let code = "error";
      let message = `HTTP ${res.status}`;
      if (type.includes("application/json")) {
        const doc = (await res.json()) as { error?: { code?: string; message?: string } };
        code = doc.error?.code ?? code;
        message = doc.error?.message ?? message;
      }
      throw new ApiError(code, message, res.status);
    }
    if (type.includes("application/json")) return res.json();
    return res.text();
  }

  // -- identity and federation

  me(): Promise<{ user: string; vo: string; role: string }> {
    return this.request("GET", "/auth/me") as Promise<{ user: string; vo: string; role: string }>;
  }

  vo(id: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/vos/${id}`) as Promise<Record<string, unknown>>;
  }

  providers(): Promise<{ providers: Provider[] }> {
    return this.request("GET", "/providers") as Promise<{ providers: Provider[] }>;
  }

  capacity(status = "alive"): Promise<{ status: string; capacity: Capacity }> {
    return this.request("GET", `/federation/capacity?status=${status}`) as Promise<{
      status: string;
      capacity: Capacity;
    }>;
  }

  // -- catalog

  catalog(): Promise<{ records: ModelRecord[] }> {
    return this.request("GET", "/catalog") as Promise<{ records: ModelRecord[] }>;
  }

  record(id: string): Promise<ModelRecord> {
    return this.request("GET", `/catalog/${id}`) as Promise<ModelRecord>;
  }

  exportRecord(id: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/catalog/${id}/export`) as Promise<Record<string, unknown>>;
  }

  createRecord(metadata: Record<string, unknown>): Promise<ModelRecord> {
    return this.request("POST", "/catalog", { metadata }) as Promise<ModelRecord>;
  }

  patchRecord(id: string, patch: Record<string, unknown>): Promise<ModelRecord> {
    return this.request("PATCH", `/catalog/${id}`, { patch }) as Promise<ModelRecord>;
  }

  deleteRecord(id: string): Promise<unknown> {
    return this.request("DELETE", `/catalog/${id}`);
  }

  // -- pipeline and provenance

  runPipeline(recordId: string, sourceRef: string): Promise<PipelineRun> {
    return this.request("POST", `/catalog/${recordId}/pipeline`, { source_ref: sourceRef }) as Promise<PipelineRun>;
  }

  runs(recordId?: string): Promise<{ runs: PipelineRun[] }> {
    const query = recordId ? `?record_id=${recordId}` : "";
    return this.request("GET", `/pipeline/runs${query}`) as Promise<{ runs: PipelineRun[] }>;
  }

  provenance(recordId: string): Promise<ProvDoc> {
    return this.request("GET", `/provenance/${recordId}`) as Promise<ProvDoc>;
  }

  provenanceTriples(recordId: string): Promise<string> {
    return this.request("GET", `/provenance/${recordId}/triples`) as Promise<string>;
  }

  datasets(recordId: string): Promise<{ record_id: string; datasets: string[] }> {
    return this.request("GET", `/provenance/${recordId}/datasets`) as Promise<{
      record_id: string;
      datasets: string[];
    }>;
  }

  // -- deployments

  deployments(params: { status?: string; owner?: string } = {}): Promise<{ deployments: Job[] }> {
    const query = new URLSearchParams();
    if (params.status) query.set("status", params.status);
    if (params.owner) query.set("owner", params.owner);
    const suffix = query.size ? `?${query.toString()}` : "";
    return this.request("GET", `/deployments${suffix}`) as Promise<{ deployments: Job[] }>;
  }

  deployment(id: string): Promise<Job> {
    return this.request("GET", `/deployments/${id}`) as Promise<Job>;
  }

  deploy(body: {
    kind: string;
    resources: Partial<Capacity>;
    record_id?: string | null;
    datasets?: string[];
  }): Promise<Job> {
    return this.request("POST", "/deployments", body) as Promise<Job>;
  }

  stopDeployment(id: string): Promise<Job> {
    return this.request("POST", `/deployments/${id}/stop`) as Promise<Job>;
  }

  completeDeployment(id: string): Promise<Job> {
    return this.request("POST", `/deployments/${id}/complete`) as Promise<Job>;
  }

  // -- secrets

  secrets(prefix = ""): Promise<{ secrets: SecretSummary[] }> {
    const suffix = prefix ? `?prefix=${encodeURIComponent(prefix)}` : "";
    return this.request("GET", `/secrets${suffix}`) as Promise<{ secrets: SecretSummary[] }>;
  }

  putSecret(path: string, value: string): Promise<SecretSummary> {
    return this.request("PUT", `/secrets/${path}`, { value }) as Promise<SecretSummary>;
  }

  getSecret(path: string): Promise<{ path: string; value: string }> {
    return this.request("GET", `/secrets/${path}`) as Promise<{ path: string; value: string }>;
  }

  deleteSecret(path: string): Promise<unknown> {
    return this.request("DELETE", `/secrets/${path}`);
  }

  // -- inference

  endpoints(): Promise<{ endpoints: Endpoint[] }> {
    return this.request("GET", "/inference/endpoints") as Promise<{ endpoints: Endpoint[] }>;
  }

  invoke(endpointId: string, payload: Record<string, unknown>): Promise<InvocationResult> {
    return this.request("POST", `/inference/endpoints/${endpointId}/invoke`, { payload }) as Promise<InvocationResult>;
  }

  // -- operations

  stats(): Promise<StatsDoc> {
    return this.request("GET", "/stats") as Promise<StatsDoc>;
  }

  tick(): Promise<Record<string, unknown>> {
    return this.request("POST", "/admin/tick") as Promise<Record<string, unknown>>;
  }
}
