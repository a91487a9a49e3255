/**
 * Shapes of the documents the control-plane API serves. These mirror the
 * wire format exactly; the dashboard never invents fields of its own.
 */

export interface Capacity {
  gpus: number;
  cpu_ghz: number;
  disk_gb: number;
}

export interface Provider {
  id: string;
  name: string;
  country: string;
  status: string;
  capacity: Capacity;
  allocated: Capacity;
  free: Capacity;
  score: number;
  last_heartbeat: number;
}

export interface Job {
  id: string;
  owner: string;
  vo: string;
  kind: string;
  resources: Capacity;
  record_id: string | null;
  datasets: string[];
  status: string;
  provider: string | null;
  created_at: number;
  started_at: number | null;
  finished_at: number | null;
  expires_at: number | null;
  notify_at: number | null;
  notified: boolean;
  reason: string;
}

export interface ModelRecord {
  id: string;
  owner: string;
  vo: string;
  metadata: {
    title: string;
    summary: string;
    license: string;
    links: { source_repo: string; doi?: string; download?: string };
    authors?: { name: string }[];
    tags?: Record<string, string[]>;
  };
  version: number;
  created_at: number;
  modified_at: number;
  release: { digest: string; pseudo_doi: string; released_at: number } | null;
}

export interface PipelineRun {
  id: string;
  record_id: string;
  source_ref: string;
  stages: { name: string; status: string; detail: string }[];
  digest: string | null;
  doi: string | null;
  started_at: number;
  finished_at: number | null;
  status: string;
}

export interface ProvNode {
  type: string;
  attrs: Record<string, unknown>;
}

export interface ProvEdge {
  subject: string;
  relation: string;
  object: string;
}

export interface ProvDoc {
  nodes: Record<string, ProvNode>;
  edges: ProvEdge[];
}

export interface EndpointStats {
  id: string;
  record_id: string;
  replicas: number;
  metrics: {
    invocations: number;
    errors: number;
    latency_ms_total: number;
    histogram: number[];
    buckets_ms: number[];
    replica_ms: number;
  };
}

export interface StatsDoc {
  providers: Provider[];
  totals: { capacity: Capacity; allocated: Capacity; free: Capacity };
  jobs: Record<string, number>;
  models: number;
  endpoints: EndpointStats[];
  events: number;
}

export interface SecretSummary {
  path: string;
  created_at: number;
  updated_at: number;
  version: number;
}

export interface Endpoint {
  id: string;
  record_id: string;
  owner: string;
  vo: string;
  min_replicas: number;
  max_replicas: number;
  concurrency: number;
  replicas: number;
  metrics: EndpointStats["metrics"];
}

export interface InvocationResult {
  output: Record<string, unknown>;
  latency_ms: number;
  cold_start: boolean;
}

/** One line of the platform event log, as framed over the SSE feed. */
export interface StreamEvent {
  seq: number;
  ts: number;
  kind: string;
  payload: Record<string, unknown>;
}
