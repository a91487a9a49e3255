"""Serverless inference: endpoints, autoscaling, async queues, and DAGs.

Endpoints wrap a per-model predictor function behind replica accounting.
Latency is simulated with fixed samples (a warm hit and a cold start), so
metrics are deterministic and nothing ever sleeps.

Scaling rules: a cold invoke immediately brings up max(min_replicas, 1)
replicas; the autoscale tick raises replicas to ceil(inflight/concurrency)
clamped to [min, max] the moment load demands it, and drops straight to
min_replicas only after the endpoint has been idle past the cooldown.
Ticks also integrate replica-milliseconds for usage reporting, and they
return the decisions they made so a caller can persist and later re-apply
them verbatim.

Async invocations park their payload in an inbox blob, get processed in id
order by drain(), and leave their result in an outbox blob. DAGs wire
endpoints into an acyclic graph with exactly one sink; fan-in passes the
original payload to source nodes, the bare upstream output through single
edges, and an edge-ordered list where branches join.
"""

from __future__ import annotations

import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .canon import canonical_json
from .errors import NotFoundError, StateError, ValidationError

MAX_PAYLOAD_BYTES = 8 * 1024 * 1024
WARM_LATENCY_MS = 25
COLD_START_LATENCY_MS = 850
IDLE_COOLDOWN_MS = 120_000
BUCKETS_MS = (10, 50, 100, 500, 1000)

PENDING = "pending"
DONE = "done"
ERROR = "error"

_KEY_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
_BUCKET_RE = re.compile(r"^[a-z][a-z0-9_-]*$")


def default_predictor(record_id: str):
    """Echo predictor stamped with the model id; stands in for real models."""

    def predict(payload: dict) -> dict:
        return {"model": record_id, "echo": payload}

    return predict


def bucket_index(latency_ms: int) -> int:
    for i, bound in enumerate(BUCKETS_MS):
        if latency_ms <= bound:
            return i
    return len(BUCKETS_MS)


@dataclass
class UsageMetrics:
    invocations: int = 0
    errors: int = 0
    latency_ms_total: int = 0
    histogram: list[int] = field(default_factory=lambda: [0] * (len(BUCKETS_MS) + 1))
    replica_ms: int = 0

    def observe(self, latency_ms: int) -> None:
        self.invocations += 1
        self.latency_ms_total += latency_ms
        self.histogram[bucket_index(latency_ms)] += 1

    def to_dict(self) -> dict:
        return {
            "invocations": self.invocations,
            "errors": self.errors,
            "latency_ms_total": self.latency_ms_total,
            "histogram": list(self.histogram),
            "buckets_ms": list(BUCKETS_MS),
            "replica_ms": self.replica_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UsageMetrics":
        return cls(
            invocations=d["invocations"],
            errors=d["errors"],
            latency_ms_total=d["latency_ms_total"],
            histogram=list(d["histogram"]),
            replica_ms=d["replica_ms"],
        )


@dataclass
class Endpoint:
    id: str
    record_id: str
    owner: str
    vo: str
    min_replicas: int
    max_replicas: int
    concurrency: int
    replicas: int = 0
    inflight: int = 0
    created_at: int = 0
    last_active_at: int = 0
    accounted_at: int = 0
    metrics: UsageMetrics = field(default_factory=UsageMetrics)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "record_id": self.record_id,
            "owner": self.owner,
            "vo": self.vo,
            "min_replicas": self.min_replicas,
            "max_replicas": self.max_replicas,
            "concurrency": self.concurrency,
            "replicas": self.replicas,
            "created_at": self.created_at,
            "last_active_at": self.last_active_at,
            "accounted_at": self.accounted_at,
            "metrics": self.metrics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Endpoint":
        return cls(
            id=d["id"],
            record_id=d["record_id"],
            owner=d["owner"],
            vo=d["vo"],
            min_replicas=d["min_replicas"],
            max_replicas=d["max_replicas"],
            concurrency=d["concurrency"],
            replicas=d["replicas"],
            created_at=d["created_at"],
            last_active_at=d["last_active_at"],
            accounted_at=d["accounted_at"],
            metrics=UsageMetrics.from_dict(d["metrics"]),
        )


@dataclass
class AsyncJob:
    id: str
    endpoint_id: str
    status: str = PENDING
    inbox_key: str = ""
    outbox_key: str | None = None
    error: str = ""
    created_at: int = 0
    finished_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "endpoint_id": self.endpoint_id,
            "status": self.status,
            "inbox_key": self.inbox_key,
            "outbox_key": self.outbox_key,
            "error": self.error,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AsyncJob":
        return cls(**d)


@dataclass
class PipelineDag:
    id: str
    owner: str
    vo: str
    nodes: list[str]
    edges: list[tuple[str, str]]
    sink: str
    created_at: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "vo": self.vo,
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "sink": self.sink,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineDag":
        return cls(
            id=d["id"],
            owner=d["owner"],
            vo=d["vo"],
            nodes=list(d["nodes"]),
            edges=[tuple(e) for e in d["edges"]],
            sink=d["sink"],
            created_at=d["created_at"],
        )


@dataclass
class InvocationResult:
    output: dict
    latency_ms: int
    cold_start: bool

    def to_dict(self) -> dict:
        return {"output": self.output, "latency_ms": self.latency_ms, "cold_start": self.cold_start}


class BlobStore:
    """Flat file store at <root>/<bucket>/<key>; names are strictly validated."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, bucket: str, key: str) -> Path:
        if not _BUCKET_RE.match(bucket):
            raise ValidationError(f"bad bucket name {bucket!r}")
        if not _KEY_RE.match(key):
            raise ValidationError(f"bad object key {key!r}")
        return self.root / bucket / key

    def put(self, bucket: str, key: str, data: bytes) -> None:
        path = self._path(bucket, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)

    def get(self, bucket: str, key: str) -> bytes:
        path = self._path(bucket, key)
        if not path.is_file():
            raise NotFoundError(f"no object {bucket}/{key}")
        return path.read_bytes()

    def exists(self, bucket: str, key: str) -> bool:
        return self._path(bucket, key).is_file()

    def delete(self, bucket: str, key: str) -> None:
        path = self._path(bucket, key)
        if path.is_file():
            path.unlink()

    def list(self, bucket: str) -> list[str]:
        directory = self.root / bucket
        if not _BUCKET_RE.match(bucket) or not directory.is_dir():
            return []
        return sorted(p.name for p in directory.iterdir() if p.is_file())


class InferenceService:
    def __init__(self, blobs: BlobStore) -> None:
        self.blobs = blobs
        self._endpoints: dict[str, Endpoint] = {}
        self._async_jobs: dict[str, AsyncJob] = {}
        self._dags: dict[str, PipelineDag] = {}
        self._predictors: dict[str, object] = {}
        self._next_endpoint = 1
        self._next_async = 1
        self._next_dag = 1
        self._lock = threading.Lock()

    # -- predictors --------------------------------------------------------

    def register_predictor(self, record_id: str, fn) -> None:
        self._predictors[record_id] = fn

    def _predictor(self, record_id: str):
        return self._predictors.get(record_id) or default_predictor(record_id)

    # -- endpoints ----------------------------------------------------------

    def create_endpoint(
        self,
        record_id: str,
        owner: str,
        vo: str,
        min_replicas: int = 0,
        max_replicas: int = 5,
        concurrency: int = 10,
        now: int = 0,
    ) -> Endpoint:
        if min_replicas < 0 or max_replicas < 1 or min_replicas > max_replicas:
            raise ValidationError("need 0 <= min_replicas <= max_replicas and max_replicas >= 1")
        if concurrency < 1:
            raise ValidationError("concurrency must be >= 1")
        with self._lock:
            endpoint = Endpoint(
                id=f"ep-{self._next_endpoint:04d}",
                record_id=record_id,
                owner=owner,
                vo=vo,
                min_replicas=min_replicas,
                max_replicas=max_replicas,
                concurrency=concurrency,
                replicas=min_replicas,
                created_at=now,
                last_active_at=now,
                accounted_at=now,
            )
            self._next_endpoint += 1
            self._endpoints[endpoint.id] = endpoint
            return endpoint

    def get_endpoint(self, endpoint_id: str) -> Endpoint:
        try:
            return self._endpoints[endpoint_id]
        except KeyError:
            raise NotFoundError(f"unknown endpoint {endpoint_id!r}") from None

    def list_endpoints(self, vo: str | None = None, owner: str | None = None) -> list[Endpoint]:
        out = []
        for eid in sorted(self._endpoints):
            ep = self._endpoints[eid]
            if vo is not None and ep.vo != vo:
                continue
            if owner is not None and ep.owner != owner:
                continue
            out.append(ep)
        return out

    def delete_endpoint(self, endpoint_id: str) -> None:
        if endpoint_id not in self._endpoints:
            raise NotFoundError(f"unknown endpoint {endpoint_id!r}")
        del self._endpoints[endpoint_id]

    # -- invocation -----------------------------------------------------------

    def invoke(self, endpoint_id: str, payload: dict, now: int) -> InvocationResult:
        encoded = canonical_json(payload).encode("utf-8")
        if len(encoded) > MAX_PAYLOAD_BYTES:
            raise ValidationError(f"payload of {len(encoded)} bytes exceeds the 8 MiB limit")
        with self._lock:
            endpoint = self.get_endpoint(endpoint_id)
            cold = endpoint.replicas == 0
            if cold:
                endpoint.replicas = max(endpoint.min_replicas, 1)
                endpoint.accounted_at = now  # replica time starts with the cold start
            endpoint.inflight += 1
        try:
            output = self._predictor(endpoint.record_id)(payload)
        except Exception as exc:
            with self._lock:
                endpoint.inflight -= 1
                endpoint.metrics.errors += 1
                endpoint.last_active_at = now
            raise StateError(f"predictor for {endpoint.record_id} failed: {exc}") from exc
        with self._lock:
            endpoint.inflight -= 1
            latency = COLD_START_LATENCY_MS if cold else WARM_LATENCY_MS
            endpoint.metrics.observe(latency)
            endpoint.last_active_at = now
        return InvocationResult(output=output, latency_ms=latency, cold_start=cold)

    # -- autoscaling -------------------------------------------------------------

    def autoscale_tick(self, now: int) -> list[dict]:
        """Integrate replica time and apply scaling; returns applied decisions."""
        decisions = []
        with self._lock:
            for eid in sorted(self._endpoints):
                endpoint = self._endpoints[eid]
                elapsed = max(now - endpoint.accounted_at, 0)
                replica_ms = endpoint.replicas * elapsed
                old = endpoint.replicas
                reason = ""
                if endpoint.inflight > 0:
                    desired = math.ceil(endpoint.inflight / endpoint.concurrency)
                    desired = max(endpoint.min_replicas, min(endpoint.max_replicas, desired))
                    if desired > endpoint.replicas:
                        endpoint.replicas = desired
                        reason = "scale_up"
                elif (
                    endpoint.replicas > endpoint.min_replicas
                    and now - endpoint.last_active_at > IDLE_COOLDOWN_MS
                ):
                    endpoint.replicas = endpoint.min_replicas
                    reason = "idle_cooldown"
                # endpoint state moves only when a decision is emitted, so
                # replaying the decision list reproduces this state exactly
                if reason or replica_ms:
                    endpoint.metrics.replica_ms += replica_ms
                    endpoint.accounted_at = now
                    decisions.append(
                        {
                            "endpoint_id": eid,
                            "old": old,
                            "new": endpoint.replicas,
                            "reason": reason,
                            "replica_ms": replica_ms,
                        }
                    )
        return decisions

    def apply_scale_decisions(self, decisions: list[dict], now: int) -> None:
        """Replay path: apply recorded decisions without consulting inflight."""
        with self._lock:
            for decision in decisions:
                endpoint = self.get_endpoint(decision["endpoint_id"])
                endpoint.metrics.replica_ms += decision["replica_ms"]
                endpoint.replicas = decision["new"]
                endpoint.accounted_at = now

    # -- async invocations ----------------------------------------------------------

    def submit_async(self, endpoint_id: str, payload: dict, now: int) -> AsyncJob:
        self.get_endpoint(endpoint_id)
        encoded = canonical_json(payload).encode("utf-8")
        if len(encoded) > MAX_PAYLOAD_BYTES:
            raise ValidationError(f"payload of {len(encoded)} bytes exceeds the 8 MiB limit")
        with self._lock:
            job = AsyncJob(
                id=f"aj-{self._next_async:04d}",
                endpoint_id=endpoint_id,
                inbox_key="",
                created_at=now,
            )
            self._next_async += 1
            job.inbox_key = f"{job.id}.json"
            self._async_jobs[job.id] = job
        self.blobs.put("inbox", job.inbox_key, encoded)
        return job

    def get_async(self, async_id: str) -> AsyncJob:
        try:
            return self._async_jobs[async_id]
        except KeyError:
            raise NotFoundError(f"unknown async invocation {async_id!r}") from None

    def async_result(self, async_id: str) -> dict:
        job = self.get_async(async_id)
        if job.status == PENDING:
            raise StateError(f"async invocation {async_id} is still pending")
        return json.loads(self.blobs.get("outbox", job.outbox_key))

    def list_async(self, status: str | None = None) -> list[AsyncJob]:
        jobs = [self._async_jobs[aid] for aid in sorted(self._async_jobs)]
        if status is not None:
            jobs = [j for j in jobs if j.status == status]
        return jobs

    def drain(self, now: int) -> list[dict]:
        """Run every pending async job through the invoke path, in id order."""
        processed = []
        for job in self.list_async(status=PENDING):
            payload = json.loads(self.blobs.get("inbox", job.inbox_key))
            job.outbox_key = f"{job.id}.json"
            try:
                result = self.invoke(job.endpoint_id, payload, now)
            except (NotFoundError, StateError, ValidationError) as exc:
                job.status = ERROR
                job.error = str(exc)
                self.blobs.put("outbox", job.outbox_key, canonical_json({"error": job.error}).encode("utf-8"))
            else:
                job.status = DONE
                self.blobs.put("outbox", job.outbox_key, canonical_json(result.to_dict()).encode("utf-8"))
            job.finished_at = now
            processed.append({"async_id": job.id, "status": job.status})
        return processed

    # -- DAGs ---------------------------------------------------------------------------

    def create_dag(
        self,
        owner: str,
        vo: str,
        nodes: list[str],
        edges: list[tuple[str, str]],
        now: int,
    ) -> PipelineDag:
        if not nodes:
            raise ValidationError("dag needs at least one node")
        if len(set(nodes)) != len(nodes):
            raise ValidationError("dag nodes must be unique")
        for node in nodes:
            self.get_endpoint(node)
        node_set = set(nodes)
        seen_edges = set()
        for src, dst in edges:
            if src not in node_set or dst not in node_set:
                raise ValidationError(f"edge {src} -> {dst} references a node outside the dag")
            if src == dst:
                raise ValidationError(f"edge {src} -> {dst} is a self loop")
            if (src, dst) in seen_edges:
                raise ValidationError(f"duplicate edge {src} -> {dst}")
            seen_edges.add((src, dst))
        self._topo_order(nodes, edges)  # raises on cycles
        sinks = [n for n in nodes if not any(src == n for src, _ in edges)]
        if len(sinks) != 1:
            raise ValidationError(f"dag must have exactly one sink, found {len(sinks)}")
        with self._lock:
            dag = PipelineDag(
                id=f"dag-{self._next_dag:04d}",
                owner=owner,
                vo=vo,
                nodes=list(nodes),
                edges=[tuple(e) for e in edges],
                sink=sinks[0],
                created_at=now,
            )
            self._next_dag += 1
            self._dags[dag.id] = dag
        return dag

    @staticmethod
    def _topo_order(nodes: list[str], edges: list[tuple[str, str]]) -> list[str]:
        indegree = {n: 0 for n in nodes}
        for _, dst in edges:
            indegree[dst] += 1
        ready = sorted(n for n, d in indegree.items() if d == 0)
        order = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            became_ready = []
            for src, dst in edges:
                if src == node:
                    indegree[dst] -= 1
                    if indegree[dst] == 0:
                        became_ready.append(dst)
            if became_ready:
                ready = sorted(ready + became_ready)
        if len(order) != len(nodes):
            remaining = set(nodes) - set(order)
            back = min((e for e in edges if e[0] in remaining and e[1] in remaining), default=None)
            detail = f" via edge {back[0]} -> {back[1]}" if back else ""
            raise ValidationError(f"dag contains a cycle{detail}")
        return order

    def get_dag(self, dag_id: str) -> PipelineDag:
        try:
            return self._dags[dag_id]
        except KeyError:
            raise NotFoundError(f"unknown dag {dag_id!r}") from None

    def list_dags(self, vo: str | None = None) -> list[PipelineDag]:
        dags = [self._dags[did] for did in sorted(self._dags)]
        if vo is not None:
            dags = [d for d in dags if d.vo == vo]
        return dags

    def invoke_dag(self, dag_id: str, payload: dict, now: int) -> dict:
        dag = self.get_dag(dag_id)
        order = self._topo_order(dag.nodes, dag.edges)
        outputs: dict[str, dict] = {}
        steps = []
        for node in order:
            incoming = [src for src, dst in dag.edges if dst == node]  # edge insertion order
            if not incoming:
                node_input = payload
            elif len(incoming) == 1:
                node_input = outputs[incoming[0]]
            else:
                node_input = {"inputs": [outputs[src] for src in incoming]}
            result = self.invoke(node, node_input, now)
            outputs[node] = result.output
            steps.append({"endpoint_id": node, "latency_ms": result.latency_ms, "cold_start": result.cold_start})
        return {"output": outputs[dag.sink], "steps": steps}

    # -- state -----------------------------------------------------------------------------

    def to_state(self) -> dict:
        return {
            "endpoints": [self._endpoints[eid].to_dict() for eid in sorted(self._endpoints)],
            "async_jobs": [self._async_jobs[aid].to_dict() for aid in sorted(self._async_jobs)],
            "dags": [self._dags[did].to_dict() for did in sorted(self._dags)],
            "next_endpoint": self._next_endpoint,
            "next_async": self._next_async,
            "next_dag": self._next_dag,
        }

    def from_state(self, state: dict) -> None:
        self._endpoints = {d["id"]: Endpoint.from_dict(d) for d in state["endpoints"]}
        self._async_jobs = {d["id"]: AsyncJob.from_dict(d) for d in state["async_jobs"]}
        self._dags = {d["id"]: PipelineDag.from_dict(d) for d in state["dags"]}
        self._next_endpoint = state["next_endpoint"]
        self._next_async = state["next_async"]
        self._next_dag = state["next_dag"]
