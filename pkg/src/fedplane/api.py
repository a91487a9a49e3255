"""HTTP/JSON surface: signed-token auth, REST routes, SSE event stream.

Tokens are `b64url(claims).b64url(hmac)` where the claims document is
{"user", "vo", "role", "exp"} (exp in epoch ms) and the signature is
HMAC-SHA256 over the encoded claims under the shared API key. They arrive
as `Authorization: Bearer <token>` or, for EventSource clients that cannot
set headers, as a `?token=` query parameter.

The demo role is an allowlist: catalog reads, endpoint reads, synchronous
invoke, tryme deployments, and reading their own deployments. Everything
else requires the full role, and ownership checks on top of that happen in
the platform layer.

The event stream replays history after `Last-Event-ID` (or `?since=`),
then follows live events until a bounded window elapses and the response
ends cleanly; EventSource reconnects with the last id it saw, so a finite
window still yields a gapless feed.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
import queue
import threading
import time
from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from .canon import canonical_json
from .errors import AuthError, FedplaneError, ForbiddenError, NotFoundError, ValidationError
from .platform import Platform
from .scheduler import TRYME
from .secrets import load_master_key

HTTP_STATUS_BY_CODE = {
    "validation": 400,
    "auth": 401,
    "forbidden": 403,
    "not_found": 404,
    "state": 409,
    "crypto": 500,
    "error": 500,
}

API_HMAC_KEY_ENV = "API_HMAC_KEY"
DEFAULT_EVENT_WINDOW_MS = 15_000


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def _unb64url(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


def mint_token(key: bytes, user: str, vo: str, role: str, exp_ms: int) -> str:
    claims = canonical_json({"user": user, "vo": vo, "role": role, "exp": exp_ms})
    encoded = _b64url(claims.encode("utf-8"))
    signature = hmac.new(key, encoded.encode("ascii"), hashlib.sha256).digest()
    return f"{encoded}.{_b64url(signature)}"


def verify_token(key: bytes, token: str, now_ms: int) -> dict:
    try:
        encoded, signature_b64 = token.split(".", 1)
        expected = hmac.new(key, encoded.encode("ascii"), hashlib.sha256).digest()
        if not hmac.compare_digest(expected, _unb64url(signature_b64)):
            raise AuthError("token signature mismatch")
        claims = json.loads(_unb64url(encoded))
    except AuthError:
        raise
    except Exception:
        raise AuthError("malformed token") from None
    for field in ("user", "vo", "role", "exp"):
        if field not in claims:
            raise AuthError(f"token is missing the {field!r} claim")
    if claims["exp"] <= now_ms:
        raise AuthError("token expired")
    return claims


def load_api_key(value: str | None = None) -> bytes:
    raw = value if value is not None else os.environ.get(API_HMAC_KEY_ENV, "")
    if not raw:
        raise AuthError(f"{API_HMAC_KEY_ENV} is not set")
    return raw.encode("utf-8")


@dataclass(frozen=True)
class Principal:
    user: str
    vo: str
    role: str

    @property
    def is_full(self) -> bool:
        return self.role == "full"


def create_app(platform: Platform, api_key: bytes) -> FastAPI:
    app = FastAPI(title="fedplane", docs_url=None, redoc_url=None)
    app.state.platform = platform
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(FedplaneError)
    async def fedplane_error_handler(request: Request, exc: FedplaneError):
        status = HTTP_STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status, content={"error": {"code": exc.code, "message": str(exc)}})

    def principal(
        authorization: str | None = Header(default=None),
        token: str | None = Query(default=None),
    ) -> Principal:
        raw = token
        if raw is None and authorization and authorization.startswith("Bearer "):
            raw = authorization.removeprefix("Bearer ")
        if not raw:
            raise AuthError("missing bearer token")
        claims = verify_token(api_key, raw, platform.clock())
        return Principal(user=claims["user"], vo=claims["vo"], role=claims["role"])

    def full_access(p: Principal = Depends(principal)) -> Principal:
        if not p.is_full:
            raise ForbiddenError("this action requires full access")
        return p

    async def body_of(request: Request) -> dict:
        try:
            data = await request.json()
        except Exception:
            raise ValidationError("request body must be JSON") from None
        if not isinstance(data, dict):
            raise ValidationError("request body must be a JSON object")
        return data

    # -- health and identity -------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "now": platform.clock()}

    @app.get("/auth/me")
    def auth_me(p: Principal = Depends(principal)):
        return {"user": p.user, "vo": p.vo, "role": p.role}

    # -- federation ------------------------------------------------------------

    @app.get("/providers")
    def list_providers(p: Principal = Depends(full_access), status: str | None = None):
        stats = platform.stats()
        providers = stats["providers"]
        if status is not None:
            providers = [x for x in providers if x["status"] == status]
        return {"providers": providers}

    @app.post("/providers", status_code=201)
    async def register_provider(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply("provider.register", body)

    @app.get("/providers/{provider_id}")
    def get_provider(provider_id: str, p: Principal = Depends(full_access)):
        return platform.registry.get_provider(provider_id).to_dict()

    @app.post("/providers/{provider_id}/heartbeat")
    async def heartbeat(provider_id: str, request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply("provider.heartbeat", {"provider_id": provider_id, "free": body.get("free", {})})

    @app.post("/federation/sweep")
    def sweep(p: Principal = Depends(full_access)):
        return {"transitions": platform.apply("federation.sweep", {})}

    @app.get("/federation/capacity")
    def capacity(p: Principal = Depends(full_access), status: str | None = "alive"):
        effective = None if status in (None, "all") else status
        return {
            "status": status or "all",
            "capacity": platform.registry.aggregate_capacity(effective).to_dict(),
        }

    @app.post("/slas", status_code=201)
    async def upsert_sla(request: Request, p: Principal = Depends(full_access)):
        return platform.apply("sla.upsert", await body_of(request))

    @app.get("/slas")
    def list_slas(p: Principal = Depends(full_access)):
        return {"slas": [s.to_dict() for s in platform.registry.slas()]}

    @app.post("/vos", status_code=201)
    async def upsert_vo(request: Request, p: Principal = Depends(full_access)):
        return platform.apply("vo.upsert", {"vo": await body_of(request)})

    @app.get("/vos/{vo_id}")
    def get_vo(vo_id: str, p: Principal = Depends(principal)):
        vo = platform.registry.require_vo(vo_id)
        doc = vo.to_dict()
        if not p.is_full:
            doc.pop("member_roles", None)
        return doc

    # -- catalog -----------------------------------------------------------------

    def visible_record(record_id: str, p: Principal):
        record = platform.catalog.get_record(record_id)
        if record.vo != p.vo:
            raise NotFoundError(f"unknown model record {record_id!r}")
        return record

    @app.get("/catalog")
    def list_catalog(p: Principal = Depends(principal)):
        vo = platform.registry.get_vo(p.vo)
        tag_filter = vo.catalog_filter if vo else None
        records = platform.catalog.list_records(vo=p.vo, tag_filter=tag_filter)
        return {"records": [r.to_dict() for r in records]}

    @app.post("/catalog", status_code=201)
    async def create_record(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply("catalog.create", {"owner": p.user, "vo": p.vo, "metadata": body.get("metadata", body)})

    @app.get("/catalog/{record_id}")
    def get_record(record_id: str, p: Principal = Depends(principal)):
        return visible_record(record_id, p).to_dict()

    @app.patch("/catalog/{record_id}")
    async def update_record(record_id: str, request: Request, p: Principal = Depends(full_access)):
        visible_record(record_id, p)
        body = await body_of(request)
        return platform.apply("catalog.update", {"record_id": record_id, "user": p.user, "patch": body.get("patch", {})})

    @app.delete("/catalog/{record_id}")
    def delete_record(record_id: str, p: Principal = Depends(full_access)):
        visible_record(record_id, p)
        return platform.apply("catalog.delete", {"record_id": record_id, "user": p.user})

    @app.get("/catalog/{record_id}/export")
    def export_record(record_id: str, p: Principal = Depends(principal)):
        visible_record(record_id, p)
        return platform.catalog.export_interop(record_id)

    @app.post("/catalog/import", status_code=201)
    async def import_record(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        metadata = platform.catalog.import_interop(body)
        return platform.apply("catalog.create", {"owner": p.user, "vo": p.vo, "metadata": metadata})

    # -- pipeline -------------------------------------------------------------------

    @app.post("/catalog/{record_id}/pipeline", status_code=201)
    async def run_pipeline(record_id: str, request: Request, p: Principal = Depends(full_access)):
        visible_record(record_id, p)
        body = await body_of(request)
        return platform.apply(
            "pipeline.run",
            {"record_id": record_id, "user": p.user, "source_ref": body.get("source_ref", "HEAD")},
        )

    @app.get("/pipeline/runs")
    def list_runs(p: Principal = Depends(full_access), record_id: str | None = None):
        runs = platform.pipeline.runs(record_id)
        return {"runs": [r.to_dict() for r in runs]}

    @app.get("/pipeline/runs/{run_id}")
    def get_run(run_id: str, p: Principal = Depends(full_access)):
        return platform.pipeline.get_run(run_id).to_dict()

    # -- provenance --------------------------------------------------------------------

    @app.get("/provenance/{record_id}")
    def provenance_graph(record_id: str, p: Principal = Depends(full_access)):
        return platform.provenance_graph(record_id)

    @app.get("/provenance/{record_id}/triples")
    def provenance_triples(record_id: str, p: Principal = Depends(full_access)):
        return PlainTextResponse(platform.provenance_triples(record_id))

    @app.get("/provenance/{record_id}/datasets")
    def provenance_datasets(record_id: str, p: Principal = Depends(full_access)):
        return {"record_id": record_id, "datasets": platform.provenance.datasets_for(record_id)}

    @app.post("/provenance/fragments", status_code=201)
    async def track_metrics(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        if body.get("kind", "tracking") != "tracking":
            raise ValidationError("only tracking fragments can be posted directly")
        return platform.apply(
            "prov.track",
            {"record_id": body.get("record_id", ""), "metrics": body.get("metrics", {}), "user": p.user},
        )

    # -- deployments ------------------------------------------------------------------------

    @app.post("/deployments", status_code=201)
    async def create_deployment(request: Request, p: Principal = Depends(principal)):
        body = await body_of(request)
        kind = body.get("kind", "")
        if not p.is_full and kind != TRYME:
            raise ForbiddenError("demo access is limited to tryme deployments")
        return platform.apply(
            "job.submit",
            {
                "owner": p.user,
                "vo": p.vo,
                "kind": kind,
                "resources": body.get("resources", {}),
                "record_id": body.get("record_id"),
                "datasets": body.get("datasets", []),
            },
        )

    @app.get("/deployments")
    def list_deployments(
        p: Principal = Depends(principal),
        status: str | None = None,
        owner: str | None = None,
    ):
        effective_owner = owner if p.is_full else p.user
        jobs = platform.scheduler.list_jobs(vo=p.vo, owner=effective_owner, status=status)
        return {"deployments": [j.to_dict() for j in jobs]}

    @app.get("/deployments/{job_id}")
    def get_deployment(job_id: str, p: Principal = Depends(principal)):
        job = platform.scheduler.get_job(job_id)
        if job.vo != p.vo or (not p.is_full and job.owner != p.user):
            raise NotFoundError(f"unknown job {job_id!r}")
        return job.to_dict()

    @app.post("/deployments/{job_id}/stop")
    def stop_deployment(job_id: str, p: Principal = Depends(principal)):
        return platform.apply("job.stop", {"job_id": job_id, "user": p.user})

    @app.post("/deployments/{job_id}/complete")
    def complete_deployment(job_id: str, p: Principal = Depends(principal)):
        return platform.apply("job.complete", {"job_id": job_id, "user": p.user})

    # -- secrets ----------------------------------------------------------------------------

    @app.get("/secrets")
    def list_secrets(p: Principal = Depends(full_access), prefix: str = ""):
        return {"secrets": platform.secrets.list(p.user, prefix)}

    @app.put("/secrets/{path:path}", status_code=201)
    async def put_secret(path: str, request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        if "value" not in body or not isinstance(body["value"], str):
            raise ValidationError("body must carry a string value")
        return platform.put_secret(p.user, path, body["value"])

    @app.get("/secrets/{path:path}")
    def get_secret(path: str, p: Principal = Depends(full_access)):
        return {"path": path, "value": platform.get_secret(p.user, path)}

    @app.delete("/secrets/{path:path}")
    def delete_secret(path: str, p: Principal = Depends(full_access)):
        return platform.apply("secret.delete", {"user": p.user, "path": path})

    # -- inference ----------------------------------------------------------------------------

    @app.post("/inference/endpoints", status_code=201)
    async def create_endpoint(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply(
            "endpoint.create",
            {
                "record_id": body.get("record_id", ""),
                "owner": p.user,
                "vo": p.vo,
                "min_replicas": body.get("min_replicas", 0),
                "max_replicas": body.get("max_replicas", 5),
                "concurrency": body.get("concurrency", 10),
            },
        )

    @app.get("/inference/endpoints")
    def list_endpoints(p: Principal = Depends(principal)):
        return {"endpoints": [e.to_dict() for e in platform.inference.list_endpoints(vo=p.vo)]}

    @app.get("/inference/endpoints/{endpoint_id}")
    def get_endpoint(endpoint_id: str, p: Principal = Depends(principal)):
        endpoint = platform.inference.get_endpoint(endpoint_id)
        if endpoint.vo != p.vo:
            raise NotFoundError(f"unknown endpoint {endpoint_id!r}")
        return endpoint.to_dict()

    @app.delete("/inference/endpoints/{endpoint_id}")
    def delete_endpoint(endpoint_id: str, p: Principal = Depends(full_access)):
        return platform.apply("endpoint.delete", {"endpoint_id": endpoint_id, "user": p.user})

    @app.post("/inference/endpoints/{endpoint_id}/invoke")
    async def invoke(endpoint_id: str, request: Request, p: Principal = Depends(principal)):
        body = await body_of(request)
        endpoint = platform.inference.get_endpoint(endpoint_id)
        if endpoint.vo != p.vo:
            raise NotFoundError(f"unknown endpoint {endpoint_id!r}")
        return platform.apply(
            "infer.invoke",
            {"endpoint_id": endpoint_id, "payload": body.get("payload", {}), "user": p.user},
        )

    @app.post("/inference/endpoints/{endpoint_id}/invocations", status_code=202)
    async def submit_async(endpoint_id: str, request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply(
            "infer.submit_async",
            {"endpoint_id": endpoint_id, "payload": body.get("payload", {}), "user": p.user},
        )

    @app.get("/inference/invocations/{async_id}")
    def get_async(async_id: str, p: Principal = Depends(full_access)):
        return platform.inference.get_async(async_id).to_dict()

    @app.get("/inference/invocations/{async_id}/result")
    def get_async_result(async_id: str, p: Principal = Depends(full_access)):
        return platform.inference.async_result(async_id)

    @app.post("/inference/dags", status_code=201)
    async def create_dag(request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        nodes = body.get("nodes", [])
        for node in nodes:
            endpoint = platform.inference.get_endpoint(node)
            if endpoint.vo != p.vo:
                raise NotFoundError(f"unknown endpoint {node!r}")
        return platform.apply(
            "dag.create",
            {"owner": p.user, "vo": p.vo, "nodes": nodes, "edges": body.get("edges", [])},
        )

    @app.get("/inference/dags")
    def list_dags(p: Principal = Depends(full_access)):
        return {"dags": [d.to_dict() for d in platform.inference.list_dags(vo=p.vo)]}

    @app.get("/inference/dags/{dag_id}")
    def get_dag(dag_id: str, p: Principal = Depends(full_access)):
        return platform.inference.get_dag(dag_id).to_dict()

    @app.post("/inference/dags/{dag_id}/invoke")
    async def invoke_dag(dag_id: str, request: Request, p: Principal = Depends(full_access)):
        body = await body_of(request)
        return platform.apply("dag.invoke", {"dag_id": dag_id, "payload": body.get("payload", {}), "user": p.user})

    # -- stats, events, ops ------------------------------------------------------------------------

    @app.get("/stats")
    def stats(p: Principal = Depends(full_access)):
        return platform.stats()

    @app.get("/events")
    def events(
        request: Request,
        p: Principal = Depends(full_access),
        since: int = 0,
        window_ms: int = DEFAULT_EVENT_WINDOW_MS,
        last_event_id: str | None = Header(default=None, alias="Last-Event-ID"),
    ):
        start = since
        if last_event_id and last_event_id.isdigit():
            start = max(start, int(last_event_id))
        window = min(max(window_ms, 0), 60_000)

        def stream():
            incoming: queue.Queue = queue.Queue()
            unsubscribe = platform.subscribe(incoming.put)
            try:
                last_sent = start
                yield "retry: 250\n\n"
                for event in platform.events_since(start):
                    last_sent = event["seq"]
                    yield _sse_frame(event)
                deadline = time.monotonic() + window / 1000
                while time.monotonic() < deadline:
                    try:
                        event = incoming.get(timeout=0.1)
                    except queue.Empty:
                        continue
                    if event["seq"] > last_sent:
                        last_sent = event["seq"]
                        yield _sse_frame(event)
            finally:
                unsubscribe()

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.post("/admin/tick")
    def admin_tick(p: Principal = Depends(full_access)):
        return tick_once(platform)

    @app.post("/admin/snapshot")
    def admin_snapshot(p: Principal = Depends(full_access)):
        return {"seq": platform.snapshot()}

    return app


def _sse_frame(event: dict) -> str:
    return f"id: {event['seq']}\nevent: {event['kind']}\ndata: {canonical_json(event)}\n\n"


def tick_once(platform: Platform) -> dict:
    """One housekeeping round: heartbeats, sweep, schedule, autoscale, drain."""
    for provider in platform.registry.providers():
        free = platform.scheduler.free_capacity(provider.id)
        platform.apply("provider.heartbeat", {"provider_id": provider.id, "free": free.to_dict()})
    swept = platform.apply("federation.sweep", {})
    report = platform.apply("scheduler.tick", {})
    decisions = platform.apply("infer.autoscale", {})
    drained = platform.apply("infer.drain", {})
    return {
        "swept": swept,
        "transitions": report["transitions"],
        "notices": report["notices"],
        "scaled": decisions,
        "drained": drained,
    }


class Ticker(threading.Thread):
    def __init__(self, platform: Platform, interval_s: float = 0.5, snapshot_every: int = 120) -> None:
        super().__init__(name="fedplane-ticker", daemon=True)
        self.platform = platform
        self.interval_s = interval_s
        self.snapshot_every = snapshot_every
        self._stop = threading.Event()
        self._rounds = 0

    def run(self) -> None:
        while not self._stop.is_set():
            try:
                tick_once(self.platform)
                self._rounds += 1
                if self.snapshot_every and self._rounds % self.snapshot_every == 0:
                    self.platform.snapshot()
            except Exception:  # keep the loop alive; errors surface via the log
                pass
            self._stop.wait(self.interval_s)

    def stop(self) -> None:
        self._stop.set()


def serve(
    state_dir: str | None = None,
    listen_addr: str | None = None,
    master_key_hex: str | None = None,
    api_key: str | None = None,
    seed: bool = True,
    tick_ms: int = 500,
) -> None:
    """Run the API server; settings fall back to environment variables."""
    import uvicorn

    state_dir = state_dir or os.environ.get("STATE_DIR", "./fedplane-state")
    listen_addr = listen_addr or os.environ.get("LISTEN_ADDR", "127.0.0.1:8460")
    host, _, port_text = listen_addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValidationError(f"LISTEN_ADDR must look like host:port, got {listen_addr!r}")

    platform = Platform(state_dir, load_master_key(master_key_hex))
    if seed:
        platform.seed_demo()
    app = create_app(platform, load_api_key(api_key))

    ticker = None
    if tick_ms > 0:
        ticker = Ticker(platform, interval_s=tick_ms / 1000)
        ticker.start()
    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    finally:
        if ticker:
            ticker.stop()
        platform.snapshot()
        platform.close()
