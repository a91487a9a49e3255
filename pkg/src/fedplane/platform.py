"""Single-process control plane with an event-sourced core.

Every mutation goes through apply(): one lock serializes commands, the
command (with an enriched, replay-safe payload) is appended to the event
log, and any derived happenings (job transitions, tryme notices, secret
cascades, provenance fragments) are appended after it. Recovery loads the
newest snapshot and re-applies logged commands with their original
timestamps; derived events are re-computed but not re-appended.

Two commands need enrichment to stay deterministic: secrets are encrypted
before the command is built so only ciphertext is ever logged, and the
autoscaler logs the decisions it took so replay applies them instead of
re-reading transient inflight counts.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Callable

from .catalog import ModelCatalog
from .errors import ForbiddenError, NotFoundError, StateError, ValidationError
from .eventlog import EventLog, SnapshotStore
from .federation import Capacity, FederationRegistry, VirtualOrganization
from .inference import BlobStore, InferenceService
from .pipeline import QualityPipeline
from .provenance import ProvenanceStore
from .ranker import ProviderRanker
from .scheduler import BATCH, RUNNING, TERMINAL, JobSpec, Scheduler
from .secrets import SecretStore


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class Platform:
    def __init__(
        self,
        state_dir: Path | str,
        master_key: bytes,
        clock: Callable[[], int] = wall_clock_ms,
    ) -> None:
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._lock = threading.RLock()

        self.registry = FederationRegistry()
        self.ranker = ProviderRanker()
        self.scheduler = Scheduler(self.registry, self.ranker)
        self.catalog = ModelCatalog()
        self.provenance = ProvenanceStore()
        self.pipeline = QualityPipeline(self.catalog, self.provenance)
        self.secrets = SecretStore(master_key)
        self.blobs = BlobStore(self.state_dir / "objects")
        self.inference = InferenceService(self.blobs)

        self.log = EventLog(self.state_dir / "events.log")
        self.snapshots = SnapshotStore(self.state_dir / "snapshots")

        self._replaying = False
        self._derived: list[tuple[str, dict]] = []
        self._subscribers: list[Callable[[dict], None]] = []

        self._handlers: dict[str, Callable[[dict, int], tuple[object, dict]]] = {
            "provider.register": self._cmd_provider_register,
            "provider.heartbeat": self._cmd_provider_heartbeat,
            "federation.sweep": self._cmd_federation_sweep,
            "vo.upsert": self._cmd_vo_upsert,
            "sla.upsert": self._cmd_sla_upsert,
            "job.submit": self._cmd_job_submit,
            "job.stop": self._cmd_job_stop,
            "job.complete": self._cmd_job_complete,
            "scheduler.tick": self._cmd_scheduler_tick,
            "catalog.create": self._cmd_catalog_create,
            "catalog.update": self._cmd_catalog_update,
            "catalog.delete": self._cmd_catalog_delete,
            "pipeline.run": self._cmd_pipeline_run,
            "prov.track": self._cmd_prov_track,
            "secret.put": self._cmd_secret_put,
            "secret.delete": self._cmd_secret_delete,
            "endpoint.create": self._cmd_endpoint_create,
            "endpoint.delete": self._cmd_endpoint_delete,
            "infer.invoke": self._cmd_infer_invoke,
            "infer.submit_async": self._cmd_infer_submit_async,
            "infer.drain": self._cmd_infer_drain,
            "infer.autoscale": self._cmd_infer_autoscale,
            "dag.create": self._cmd_dag_create,
            "dag.invoke": self._cmd_dag_invoke,
        }
        self.recover()

    # -- command machinery ----------------------------------------------------

    def apply(self, name: str, payload: dict, ts: int | None = None):
        handler = self._handlers.get(name)
        if handler is None:
            raise ValidationError(f"unknown command {name!r}")
        with self._lock:
            if ts is None:
                ts = self.clock()
            self._derived = []
            result, enriched = handler(payload, ts)
            if not self._replaying:
                self._emit(f"command.{name}", enriched, ts)
                for kind, derived_payload in self._derived:
                    self._emit(f"derived.{kind}", derived_payload, ts)
            self._derived = []
            return result

    def _emit(self, kind: str, payload: dict, ts: int) -> None:
        event = self.log.append(kind, payload, ts)
        for subscriber in list(self._subscribers):
            subscriber(event)

    def _derive(self, kind: str, payload: dict) -> None:
        self._derived.append((kind, payload))

    def subscribe(self, callback: Callable[[dict], None]) -> Callable[[], None]:
        with self._lock:
            self._subscribers.append(callback)

        def unsubscribe() -> None:
            with self._lock:
                if callback in self._subscribers:
                    self._subscribers.remove(callback)

        return unsubscribe

    def events_since(self, seq: int = 0) -> list[dict]:
        return self.log.read_since(seq)

    # -- snapshots and recovery --------------------------------------------------

    def to_state(self) -> dict:
        return {
            "registry": self.registry.to_state(),
            "ranker": self.ranker.to_state(),
            "scheduler": self.scheduler.to_state(),
            "catalog": self.catalog.to_state(),
            "pipeline": self.pipeline.to_state(),
            "provenance": self.provenance.to_state(),
            "secrets": self.secrets.to_state(),
            "inference": self.inference.to_state(),
        }

    def from_state(self, state: dict) -> None:
        self.registry.from_state(state["registry"])
        self.ranker.from_state(state["ranker"])
        self.scheduler.from_state(state["scheduler"])
        self.catalog.from_state(state["catalog"])
        self.pipeline.from_state(state["pipeline"])
        self.provenance.from_state(state["provenance"])
        self.secrets.from_state(state["secrets"])
        self.inference.from_state(state["inference"])

    def snapshot(self) -> int:
        with self._lock:
            seq = self.log.last_seq
            self.snapshots.write(seq, self.clock(), self.to_state())
            return seq

    def recover(self) -> int:
        """Rebuild in-memory state from the newest snapshot plus the log tail."""
        with self._lock:
            start = 0
            snap = self.snapshots.latest()
            if snap is not None:
                self.from_state(snap["state"])
                start = snap["seq"]
            replayed = 0
            self._replaying = True
            try:
                for event in self.log.read_since(start):
                    kind = event["kind"]
                    if not kind.startswith("command."):
                        continue
                    name = kind.removeprefix("command.")
                    try:
                        self.apply(name, event["payload"], ts=event["ts"])
                    except Exception as exc:
                        raise StateError(
                            f"replay of {kind} (seq {event['seq']}) failed: {exc}"
                        ) from exc
                    replayed += 1
            finally:
                self._replaying = False
            return replayed

    def close(self) -> None:
        self.log.close()

    # -- federation commands ---------------------------------------------------

    def _cmd_provider_register(self, p: dict, ts: int):
        provider = self.registry.register_provider(
            p["name"],
            p.get("country", ""),
            p["endpoint"],
            Capacity.from_dict(p["capacity"]),
            set(p.get("supported_vos", ())),
            now=ts,
        )
        return provider.to_dict(), p

    def _cmd_provider_heartbeat(self, p: dict, ts: int):
        status = self.registry.heartbeat(p["provider_id"], ts, Capacity.from_dict(p.get("free", {})))
        return {"provider_id": p["provider_id"], "status": status}, p

    def _cmd_federation_sweep(self, p: dict, ts: int):
        transitions = self.registry.sweep_membership(ts)
        for provider_id, old, new in transitions:
            self._derive("membership", {"provider_id": provider_id, "from": old, "to": new})
        return [{"provider_id": t[0], "from": t[1], "to": t[2]} for t in transitions], p

    def _cmd_vo_upsert(self, p: dict, ts: int):
        vo = self.registry.upsert_vo(VirtualOrganization.from_dict(p["vo"]))
        return vo.to_dict(), p

    def _cmd_sla_upsert(self, p: dict, ts: int):
        sla = self.registry.upsert_sla(
            p["vo"],
            p["provider_id"],
            Capacity.from_dict(p["caps"]),
            p["valid_from"],
            p["valid_until"],
        )
        return sla.to_dict(), p

    # -- job commands --------------------------------------------------------------

    def _cmd_job_submit(self, p: dict, ts: int):
        record_id = p.get("record_id")
        if record_id:
            self.catalog.get_record(record_id)
        spec = JobSpec(
            owner=p["owner"],
            vo=p["vo"],
            kind=p["kind"],
            resources=Capacity.from_dict(p["resources"]),
            record_id=record_id,
            datasets=tuple(p.get("datasets", ())),
        )
        job = self.scheduler.submit(spec, ts)
        return job.to_dict(), p

    def _cmd_job_stop(self, p: dict, ts: int):
        job = self.scheduler.get_job(p["job_id"])
        old = job.status
        self.scheduler.stop(p["job_id"], p["user"], ts)
        self._derive("job.transition", {"job_id": job.id, "from": old, "to": job.status, "reason": job.reason})
        self._cascade_secrets(job)
        return job.to_dict(), p

    def _cmd_job_complete(self, p: dict, ts: int):
        job = self.scheduler.mark_complete(p["job_id"], p["user"], ts)
        self._derive("job.transition", {"job_id": job.id, "from": RUNNING, "to": job.status, "reason": job.reason})
        self._cascade_secrets(job)
        return job.to_dict(), p

    def _cascade_secrets(self, job) -> None:
        if job.status not in TERMINAL:
            return
        paths = self.secrets.delete_prefix(job.owner, f"deployments/{job.id}/")
        if paths:
            self._derive("secret.cascade", {"user": job.owner, "job_id": job.id, "paths": paths})

    def _cmd_scheduler_tick(self, p: dict, ts: int):
        report = self.scheduler.tick(ts)
        for transition in report.transitions:
            self._derive("job.transition", transition)
            job = self.scheduler.get_job(transition["job_id"])
            if transition["to"] == RUNNING and job.kind == BATCH and job.record_id:
                fragment = self.provenance.add_fragment(
                    "training",
                    job.record_id,
                    {
                        "job_id": job.id,
                        "provider": job.provider,
                        "resources": job.resources.to_dict(),
                        "owner": job.owner,
                        "datasets": list(job.datasets),
                    },
                    ts,
                )
                self._derive(
                    "provenance.fragment",
                    {"fragment_id": fragment.id, "kind": "training", "record_id": job.record_id},
                )
            if transition["to"] in TERMINAL:
                self._cascade_secrets(job)
        for notice in report.notices:
            self._derive("job.notice", notice)
        result = {
            "transitions": report.transitions,
            "notices": report.notices,
            "placed": report.placed,
        }
        return result, p

    # -- catalog commands --------------------------------------------------------------

    def _cmd_catalog_create(self, p: dict, ts: int):
        record = self.catalog.create_record(p["owner"], p["vo"], p["metadata"], ts)
        fragment = self.provenance.add_fragment(
            "catalog", record.id, {"metadata": record.metadata, "owner": record.owner}, ts
        )
        self._derive(
            "provenance.fragment",
            {"fragment_id": fragment.id, "kind": "catalog", "record_id": record.id},
        )
        return record.to_dict(), p

    def _require_record_owner(self, record_id: str, user: str):
        record = self.catalog.get_record(record_id)
        if record.owner != user:
            raise ForbiddenError(f"record {record_id} belongs to {record.owner}")
        return record

    def _cmd_catalog_update(self, p: dict, ts: int):
        self._require_record_owner(p["record_id"], p["user"])
        record = self.catalog.update_metadata(p["record_id"], p["patch"], ts)
        fragment = self.provenance.add_fragment(
            "catalog", record.id, {"metadata": record.metadata, "owner": record.owner}, ts
        )
        self._derive(
            "provenance.fragment",
            {"fragment_id": fragment.id, "kind": "catalog", "record_id": record.id},
        )
        return record.to_dict(), p

    def _cmd_catalog_delete(self, p: dict, ts: int):
        self._require_record_owner(p["record_id"], p["user"])
        self.catalog.delete_record(p["record_id"])
        return {"record_id": p["record_id"], "deleted": True}, p

    # -- pipeline and provenance commands ----------------------------------------------

    def _cmd_pipeline_run(self, p: dict, ts: int):
        self._require_record_owner(p["record_id"], p["user"])
        run = self.pipeline.run(p["record_id"], p.get("source_ref", "HEAD"), ts)
        self._derive(
            "pipeline.finished",
            {
                "run_id": run.id,
                "record_id": run.record_id,
                "status": run.status,
                "stages": [s.to_dict() for s in run.stages],
            },
        )
        return run.to_dict(), p

    def _cmd_prov_track(self, p: dict, ts: int):
        self.catalog.get_record(p["record_id"])
        fragment = self.provenance.add_fragment(
            "tracking", p["record_id"], {"metrics": p["metrics"]}, ts
        )
        self._derive(
            "provenance.fragment",
            {"fragment_id": fragment.id, "kind": "tracking", "record_id": p["record_id"]},
        )
        return fragment.to_dict(), p

    # -- secret commands ----------------------------------------------------------------

    def put_secret(self, user: str, path: str, value: str, ts: int | None = None) -> dict:
        """Encrypt first, then log: plaintext never reaches the event log."""
        nonce_b64, ciphertext_b64 = self.secrets.encrypt(user, path, value)
        return self.apply(
            "secret.put",
            {"user": user, "path": path, "nonce_b64": nonce_b64, "ciphertext_b64": ciphertext_b64},
            ts=ts,
        )

    def _cmd_secret_put(self, p: dict, ts: int):
        entry = self.secrets.put_encrypted(p["user"], p["path"], p["nonce_b64"], p["ciphertext_b64"], ts)
        return entry.summary(), p

    def _cmd_secret_delete(self, p: dict, ts: int):
        self.secrets.delete(p["user"], p["path"])
        return {"path": p["path"], "deleted": True}, p

    # -- inference commands ----------------------------------------------------------------

    def _cmd_endpoint_create(self, p: dict, ts: int):
        self.catalog.get_record(p["record_id"])
        endpoint = self.inference.create_endpoint(
            p["record_id"],
            p["owner"],
            p["vo"],
            min_replicas=p.get("min_replicas", 0),
            max_replicas=p.get("max_replicas", 5),
            concurrency=p.get("concurrency", 10),
            now=ts,
        )
        return endpoint.to_dict(), p

    def _cmd_endpoint_delete(self, p: dict, ts: int):
        endpoint = self.inference.get_endpoint(p["endpoint_id"])
        if endpoint.owner != p["user"]:
            raise ForbiddenError(f"endpoint {endpoint.id} belongs to {endpoint.owner}")
        self.inference.delete_endpoint(endpoint.id)
        return {"endpoint_id": endpoint.id, "deleted": True}, p

    def _cmd_infer_invoke(self, p: dict, ts: int):
        result = self.inference.invoke(p["endpoint_id"], p["payload"], ts)
        return result.to_dict(), p

    def _cmd_infer_submit_async(self, p: dict, ts: int):
        job = self.inference.submit_async(p["endpoint_id"], p["payload"], ts)
        return job.to_dict(), p

    def _cmd_infer_drain(self, p: dict, ts: int):
        processed = self.inference.drain(ts)
        for item in processed:
            self._derive("async.finished", item)
        return processed, p

    def _cmd_infer_autoscale(self, p: dict, ts: int):
        decisions = p.get("decisions")
        if decisions is None:
            decisions = self.inference.autoscale_tick(ts)
        else:
            self.inference.apply_scale_decisions(decisions, ts)
        for decision in decisions:
            if decision["reason"]:
                self._derive("endpoint.scaled", decision)
        return decisions, {"decisions": decisions}

    def _cmd_dag_create(self, p: dict, ts: int):
        dag = self.inference.create_dag(p["owner"], p["vo"], p["nodes"], [tuple(e) for e in p["edges"]], ts)
        return dag.to_dict(), p

    def _cmd_dag_invoke(self, p: dict, ts: int):
        return self.inference.invoke_dag(p["dag_id"], p["payload"], ts), p

    # -- queries -------------------------------------------------------------------------

    def get_secret(self, user: str, path: str) -> str:
        with self._lock:
            return self.secrets.get(user, path)

    def provenance_graph(self, record_id: str) -> dict:
        with self._lock:
            return self.provenance.build_graph(record_id).to_doc()

    def provenance_triples(self, record_id: str) -> str:
        with self._lock:
            return self.provenance.build_graph(record_id).to_triples()

    def stats(self) -> dict:
        with self._lock:
            providers = []
            total_capacity = Capacity.zero()
            total_allocated = Capacity.zero()
            for provider in self.registry.providers():
                allocated = self.scheduler.allocated(provider.id)
                free = provider.capacity - allocated
                total_capacity = total_capacity + provider.capacity
                total_allocated = total_allocated + allocated
                providers.append(
                    {
                        "id": provider.id,
                        "name": provider.name,
                        "country": provider.country,
                        "status": provider.status,
                        "capacity": provider.capacity.to_dict(),
                        "allocated": allocated.to_dict(),
                        "free": free.to_dict(),
                        "score": self.ranker.score(provider.id),
                        "last_heartbeat": provider.last_heartbeat,
                    }
                )
            jobs: dict[str, int] = {}
            for job in self.scheduler.list_jobs():
                jobs[job.status] = jobs.get(job.status, 0) + 1
            endpoints = [
                {
                    "id": ep.id,
                    "record_id": ep.record_id,
                    "replicas": ep.replicas,
                    "metrics": ep.metrics.to_dict(),
                }
                for ep in self.inference.list_endpoints()
            ]
            return {
                "providers": providers,
                "totals": {
                    "capacity": total_capacity.to_dict(),
                    "allocated": total_allocated.to_dict(),
                    "free": (total_capacity - total_allocated).to_dict(),
                },
                "jobs": dict(sorted(jobs.items())),
                "models": len(self.catalog.list_records()),
                "endpoints": endpoints,
                "events": self.log.last_seq,
            }

    # -- demo world -------------------------------------------------------------------------

    def seed_demo(self) -> None:
        """Build a small populated federation; idempotent per state dir."""
        if self.registry.providers():
            return
        self.apply(
            "vo.upsert",
            {
                "vo": {
                    "id": "vo-agri",
                    "name": "Smart Agriculture",
                    "member_roles": {"ann": "full", "bob": "demo", "carol": "full"},
                }
            },
        )
        fixtures = (
            ("alpha-dc", "NL", {"gpus": 20, "cpu_ghz": 1600, "disk_gb": 1600}),
            ("beta-dc", "DE", {"gpus": 15, "cpu_ghz": 1200, "disk_gb": 1200}),
            ("gamma-dc", "FR", {"gpus": 10, "cpu_ghz": 800, "disk_gb": 800}),
            ("delta-dc", "ES", {"gpus": 5, "cpu_ghz": 400, "disk_gb": 400}),
        )
        for name, country, capacity in fixtures:
            provider = self.apply(
                "provider.register",
                {
                    "name": name,
                    "country": country,
                    "endpoint": f"https://{name}.example.org",
                    "capacity": capacity,
                    "supported_vos": ["vo-agri"],
                },
            )
            self.apply(
                "sla.upsert",
                {
                    "vo": "vo-agri",
                    "provider_id": provider["id"],
                    "caps": capacity,
                    "valid_from": 0,
                    "valid_until": 4102444800000,
                },
            )
        record = self.apply(
            "catalog.create",
            {
                "owner": "ann",
                "vo": "vo-agri",
                "metadata": {
                    "title": "Winter wheat yield forecaster",
                    "summary": "Predicts per-parcel yield from radar time series.",
                    "license": "Apache-2.0",
                    "links": {"source_repo": "https://git.example.org/agri/wheat-yield"},
                    "authors": [{"name": "Ada Lovelace"}, {"name": "Grace Hopper"}],
                    "tags": {"domain": ["agriculture"], "task": ["regression"]},
                },
            },
        )
        self.apply(
            "endpoint.create",
            {
                "record_id": record["id"],
                "owner": "ann",
                "vo": "vo-agri",
                "min_replicas": 0,
                "max_replicas": 5,
                "concurrency": 10,
            },
        )
