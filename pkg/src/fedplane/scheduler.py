"""Quota-aware job scheduling across federation providers.

Jobs come in three kinds:

    standard  runs until the owner stops it
    batch     runs until the owner marks it complete
    tryme     short-lived evaluation run with a fixed TTL and a single
              courtesy notice partway through

Placement happens inside tick(), which first fails jobs stranded on dead
providers, then expires overdue tryme jobs, then emits pending tryme
notices, and finally schedules the queue. Queued jobs are visited in
per-VO round-robin order: VOs sorted lexicographically, interleaved one
job per VO by queue position, FIFO inside a VO. A job that cannot be
placed is skipped and stays queued; each queued job is tried once per tick.

A provider is a candidate when it is alive, has an SLA with the job's VO
that is valid now, has enough free capacity, and the VO still has headroom
under that SLA. Among candidates the ranker's best score wins, ties going
to the lower provider id. Free capacity is defined as registered capacity
minus the sum of active allocations, so conservation holds by construction.

Placed jobs pass through scheduled and running in the same tick; both
transitions are reported so the event trail stays complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import zip_longest

from .errors import ForbiddenError, NotFoundError, StateError, ValidationError
from .federation import ALIVE, DEAD, Capacity, FederationRegistry
from .ranker import ProviderRanker

STANDARD = "standard"
BATCH = "batch"
TRYME = "tryme"
JOB_KINDS = (STANDARD, BATCH, TRYME)

QUEUED = "queued"
SCHEDULED = "scheduled"
RUNNING = "running"
COMPLETED = "completed"
STOPPED = "stopped"
FAILED = "failed"
EXPIRED = "expired"
TERMINAL = frozenset({COMPLETED, STOPPED, FAILED, EXPIRED})

DEFAULT_TRYME_TTL_MS = 600_000
DEFAULT_TRYME_NOTIFY_MS = 300_000


@dataclass(frozen=True)
class JobSpec:
    owner: str
    vo: str
    kind: str
    resources: Capacity
    record_id: str | None = None
    datasets: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.kind not in JOB_KINDS:
            raise ValidationError(f"unknown job kind {self.kind!r}")
        if not self.owner or not self.vo:
            raise ValidationError("job needs an owner and a vo")
        if self.resources.is_zero():
            raise ValidationError("job must request at least one resource")


@dataclass
class Job:
    id: str
    owner: str
    vo: str
    kind: str
    resources: Capacity
    record_id: str | None
    datasets: tuple[str, ...]
    status: str = QUEUED
    provider: str | None = None
    created_at: int = 0
    started_at: int | None = None
    finished_at: int | None = None
    expires_at: int | None = None
    notify_at: int | None = None
    notified: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "vo": self.vo,
            "kind": self.kind,
            "resources": self.resources.to_dict(),
            "record_id": self.record_id,
            "datasets": list(self.datasets),
            "status": self.status,
            "provider": self.provider,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "expires_at": self.expires_at,
            "notify_at": self.notify_at,
            "notified": self.notified,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Job":
        return cls(
            id=d["id"],
            owner=d["owner"],
            vo=d["vo"],
            kind=d["kind"],
            resources=Capacity.from_dict(d["resources"]),
            record_id=d.get("record_id"),
            datasets=tuple(d.get("datasets", ())),
            status=d["status"],
            provider=d.get("provider"),
            created_at=d["created_at"],
            started_at=d.get("started_at"),
            finished_at=d.get("finished_at"),
            expires_at=d.get("expires_at"),
            notify_at=d.get("notify_at"),
            notified=d.get("notified", False),
            reason=d.get("reason", ""),
        )


@dataclass
class TickReport:
    now: int
    transitions: list[dict] = field(default_factory=list)
    notices: list[dict] = field(default_factory=list)

    def record(self, job: Job, old: str, new: str, reason: str = "") -> None:
        entry = {"job_id": job.id, "from": old, "to": new, "provider": job.provider}
        if reason:
            entry["reason"] = reason
        self.transitions.append(entry)

    @property
    def placed(self) -> int:
        return sum(1 for t in self.transitions if t["to"] == RUNNING)


class Scheduler:
    def __init__(
        self,
        registry: FederationRegistry,
        ranker: ProviderRanker | None = None,
        tryme_ttl_ms: int = DEFAULT_TRYME_TTL_MS,
        tryme_notify_ms: int = DEFAULT_TRYME_NOTIFY_MS,
    ) -> None:
        if not 0 < tryme_notify_ms < tryme_ttl_ms:
            raise ValidationError("need 0 < tryme_notify_ms < tryme_ttl_ms")
        self.registry = registry
        self.ranker = ranker or ProviderRanker()
        self.tryme_ttl_ms = tryme_ttl_ms
        self.tryme_notify_ms = tryme_notify_ms
        self._jobs: dict[str, Job] = {}
        self._next = 1
        self._allocated: dict[str, Capacity] = {}
        self._vo_allocated: dict[tuple[str, str], Capacity] = {}

    # -- submission and owner actions ----------------------------------------

    def submit(self, spec: JobSpec, now: int) -> Job:
        spec.validate()
        self.registry.require_vo(spec.vo)
        job = Job(
            id=f"job-{self._next:04d}",
            owner=spec.owner,
            vo=spec.vo,
            kind=spec.kind,
            resources=spec.resources,
            record_id=spec.record_id,
            datasets=spec.datasets,
            created_at=now,
        )
        self._next += 1
        self._jobs[job.id] = job
        return job

    def get_job(self, job_id: str) -> Job:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise NotFoundError(f"unknown job {job_id!r}") from None

    def list_jobs(
        self,
        vo: str | None = None,
        owner: str | None = None,
        status: str | None = None,
    ) -> list[Job]:
        out = []
        for job_id in sorted(self._jobs):
            job = self._jobs[job_id]
            if vo is not None and job.vo != vo:
                continue
            if owner is not None and job.owner != owner:
                continue
            if status is not None and job.status != status:
                continue
            out.append(job)
        return out

    def stop(self, job_id: str, user: str, now: int) -> Job:
        job = self.get_job(job_id)
        if job.owner != user:
            raise ForbiddenError("only the owner may stop a job")
        if job.status in TERMINAL:
            raise StateError(f"job {job_id} already {job.status}")
        self._finish(job, STOPPED, now, "stopped by owner")
        return job

    def mark_complete(self, job_id: str, user: str, now: int) -> Job:
        job = self.get_job(job_id)
        if job.owner != user:
            raise ForbiddenError("only the owner may complete a job")
        if job.kind != BATCH:
            raise StateError("only batch jobs complete")
        if job.status != RUNNING:
            raise StateError(f"job {job_id} is {job.status}, not running")
        self._finish(job, COMPLETED, now, "completed by owner")
        return job

    # -- the tick --------------------------------------------------------------

    def tick(self, now: int) -> TickReport:
        report = TickReport(now=now)
        self._fail_on_dead_providers(now, report)
        self._expire_tryme(now, report)
        self._notify_tryme(now, report)
        self._schedule_queue(now, report)
        return report

    def _fail_on_dead_providers(self, now: int, report: TickReport) -> None:
        for job in self.list_jobs():
            if job.status in (SCHEDULED, RUNNING) and job.provider:
                if self.registry.get_provider(job.provider).status == DEAD:
                    old = job.status
                    duration = now - job.created_at
                    self._finish(job, FAILED, now, f"provider {job.provider} dead")
                    self.ranker.observe(job.provider, False, max(duration, 0))
                    report.record(job, old, FAILED, job.reason)

    def _expire_tryme(self, now: int, report: TickReport) -> None:
        for job in self.list_jobs(status=RUNNING):
            if job.kind == TRYME and job.expires_at is not None and now > job.expires_at:
                self._finish(job, EXPIRED, now, "tryme ttl elapsed")
                report.record(job, RUNNING, EXPIRED, job.reason)

    def _notify_tryme(self, now: int, report: TickReport) -> None:
        for job in self.list_jobs(status=RUNNING):
            if job.kind == TRYME and not job.notified and job.notify_at is not None and now >= job.notify_at:
                job.notified = True
                report.notices.append({"job_id": job.id, "kind": "tryme_notice", "expires_at": job.expires_at})

    def _schedule_queue(self, now: int, report: TickReport) -> None:
        queues: dict[str, list[Job]] = {}
        for job in self.list_jobs(status=QUEUED):
            queues.setdefault(job.vo, []).append(job)  # FIFO: ids are monotonic
        if not queues:
            return
        # scores are frozen for the whole pass so placement order cannot
        # feed back into provider choice within one tick
        scores = {p.id: self.ranker.score(p.id) for p in self.registry.providers()}
        placed: list[Job] = []
        ordered = [queues[vo] for vo in sorted(queues)]
        for wave in zip_longest(*ordered):
            for job in wave:
                if job is None:
                    continue
                candidates = self.candidate_providers(job, now)
                if not candidates:
                    continue
                provider_id = min(candidates, key=lambda pid: (-scores[pid], pid))
                self._place(job, provider_id, now, report)
                placed.append(job)
        for job in placed:
            self.ranker.observe(job.provider, True, max(now - job.created_at, 0))

    def choose_provider(self, job: Job, now: int) -> str | None:
        candidates = self.candidate_providers(job, now)
        if not candidates:
            return None
        return self.ranker.rank(candidates)[0][0]

    def candidate_providers(self, job: Job, now: int) -> list[str]:
        candidates = []
        for provider in self.registry.providers():
            if provider.status != ALIVE:
                continue
            sla = self.registry.valid_sla(job.vo, provider.id, now)
            if sla is None:
                continue
            if not self.free_capacity(provider.id).covers(job.resources):
                continue
            used = self._vo_allocated.get((job.vo, provider.id), Capacity.zero())
            if not (sla.caps - used if sla.caps.covers(used) else Capacity.zero()).covers(job.resources):
                continue
            candidates.append(provider.id)
        return candidates

    def _place(self, job: Job, provider_id: str, now: int, report: TickReport) -> None:
        job.provider = provider_id
        self._allocated[provider_id] = self.allocated(provider_id) + job.resources
        key = (job.vo, provider_id)
        self._vo_allocated[key] = self._vo_allocated.get(key, Capacity.zero()) + job.resources
        job.status = SCHEDULED
        report.record(job, QUEUED, SCHEDULED)
        job.status = RUNNING
        job.started_at = now
        if job.kind == TRYME:
            job.expires_at = now + self.tryme_ttl_ms
            job.notify_at = now + self.tryme_notify_ms
        report.record(job, SCHEDULED, RUNNING)

    def _finish(self, job: Job, status: str, now: int, reason: str) -> None:
        if job.provider and job.status in (SCHEDULED, RUNNING):
            self._allocated[job.provider] = self.allocated(job.provider) - job.resources
            key = (job.vo, job.provider)
            self._vo_allocated[key] = self._vo_allocated[key] - job.resources
            if self._vo_allocated[key].is_zero():
                del self._vo_allocated[key]
        job.status = status
        job.finished_at = now
        job.reason = reason

    # -- accounting --------------------------------------------------------------

    def allocated(self, provider_id: str) -> Capacity:
        return self._allocated.get(provider_id, Capacity.zero())

    def free_capacity(self, provider_id: str) -> Capacity:
        return self.registry.get_provider(provider_id).capacity - self.allocated(provider_id)

    def vo_usage(self, vo: str) -> dict[str, Capacity]:
        return {
            provider: caps
            for (usage_vo, provider), caps in sorted(self._vo_allocated.items())
            if usage_vo == vo
        }

    def check_conservation(self) -> None:
        """Free + allocated must equal capacity, and books must match jobs."""
        by_provider: dict[str, Capacity] = {}
        by_pair: dict[tuple[str, str], Capacity] = {}
        for job in self._jobs.values():
            if job.status in (SCHEDULED, RUNNING) and job.provider:
                by_provider[job.provider] = by_provider.get(job.provider, Capacity.zero()) + job.resources
                key = (job.vo, job.provider)
                by_pair[key] = by_pair.get(key, Capacity.zero()) + job.resources
        booked = {p: c for p, c in self._allocated.items() if not c.is_zero()}
        if booked != by_provider:
            raise StateError("allocation books disagree with active jobs")
        if {k: v for k, v in self._vo_allocated.items()} != by_pair:
            raise StateError("vo allocation books disagree with active jobs")
        for provider_id, used in by_provider.items():
            capacity = self.registry.get_provider(provider_id).capacity
            if not capacity.covers(used):
                raise StateError(f"provider {provider_id} is over-allocated")

    # -- state ----------------------------------------------------------------------

    def to_state(self) -> dict:
        return {
            "jobs": [self._jobs[jid].to_dict() for jid in sorted(self._jobs)],
            "next": self._next,
            "tryme_ttl_ms": self.tryme_ttl_ms,
            "tryme_notify_ms": self.tryme_notify_ms,
        }

    def from_state(self, state: dict) -> None:
        self._jobs = {d["id"]: Job.from_dict(d) for d in state["jobs"]}
        self._next = state["next"]
        self.tryme_ttl_ms = state["tryme_ttl_ms"]
        self.tryme_notify_ms = state["tryme_notify_ms"]
        self._allocated = {}
        self._vo_allocated = {}
        for job in self._jobs.values():
            if job.status in (SCHEDULED, RUNNING) and job.provider:
                self._allocated[job.provider] = self.allocated(job.provider) + job.resources
                key = (job.vo, job.provider)
                self._vo_allocated[key] = self._vo_allocated.get(key, Capacity.zero()) + job.resources
