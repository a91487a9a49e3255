"""Placement policy, lifecycle state machines, and conservation."""

import pytest
from hypothesis import given, settings, strategies as st

from fedplane.errors import ForbiddenError, StateError, ValidationError
from fedplane.federation import Capacity, FederationRegistry, VirtualOrganization
from fedplane.ranker import ProviderRanker
from fedplane.scheduler import (
    BATCH,
    EXPIRED,
    QUEUED,
    RUNNING,
    STANDARD,
    STOPPED,
    TRYME,
    JobSpec,
    Scheduler,
)

from helpers import FAR_FUTURE, build_fixture_registry, reference_schedule, t_of


def small_world(vos=("vo-a",), providers=((4, 400, 400),)) -> Scheduler:
    """Registry with uniform SLAs equal to each provider's full capacity."""
    registry = FederationRegistry()
    for vo in vos:
        registry.upsert_vo(VirtualOrganization(id=vo, name=vo))
    for i, dims in enumerate(providers):
        p = registry.register_provider(f"p{i}", "NL", f"https://p{i}", Capacity(*dims), now=0)
        for vo in vos:
            registry.upsert_sla(vo, p.id, Capacity(*dims), 0, FAR_FUTURE)
    return Scheduler(registry)


def gpu_job(vo="vo-a", owner="ann", kind=STANDARD, gpus=1) -> JobSpec:
    return JobSpec(owner=owner, vo=vo, kind=kind, resources=Capacity(gpus, 10, 10))


class TestSubmit:
    def test_ids_are_sequential(self):
        sched = small_world()
        assert sched.submit(gpu_job(), now=0).id == "job-0001"
        assert sched.submit(gpu_job(), now=0).id == "job-0002"

    def test_rejects_bad_kind_zero_resources_unknown_vo(self):
        sched = small_world()
        with pytest.raises(ValidationError):
            sched.submit(JobSpec("ann", "vo-a", "forever", Capacity(1, 0, 0)), now=0)
        with pytest.raises(ValidationError):
            sched.submit(JobSpec("ann", "vo-a", STANDARD, Capacity.zero()), now=0)
        from fedplane.errors import NotFoundError

        with pytest.raises(NotFoundError):
            sched.submit(JobSpec("ann", "vo-nope", STANDARD, Capacity(1, 0, 0)), now=0)


class TestPlacementPolicy:
    def test_both_transitions_reported_in_one_tick(self):
        sched = small_world()
        job = sched.submit(gpu_job(), now=0)
        report = sched.tick(now=1_000)
        hops = [(t["from"], t["to"]) for t in report.transitions if t["job_id"] == job.id]
        assert hops == [("queued", "scheduled"), ("scheduled", "running")]
        assert job.status == RUNNING and job.started_at == 1_000

    def test_round_robin_interleaves_vos(self):
        sched = small_world(vos=("vo-a", "vo-b"), providers=((3, 300, 300),))
        a1 = sched.submit(gpu_job("vo-a"), now=0)
        a2 = sched.submit(gpu_job("vo-a"), now=0)
        b1 = sched.submit(gpu_job("vo-b"), now=0)
        b2 = sched.submit(gpu_job("vo-b"), now=0)
        report = sched.tick(now=1)
        placed = [t["job_id"] for t in report.transitions if t["to"] == RUNNING]
        # wave order a1, b1, a2; capacity exhausted before b2
        assert placed == [a1.id, b1.id, a2.id]
        assert b2.status == QUEUED

    def test_skip_and_continue_lets_small_jobs_through(self):
        sched = small_world(providers=((4, 400, 400),))
        big = sched.submit(JobSpec("ann", "vo-a", STANDARD, Capacity(10, 10, 10)), now=0)
        small = sched.submit(gpu_job(), now=0)
        sched.tick(now=1)
        assert big.status == QUEUED
        assert small.status == RUNNING

    def test_best_ranked_provider_wins(self):
        sched = small_world(providers=((4, 400, 400), (4, 400, 400)))
        sched.ranker.observe("pr-0002", True, 1_000)
        job = sched.submit(gpu_job(), now=0)
        sched.tick(now=1)
        assert job.provider == "pr-0002"

    def test_tie_breaks_to_lower_provider_id(self):
        sched = small_world(providers=((4, 400, 400), (4, 400, 400)))
        job = sched.submit(gpu_job(), now=0)
        sched.tick(now=1)
        assert job.provider == "pr-0001"

    def test_sla_headroom_caps_a_vo(self):
        sched = small_world()
        sched.registry.upsert_sla("vo-a", "pr-0001", Capacity(2, 200, 200), 0, FAR_FUTURE)
        jobs = [sched.submit(gpu_job(), now=0) for _ in range(3)]
        sched.tick(now=1)
        statuses = [j.status for j in jobs]
        assert statuses == [RUNNING, RUNNING, QUEUED]

    def test_expired_sla_disqualifies_provider(self):
        sched = small_world()
        sched.registry.upsert_sla("vo-a", "pr-0001", Capacity(4, 400, 400), 0, 500)
        job = sched.submit(gpu_job(), now=0)
        sched.tick(now=1_000)
        assert job.status == QUEUED

    def test_suspect_provider_gets_no_new_jobs_but_keeps_old(self):
        sched = small_world()
        j1 = sched.submit(gpu_job(), now=0)
        sched.tick(now=1)
        assert j1.status == RUNNING
        sched.registry.sweep_membership(40_000)  # silent past suspect threshold
        j2 = sched.submit(gpu_job(), now=40_000)
        sched.tick(now=40_001)
        assert j1.status == RUNNING
        assert j2.status == QUEUED

    def test_dead_provider_fails_jobs_and_releases_capacity(self):
        sched = small_world()
        job = sched.submit(gpu_job(), now=0)
        sched.tick(now=1)
        sched.registry.sweep_membership(500_000)
        report = sched.tick(now=500_001)
        assert job.status == "failed" and "dead" in job.reason
        assert any(t["to"] == "failed" and t["job_id"] == job.id for t in report.transitions)
        assert sched.free_capacity("pr-0001") == Capacity(4, 400, 400)
        sched.check_conservation()

    def test_queued_jobs_survive_with_no_candidates(self):
        sched = small_world()
        job = sched.submit(JobSpec("ann", "vo-a", STANDARD, Capacity(100, 0, 0)), now=0)
        for t in range(5):
            sched.tick(now=t)
        assert job.status == QUEUED


class TestLifecycles:
    def test_standard_runs_until_stopped(self):
        sched = small_world()
        job = sched.submit(gpu_job(kind=STANDARD), now=0)
        sched.tick(now=1)
        for t in range(2, 5):
            sched.tick(now=t * 1_000_000)
        assert job.status == RUNNING
        sched.stop(job.id, "ann", now=9_000_000)
        assert job.status == STOPPED and job.finished_at == 9_000_000
        assert sched.free_capacity("pr-0001") == Capacity(4, 400, 400)

    def test_stop_requires_owner(self):
        sched = small_world()
        job = sched.submit(gpu_job(), now=0)
        with pytest.raises(ForbiddenError):
            sched.stop(job.id, "mallory", now=1)

    def test_stop_terminal_job_conflicts(self):
        sched = small_world()
        job = sched.submit(gpu_job(), now=0)
        sched.stop(job.id, "ann", now=1)
        with pytest.raises(StateError):
            sched.stop(job.id, "ann", now=2)

    def test_queued_job_can_be_stopped_before_placement(self):
        sched = small_world()
        job = sched.submit(gpu_job(), now=0)
        sched.stop(job.id, "ann", now=1)
        assert job.status == STOPPED and job.provider is None
        sched.check_conservation()

    def test_batch_completes_only_from_running(self):
        sched = small_world()
        job = sched.submit(gpu_job(kind=BATCH), now=0)
        with pytest.raises(StateError):
            sched.mark_complete(job.id, "ann", now=1)
        sched.tick(now=1)
        sched.mark_complete(job.id, "ann", now=2)
        assert job.status == "completed"
        assert sched.free_capacity("pr-0001") == Capacity(4, 400, 400)

    def test_only_batch_jobs_complete(self):
        sched = small_world()
        job = sched.submit(gpu_job(kind=STANDARD), now=0)
        sched.tick(now=1)
        with pytest.raises(StateError):
            sched.mark_complete(job.id, "ann", now=2)

    def test_tryme_ttl_is_strict(self):
        sched = small_world()
        job = sched.submit(gpu_job(kind=TRYME), now=0)
        sched.tick(now=1_000)
        assert job.expires_at == 601_000
        sched.tick(now=601_000)  # exactly at expiry: still running
        assert job.status == RUNNING
        report = sched.tick(now=601_001)
        assert job.status == EXPIRED
        assert any(t["to"] == EXPIRED for t in report.transitions)
        assert sched.free_capacity("pr-0001") == Capacity(4, 400, 400)

    def test_tryme_notice_fires_once(self):
        sched = small_world()
        job = sched.submit(gpu_job(kind=TRYME), now=0)
        sched.tick(now=1_000)
        assert sched.tick(now=300_999).notices == []
        first = sched.tick(now=301_000)
        assert first.notices == [{"job_id": job.id, "kind": "tryme_notice", "expires_at": 601_000}]
        assert sched.tick(now=301_001).notices == []


class TestOracleEquivalence:
    @given(
        st.integers(1, 4),
        st.lists(
            st.tuples(st.sampled_from(["vo-a", "vo-b", "vo-c"]), st.integers(1, 6)),
            min_size=1,
            max_size=8,
        ),
        st.lists(st.tuples(st.integers(0, 3), st.booleans(), st.integers(0, 90_000)), max_size=20),
    )
    @settings(max_examples=120, deadline=None)
    def test_tick_matches_reference(self, n_providers, job_specs, observations):
        registry = FederationRegistry()
        for vo in ("vo-a", "vo-b", "vo-c"):
            registry.upsert_vo(VirtualOrganization(id=vo, name=vo))
        caps = [(4, 400, 400), (2, 200, 200), (6, 600, 600), (3, 300, 300)]
        for i in range(n_providers):
            p = registry.register_provider(f"p{i}", "NL", f"https://p{i}", Capacity(*caps[i]), now=0)
            for vo in ("vo-a", "vo-b", "vo-c"):
                registry.upsert_sla(vo, p.id, Capacity(*caps[i]), 0, FAR_FUTURE)
        sched = Scheduler(registry)
        for idx, ok, ms in observations:
            if idx < n_providers:
                sched.ranker.observe(f"pr-{idx + 1:04d}", ok, ms)

        jobs = [
            sched.submit(JobSpec("ann", vo, STANDARD, Capacity(g, g * 10, g * 10)), now=0)
            for vo, g in job_specs
        ]
        expected = reference_schedule(
            queued=[{"id": j.id, "vo": j.vo, "res": t_of(j.resources)} for j in jobs],
            providers={p.id: {"status": p.status, "capacity": t_of(p.capacity)} for p in registry.providers()},
            slas={
                (s.vo, s.provider): {"caps": t_of(s.caps), "valid_from": s.valid_from, "valid_until": s.valid_until}
                for s in registry.slas()
            },
            provider_used={},
            vo_used={},
            scores={p.id: sched.ranker.score(p.id) for p in registry.providers()},
            now=1,
        )
        report = sched.tick(now=1)
        actual = [(t["job_id"], t["provider"]) for t in report.transitions if t["to"] == RUNNING]
        assert actual == expected
        sched.check_conservation()


class TestConservationWalk:
    @given(st.lists(st.integers(0, 5), min_size=1, max_size=60))
    @settings(max_examples=60, deadline=None)
    def test_random_walk_never_breaks_books(self, ops):
        sched = small_world(vos=("vo-a", "vo-b"), providers=((4, 400, 400), (2, 200, 200)))
        now = 0
        counter = 0
        for op in ops:
            now += 7_000
            if op == 0:
                counter += 1
                vo = "vo-a" if counter % 2 else "vo-b"
                kind = (STANDARD, BATCH, TRYME)[counter % 3]
                sched.submit(JobSpec("ann", vo, kind, Capacity(1 + counter % 2, 10, 10)), now=now)
            elif op == 1:
                sched.tick(now=now)
            elif op == 2:
                running = sched.list_jobs(status=RUNNING)
                if running:
                    sched.stop(running[0].id, "ann", now=now)
            elif op == 3:
                for job in sched.list_jobs(status=RUNNING):
                    if job.kind == BATCH:
                        sched.mark_complete(job.id, "ann", now=now)
                        break
            elif op == 4:
                for p in sched.registry.providers():
                    sched.registry.heartbeat(p.id, now, Capacity.zero())
            else:
                sched.registry.sweep_membership(now)
            sched.check_conservation()
            for pid in ("pr-0001", "pr-0002"):
                free = sched.free_capacity(pid)
                cap = sched.registry.get_provider(pid).capacity
                assert cap.covers(free)

    def test_state_round_trip_rebuilds_allocations(self):
        sched = small_world(vos=("vo-a", "vo-b"), providers=((4, 400, 400),))
        sched.submit(gpu_job("vo-a"), now=0)
        sched.submit(gpu_job("vo-b"), now=0)
        sched.tick(now=1)
        state = sched.to_state()
        other = Scheduler(sched.registry)
        other.from_state(state)
        other.check_conservation()
        assert other.free_capacity("pr-0001") == Capacity(2, 380, 380)
        assert other.to_state() == state
        assert other.submit(gpu_job(), now=2).id == "job-0003"


class TestFixtureWorld:
    def test_paper_scale_federation_schedules_everything(self):
        registry = build_fixture_registry(vos=("vo-agri",))
        sched = Scheduler(registry)
        jobs = [
            sched.submit(JobSpec("ann", "vo-agri", BATCH, Capacity(5, 400, 400)), now=0)
            for _ in range(10)
        ]
        sched.tick(now=1)
        assert all(j.status == RUNNING for j in jobs)
        total_free = Capacity.zero()
        for p in registry.providers():
            total_free = total_free + sched.free_capacity(p.id)
        assert total_free == Capacity(0, 0, 0)
        sched.check_conservation()
