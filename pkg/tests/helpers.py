"""Shared fixtures and independent reference implementations.

The reference scheduler below deliberately avoids the production classes:
it works on plain tuples and dicts so that agreement between the two is
evidence the documented policy is what actually runs.
"""

from __future__ import annotations

from fedplane.federation import Capacity, FederationRegistry, VirtualOrganization

# Four-member federation used across tests: totals are 50 GPUs,
# 4000 CPU GHz, and 4000 GB of disk.
FIXTURE_PROVIDERS = (
    ("alpha-dc", "NL", Capacity(20, 1600, 1600)),
    ("beta-dc", "DE", Capacity(15, 1200, 1200)),
    ("gamma-dc", "FR", Capacity(10, 800, 800)),
    ("delta-dc", "ES", Capacity(5, 400, 400)),
)
FIXTURE_TOTAL = Capacity(50, 4000, 4000)

FAR_FUTURE = 10**15


class ManualClock:
    """Deterministic clock: every reading advances by a fixed step, and
    tests can jump forward to cross timeouts without thousands of calls."""

    def __init__(self, start: int = 1_000_000, step: int = 250) -> None:
        self.t = start
        self.step = step

    def __call__(self) -> int:
        self.t += self.step
        return self.t

    def jump(self, ms: int) -> None:
        self.t += ms


def build_fixture_registry(vos: tuple[str, ...] = ("vo-agri",)) -> FederationRegistry:
    registry = FederationRegistry()
    for vo in vos:
        registry.upsert_vo(VirtualOrganization(id=vo, name=vo))
    for name, country, capacity in FIXTURE_PROVIDERS:
        provider = registry.register_provider(
            name, country, f"https://{name}.example.org", capacity, supported_vos=set(vos), now=0
        )
        for vo in vos:
            registry.upsert_sla(vo, provider.id, capacity, 0, FAR_FUTURE)
    return registry


# -- reference scheduling pass -------------------------------------------------

CapT = tuple[int, int, int]


def t_of(c: Capacity) -> CapT:
    return (c.gpus, c.cpu_ghz, c.disk_gb)


def _ge(a: CapT, b: CapT) -> bool:
    return a[0] >= b[0] and a[1] >= b[1] and a[2] >= b[2]


def _sub(a: CapT, b: CapT) -> CapT:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _add(a: CapT, b: CapT) -> CapT:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


ZERO: CapT = (0, 0, 0)


def reference_schedule(
    queued: list[dict],
    providers: dict[str, dict],
    slas: dict[tuple[str, str], dict],
    provider_used: dict[str, CapT],
    vo_used: dict[tuple[str, str], CapT],
    scores: dict[str, float],
    now: int,
) -> list[tuple[str, str]]:
    """One scheduling pass per the documented policy.

    queued: [{"id", "vo", "res": CapT}] in id order.
    providers: pid -> {"status", "capacity": CapT}.
    slas: (vo, pid) -> {"caps": CapT, "valid_from", "valid_until"}.
    Returns placements as (job_id, provider_id) in placement order.
    """
    provider_used = dict(provider_used)
    vo_used = dict(vo_used)
    by_vo: dict[str, list[dict]] = {}
    for job in queued:
        by_vo.setdefault(job["vo"], []).append(job)
    vos = sorted(by_vo)

    placements: list[tuple[str, str]] = []
    depth = 0
    while True:
        wave = [by_vo[vo][depth] for vo in vos if depth < len(by_vo[vo])]
        if not wave:
            break
        for job in wave:
            best = None
            for pid in sorted(providers):
                info = providers[pid]
                if info["status"] != "alive":
                    continue
                sla = slas.get((job["vo"], pid))
                if sla is None or not (sla["valid_from"] <= now < sla["valid_until"]):
                    continue
                free = _sub(info["capacity"], provider_used.get(pid, ZERO))
                if not _ge(free, job["res"]):
                    continue
                used = vo_used.get((job["vo"], pid), ZERO)
                headroom = _sub(sla["caps"], used) if _ge(sla["caps"], used) else ZERO
                if not _ge(headroom, job["res"]):
                    continue
                if best is None or scores[pid] > scores[best]:
                    best = pid
            if best is not None:
                placements.append((job["id"], best))
                provider_used[best] = _add(provider_used.get(best, ZERO), job["res"])
                key = (job["vo"], best)
                vo_used[key] = _add(vo_used.get(key, ZERO), job["res"])
        depth += 1
    return placements
