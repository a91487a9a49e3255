"""Provider ranking from observed outcomes.

Each provider keeps a bounded FIFO window of (succeeded, creation_time_ms)
samples. The score favors providers that succeed often and create resources
quickly:

    p_success = (successes + 1) / (n + 2)          Laplace smoothing
    t_est     = median creation time of successes  (tau when none)
    score     = p_success / (1 + t_est / tau)

A provider with no history scores 0.5 / 2 = 0.25, which lets newcomers
compete without dominating proven members.
"""

from __future__ import annotations

import statistics
from collections import deque

DEFAULT_WINDOW = 50
DEFAULT_TAU_MS = 60_000


class ProviderRanker:
    def __init__(self, window: int = DEFAULT_WINDOW, tau_ms: int = DEFAULT_TAU_MS) -> None:
        if window < 1 or tau_ms <= 0:
            raise ValueError("window must be >= 1 and tau_ms > 0")
        self.window = window
        self.tau_ms = tau_ms
        self._samples: dict[str, deque[tuple[bool, int]]] = {}

    def observe(self, provider_id: str, succeeded: bool, creation_time_ms: int) -> None:
        if creation_time_ms < 0:
            raise ValueError("creation_time_ms must be >= 0")
        window = self._samples.setdefault(provider_id, deque(maxlen=self.window))
        window.append((bool(succeeded), int(creation_time_ms)))

    def sample_count(self, provider_id: str) -> int:
        return len(self._samples.get(provider_id, ()))

    def p_success(self, provider_id: str) -> float:
        window = self._samples.get(provider_id, ())
        successes = sum(1 for ok, _ in window if ok)
        return (successes + 1) / (len(window) + 2)

    def time_estimate_ms(self, provider_id: str) -> float:
        window = self._samples.get(provider_id, ())
        times = [t for ok, t in window if ok]
        if not times:
            return float(self.tau_ms)
        return float(statistics.median(times))

    def score(self, provider_id: str) -> float:
        return self.p_success(provider_id) / (1.0 + self.time_estimate_ms(provider_id) / self.tau_ms)

    def rank(self, provider_ids: list[str]) -> list[tuple[str, float]]:
        """Descending by score; ties broken by provider id so order is total."""
        return sorted(((pid, self.score(pid)) for pid in provider_ids), key=lambda item: (-item[1], item[0]))

    def to_state(self) -> dict:
        return {
            "window": self.window,
            "tau_ms": self.tau_ms,
            "samples": {pid: [[ok, t] for ok, t in dq] for pid, dq in sorted(self._samples.items()) if dq},
        }

    def from_state(self, state: dict) -> None:
        self.window = state["window"]
        self.tau_ms = state["tau_ms"]
        self._samples = {
            pid: deque(((bool(ok), int(t)) for ok, t in rows), maxlen=self.window)
            for pid, rows in state["samples"].items()
        }
