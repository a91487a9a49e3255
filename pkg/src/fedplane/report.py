"""Federation report: delimited tables plus rendered figures.

Takes one stats document (the /stats response) and writes a small report
directory: providers.csv, jobs.csv, and endpoints.csv for machine use,
and capacity.png, jobs.png, and latency.png for people. Rendering uses
the Agg backend so it works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

RESOURCES = ("gpus", "cpu_ghz", "disk_gb")


def _bucket_labels(bounds: list[int]) -> list[str]:
    return [f"le_{b}ms" for b in bounds] + [f"gt_{bounds[-1]}ms"]


def write_provider_csv(stats: dict, path: Path) -> None:
    header = ["id", "name", "country", "status", "score"]
    for resource in RESOURCES:
        header += [f"{resource}_capacity", f"{resource}_allocated", f"{resource}_free"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p in stats["providers"]:
            row = [p["id"], p["name"], p["country"], p["status"], f"{p['score']:.6f}"]
            for resource in RESOURCES:
                row += [p["capacity"][resource], p["allocated"][resource], p["free"][resource]]
            writer.writerow(row)


def write_jobs_csv(stats: dict, path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["status", "count"])
        for status, count in sorted(stats["jobs"].items()):
            writer.writerow([status, count])


def write_endpoints_csv(stats: dict, path: Path) -> None:
    endpoints = stats["endpoints"]
    bounds = endpoints[0]["metrics"]["buckets_ms"] if endpoints else [10, 50, 100, 500, 1000]
    header = ["id", "record_id", "replicas", "invocations", "errors", "replica_ms"]
    header += [f"bucket_{label}" for label in _bucket_labels(bounds)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for ep in endpoints:
            m = ep["metrics"]
            row = [ep["id"], ep["record_id"], ep["replicas"], m["invocations"], m["errors"], m["replica_ms"]]
            row += m["histogram"]
            writer.writerow(row)


def plot_capacity(stats: dict, path: Path) -> None:
    providers = stats["providers"]
    names = [p["name"] for p in providers]
    allocated = [p["allocated"]["gpus"] for p in providers]
    free = [p["free"]["gpus"] for p in providers]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.barh(names, allocated, label="allocated", color="#c44e52")
    ax.barh(names, free, left=allocated, label="free", color="#55a868")
    ax.set_xlabel("GPUs")
    ax.set_title("GPU capacity by provider")
    ax.legend(loc="lower right")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_jobs(stats: dict, path: Path) -> None:
    items = sorted(stats["jobs"].items())
    statuses = [s for s, _ in items] or ["none"]
    counts = [c for _, c in items] or [0]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(statuses, counts, color="#4c72b0")
    ax.set_ylabel("jobs")
    ax.set_title("Jobs by status")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_latency(stats: dict, path: Path) -> None:
    endpoints = stats["endpoints"]
    bounds = endpoints[0]["metrics"]["buckets_ms"] if endpoints else [10, 50, 100, 500, 1000]
    totals = [0] * (len(bounds) + 1)
    for ep in endpoints:
        for i, count in enumerate(ep["metrics"]["histogram"]):
            totals[i] += count
    labels = [f"<={b}" for b in bounds] + [f">{bounds[-1]}"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(labels, totals, color="#8172b2")
    ax.set_xlabel("latency (ms)")
    ax.set_ylabel("invocations")
    ax.set_title("Invocation latency")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_report(stats: dict, out_dir: Path | str) -> list[Path]:
    """Write all report artifacts and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {
        out / "providers.csv": write_provider_csv,
        out / "jobs.csv": write_jobs_csv,
        out / "endpoints.csv": write_endpoints_csv,
        out / "capacity.png": plot_capacity,
        out / "jobs.png": plot_jobs,
        out / "latency.png": plot_latency,
    }
    for path, producer in artifacts.items():
        producer(stats, path)
    return list(artifacts)
