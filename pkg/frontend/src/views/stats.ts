/**
 * Operational overview: headline counters, the provider fleet with
 * per-resource utilization, job counts by status, and the endpoint
 * latency histogram drawn as CSS bars.
 */

import { clear, el, fmtCapacity, fmtTime, statusChip } from "../dom.js";
import type { StatsDoc } from "../types.js";
import type { RouteCtx } from "../router.js";

function counter(label: string, value: string | number): HTMLElement {
  return el("div", { class: "counter" }, el("strong", {}, String(value)), el("span", {}, label));
}

function histogram(stats: StatsDoc): HTMLElement {
  const buckets = stats.endpoints[0]?.metrics.buckets_ms ?? [10, 50, 100, 500, 1000];
  const sums = new Array<number>(buckets.length + 1).fill(0);
  for (const ep of stats.endpoints) {
    ep.metrics.histogram.forEach((count, i) => {
      sums[i] += count;
    });
  }
  const labels = buckets.map((b) => `<=${b}ms`).concat(`>${buckets[buckets.length - 1]}ms`);
  const max = Math.max(...sums, 1);
  const bars = el("div", { class: "bars", id: "latency-histogram" });
  sums.forEach((count, i) => {
    bars.append(
      el(
        "div",
        { class: "bar-col", "data-bucket": labels[i], "data-count": String(count) },
        el("div", { class: "bar", style: `height:${Math.round((count / max) * 120)}px` }),
        el("span", { class: "bar-label" }, labels[i]),
        el("span", { class: "bar-count" }, String(count)),
      ),
    );
  });
  return bars;
}

export async function renderStats(ctx: RouteCtx): Promise<void> {
  const stats = await ctx.api.stats();
  clear(ctx.view);

  const jobCounts = Object.entries(stats.jobs)
    .map(([status, count]) => `${status}: ${count}`)
    .join(", ");

  const providerRows = stats.providers.map((p) =>
    el(
      "tr",
      { "data-provider-id": p.id },
      el("td", {}, p.id),
      el("td", {}, p.name),
      el("td", {}, p.country),
      el("td", {}, statusChip(p.status)),
      el("td", {}, p.score.toFixed(4)),
      el("td", {}, `${p.allocated.gpus}/${p.capacity.gpus} GPUs`),
      el("td", {}, fmtCapacity(p.free)),
      el("td", {}, fmtTime(p.last_heartbeat)),
    ),
  );

  const endpointRows = stats.endpoints.map((ep) =>
    el(
      "tr",
      { "data-endpoint-id": ep.id },
      el("td", {}, ep.id),
      el("td", {}, ep.record_id),
      el("td", {}, String(ep.replicas)),
      el("td", {}, String(ep.metrics.invocations)),
      el("td", {}, String(ep.metrics.errors)),
      el("td", {}, `${ep.metrics.replica_ms} ms`),
    ),
  );

  ctx.view.append(
    el("h2", {}, "Platform stats"),
    el(
      "div",
      { class: "counters" },
      counter("models", stats.models),
      counter("events", stats.events),
      counter("free GPUs", stats.totals.free.gpus),
      counter("allocated GPUs", stats.totals.allocated.gpus),
    ),
    el("p", { id: "job-counts" }, jobCounts || "no jobs yet"),
    el("h3", {}, "Providers"),
    el(
      "table",
      { class: "grid", id: "providers-table" },
      el(
        "thead",
        {},
        el("tr", {}, ...["id", "name", "country", "status", "score", "gpus", "free", "heartbeat"].map((h) => el("th", {}, h))),
      ),
      el("tbody", {}, ...providerRows),
    ),
    el("h3", {}, "Endpoints"),
    el(
      "table",
      { class: "grid", id: "endpoints-table" },
      el(
        "thead",
        {},
        el("tr", {}, ...["id", "record", "replicas", "invocations", "errors", "replica-ms"].map((h) => el("th", {}, h))),
      ),
      el("tbody", {}, ...endpointRows),
    ),
    el("h3", {}, "Invocation latency"),
    histogram(stats),
  );
}
