/**
 * Deployment form. The kind selector is tier-aware: demo sessions see
 * only the time-boxed tryme option, so the form cannot even express a
 * request the server would refuse.
 */

import { clear, el, showBanner } from "../dom.js";
import { can } from "../session.js";
import type { RouteCtx } from "../router.js";

export async function renderDeploy(ctx: RouteCtx): Promise<void> {
  const { records } = await ctx.api.catalog();
  clear(ctx.view);

  const kinds: string[] = [];
  if (can(ctx.session.claims, "deploy.standard")) kinds.push("standard");
  if (can(ctx.session.claims, "deploy.batch")) kinds.push("batch");
  if (can(ctx.session.claims, "deploy.tryme")) kinds.push("tryme");

  const kind = el("select", { name: "kind" }, ...kinds.map((k) => el("option", { value: k }, k)));
  const gpus = el("input", { name: "gpus", type: "number", value: "1", min: "0" });
  const cpu = el("input", { name: "cpu_ghz", type: "number", value: "0", min: "0" });
  const disk = el("input", { name: "disk_gb", type: "number", value: "0", min: "0" });
  const recordSelect = el(
    "select",
    { name: "record_id" },
    el("option", { value: "" }, "(none)"),
    ...records.map((r) => el("option", { value: r.id }, `${r.id} ${r.metadata.title}`)),
  );
  const datasets = el("input", { name: "datasets", placeholder: "dataset ids, comma separated" });

  const form = el(
    "form",
    {
      class: "stack",
      onsubmit: async (e: Event) => {
        e.preventDefault();
        try {
          const job = await ctx.api.deploy({
            kind: kind.value,
            resources: { gpus: Number(gpus.value), cpu_ghz: Number(cpu.value), disk_gb: Number(disk.value) },
            record_id: recordSelect.value || null,
            datasets: datasets.value
              .split(",")
              .map((s) => s.trim())
              .filter(Boolean),
          });
          showBanner(`submitted ${job.id} (${job.status})`, "info");
          location.hash = "#/deployments";
        } catch (err) {
          showBanner(String(err));
        }
      },
    },
    el("h2", {}, "New deployment"),
    el("label", {}, "Kind", kind),
    el("label", {}, "GPUs", gpus),
    el("label", {}, "CPU GHz", cpu),
    el("label", {}, "Disk GB", disk),
    el("label", {}, "Model record", recordSelect),
    el("label", {}, "Datasets", datasets),
    el("button", { class: "primary", type: "submit" }, "Deploy"),
  );
  ctx.view.append(form);
}
