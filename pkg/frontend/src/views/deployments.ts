/**
 * Live deployments table. Full-role sessions follow the platform event
 * feed: transition events apply to rows in place and anything the store
 * cannot apply locally triggers a debounced refetch of the
 * authoritative list. Demo sessions cannot read /events, so they poll.
 * Either way the table converges to GET /deployments.
 */

import { clear, el, fmtCapacity, fmtTime, showBanner, statusChip } from "../dom.js";
import { EventStream } from "../events.js";
import { can } from "../session.js";
import { DeploymentStore } from "../store.js";
import type { Job } from "../types.js";
import type { Cleanup, RouteCtx } from "../router.js";

const ACTIVE = new Set(["queued", "scheduled", "running"]);

function jobRow(job: Job, ctx: RouteCtx, refresh: () => void): HTMLElement {
  const mine = job.owner === ctx.session.claims.user;
  const actions = el("td", { class: "row-actions" });
  if (mine && can(ctx.session.claims, "deployments.control") && ACTIVE.has(job.status)) {
    actions.append(
      el(
        "button",
        {
          "data-action": "stop",
          onclick: async () => {
            try {
              await ctx.api.stopDeployment(job.id);
              refresh();
            } catch (err) {
              showBanner(String(err));
            }
          },
        },
        "stop",
      ),
    );
    if (job.kind === "batch" && job.status === "running") {
      actions.append(
        el(
          "button",
          {
            "data-action": "complete",
            onclick: async () => {
              try {
                await ctx.api.completeDeployment(job.id);
                refresh();
              } catch (err) {
                showBanner(String(err));
              }
            },
          },
          "complete",
        ),
      );
    }
  }
  return el(
    "tr",
    { "data-job-id": job.id, "data-status": job.status },
    el("td", {}, job.id),
    el("td", {}, job.kind),
    el("td", {}, job.owner),
    el("td", {}, statusChip(job.status), job.notified ? el("span", { class: "chip chip-notice" }, "expiring") : null),
    el("td", {}, job.provider ?? "-"),
    el("td", {}, fmtCapacity(job.resources)),
    el("td", {}, fmtTime(job.created_at)),
    el("td", { class: "muted" }, job.reason || "-"),
    actions,
  );
}

export async function renderDeployments(ctx: RouteCtx): Promise<Cleanup> {
  const store = new DeploymentStore();
  const tbody = el("tbody", {});
  let disposed = false;

  const paint = () => {
    clear(tbody);
    for (const job of store.list()) {
      tbody.append(jobRow(job, ctx, () => void reconcile()));
    }
  };

  const reconcile = async () => {
    try {
      const { deployments } = await ctx.api.deployments();
      if (disposed) return;
      store.reset(deployments);
      paint();
    } catch (err) {
      if (!disposed) showBanner(String(err));
    }
  };

  await reconcile();
  clear(ctx.view);
  ctx.view.append(
    el("div", { class: "view-header" }, el("h2", {}, "Deployments")),
    el(
      "table",
      { class: "grid", id: "deployments-table" },
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          ...["id", "kind", "owner", "status", "provider", "resources", "created", "reason", ""].map((h) =>
            el("th", {}, h),
          ),
        ),
      ),
      tbody,
    ),
  );

  // live feed for full sessions, polling for demo
  let stream: EventStream | null = null;
  let pollTimer: ReturnType<typeof setInterval> | null = null;
  let reconcileTimer: ReturnType<typeof setTimeout> | null = null;

  if (can(ctx.session.claims, "events")) {
    stream = new EventStream(
      ctx.api.base,
      ctx.api.token,
      (event) => {
        const change = store.applyEvent(event);
        if (change === "updated") paint();
        if (change === "reconcile" && reconcileTimer === null) {
          reconcileTimer = setTimeout(() => {
            reconcileTimer = null;
            void reconcile();
          }, 150);
        }
      },
      { windowMs: 5000, fetchFn: ctx.api.fetchFn },
    );
    stream.start();
  } else {
    pollTimer = setInterval(() => void reconcile(), 3000);
  }

  return () => {
    disposed = true;
    stream?.stop();
    if (pollTimer !== null) clearInterval(pollTimer);
    if (reconcileTimer !== null) clearTimeout(reconcileTimer);
  };
}
