/**
 * Catalog views: a filterable card grid of the VO's model records, and a
 * record detail page with metadata, the interop export preview, and
 * owner actions (pipeline run, delete) for full-role sessions.
 */

import { clear, el, fmtTime, showBanner } from "../dom.js";
import { can } from "../session.js";
import type { ModelRecord } from "../types.js";
import type { RouteCtx } from "../router.js";

function tagChips(record: ModelRecord): HTMLElement {
  const box = el("div", { class: "tags" });
  for (const [group, values] of Object.entries(record.metadata.tags ?? {})) {
    for (const value of values) {
      box.append(el("span", { class: "tag" }, `${group}:${value}`));
    }
  }
  return box;
}

function recordCard(record: ModelRecord): HTMLElement {
  return el(
    "div",
    {
      class: "card record",
      "data-record-id": record.id,
      onclick: () => {
        location.hash = `#/catalog/${record.id}`;
      },
    },
    el("h3", {}, record.metadata.title),
    el("p", { class: "summary" }, record.metadata.summary),
    el(
      "div",
      { class: "card-meta" },
      el("span", { class: "chip chip-license" }, record.metadata.license),
      el("span", { class: "muted" }, `v${record.version}`),
      record.release ? el("span", { class: "chip chip-released" }, "released") : null,
    ),
    tagChips(record),
  );
}

export async function renderCatalog(ctx: RouteCtx): Promise<void> {
  const { records } = await ctx.api.catalog();
  clear(ctx.view);

  const grid = el("div", { class: "cards" });
  const paint = (filter: string) => {
    clear(grid);
    const needle = filter.toLowerCase();
    for (const record of records) {
      const tags = Object.entries(record.metadata.tags ?? {})
        .flatMap(([g, vs]) => vs.map((v) => `${g}:${v}`))
        .join(" ");
      const haystack = `${record.metadata.title} ${record.metadata.summary} ${tags}`.toLowerCase();
      if (!needle || haystack.includes(needle)) grid.append(recordCard(record));
    }
  };

  const filterInput = el("input", {
    class: "filter",
    placeholder: "filter by title, summary, or tag",
    oninput: (e: Event) => paint((e.target as HTMLInputElement).value),
  });

  const header = el("div", { class: "view-header" }, el("h2", {}, `Catalog (${records.length})`), filterInput);
  if (can(ctx.session.claims, "catalog.write")) {
    header.append(
      el(
        "button",
        {
          class: "primary",
          "data-action": "new-record",
          onclick: () => {
            location.hash = "#/catalog-new";
          },
        },
        "New record",
      ),
    );
  }
  ctx.view.append(header, grid);
  paint("");
}

export async function renderRecordDetail(ctx: RouteCtx): Promise<void> {
  const record = await ctx.api.record(ctx.params.id);
  const exported = await ctx.api.exportRecord(ctx.params.id);
  clear(ctx.view);

  const meta = record.metadata;
  const links = el("ul", { class: "links" });
  for (const [name, target] of Object.entries(meta.links)) {
    links.append(el("li", {}, `${name}: `, el("a", { href: target, target: "_blank" }, target)));
  }

  const facts = el(
    "table",
    { class: "facts" },
    el(
      "tbody",
      {},
      el("tr", {}, el("th", {}, "id"), el("td", {}, record.id)),
      el("tr", {}, el("th", {}, "owner"), el("td", {}, record.owner)),
      el("tr", {}, el("th", {}, "license"), el("td", {}, meta.license)),
      el("tr", {}, el("th", {}, "version"), el("td", {}, String(record.version))),
      el("tr", {}, el("th", {}, "authors"), el("td", {}, (meta.authors ?? []).map((a) => a.name).join(", ") || "-")),
      el("tr", {}, el("th", {}, "modified"), el("td", {}, fmtTime(record.modified_at))),
      el(
        "tr",
        {},
        el("th", {}, "release"),
        el("td", {}, record.release ? `${record.release.pseudo_doi} (${record.release.digest.slice(0, 12)})` : "none"),
      ),
    ),
  );

  const actions = el("div", { class: "actions" });
  if (can(ctx.session.claims, "pipeline")) {
    actions.append(
      el(
        "button",
        {
          "data-action": "run-pipeline",
          onclick: async () => {
            try {
              const run = await ctx.api.runPipeline(record.id, "HEAD");
              showBanner(`pipeline ${run.id}: ${run.status}`, run.status === "passed" ? "info" : "error");
            } catch (err) {
              showBanner(String(err));
            }
          },
        },
        "Run pipeline",
      ),
    );
    actions.append(
      el(
        "button",
        {
          "data-action": "view-provenance",
          onclick: () => {
            location.hash = `#/provenance/${record.id}`;
          },
        },
        "Provenance",
      ),
    );
  }
  if (can(ctx.session.claims, "catalog.write")) {
    actions.append(
      el(
        "button",
        {
          class: "danger",
          "data-action": "delete-record",
          onclick: async () => {
            try {
              await ctx.api.deleteRecord(record.id);
              location.hash = "#/catalog";
            } catch (err) {
              showBanner(String(err));
            }
          },
        },
        "Delete",
      ),
    );
  }

  ctx.view.append(
    el(
      "div",
      { class: "record-detail", "data-record-id": record.id },
      el("h2", {}, meta.title),
      el("p", { class: "summary" }, meta.summary),
      facts,
      links,
      tagChips(record),
      actions,
      el("h3", {}, "Interop export"),
      el("pre", { class: "export-preview" }, JSON.stringify(exported, null, 2)),
    ),
  );
}

const LICENSES = [
  "Apache-2.0",
  "MIT",
  "BSD-3-Clause",
  "GPL-3.0-only",
  "GPL-3.0-or-later",
  "LGPL-3.0-only",
  "MPL-2.0",
  "AGPL-3.0-only",
  "EUPL-1.2",
  "CC-BY-4.0",
  "CC-BY-SA-4.0",
  "CC0-1.0",
];

export function renderRecordForm(ctx: RouteCtx): void {
  clear(ctx.view);
  const title = el("input", { name: "title", placeholder: "title" });
  const summary = el("input", { name: "summary", placeholder: "one-line summary" });
  const license = el("select", { name: "license" }, ...LICENSES.map((l) => el("option", { value: l }, l)));
  const repo = el("input", { name: "source_repo", placeholder: "https://..." });
  const authors = el("input", { name: "authors", placeholder: "authors, comma separated" });

  const form = el(
    "form",
    {
      class: "stack",
      onsubmit: async (e: Event) => {
        e.preventDefault();
        const metadata: Record<string, unknown> = {
          title: title.value,
          summary: summary.value,
          license: license.value,
          links: { source_repo: repo.value },
        };
        const names = authors.value
          .split(",")
          .map((s) => s.trim())
          .filter(Boolean);
        if (names.length) metadata.authors = names.map((name) => ({ name }));
        try {
          const record = await ctx.api.createRecord(metadata);
          location.hash = `#/catalog/${record.id}`;
        } catch (err) {
          showBanner(String(err));
        }
      },
    },
    el("h2", {}, "New model record"),
    el("label", {}, "Title", title),
    el("label", {}, "Summary", summary),
    el("label", {}, "License", license),
    el("label", {}, "Source repository", repo),
    el("label", {}, "Authors", authors),
    el("button", { class: "primary", type: "submit" }, "Create"),
  );
  ctx.view.append(form);
}
