/**
 * Interactive provenance graph. The API's node/edge document is laid out
 * with a deterministic force embedding and drawn as SVG: circles colored
 * by node family, arrows labeled with the PROV relation, click a node to
 * inspect its attributes. A caption states the node and edge counts.
 */

import { clear, el, svgEl } from "../dom.js";
import { kindColor, layoutGraph, type PlacedNode } from "../graph.js";
import type { RouteCtx } from "../router.js";

function drawGraph(view: HTMLElement, recordId: string, layout: ReturnType<typeof layoutGraph>): void {
  const svg = svgEl("svg", {
    id: "prov-graph",
    viewBox: `0 0 ${layout.width} ${layout.height}`,
    width: "100%",
  });

  const marker = svgEl(
    "defs",
    {},
    svgEl(
      "marker",
      { id: "arrow", viewBox: "0 0 10 10", refX: "22", refY: "5", markerWidth: "7", markerHeight: "7", orient: "auto-start-reverse" },
      svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "#666" }),
    ),
  );
  svg.append(marker);

  for (const edge of layout.edges) {
    svg.append(
      svgEl("line", {
        "data-edge": `${edge.from.id}|${edge.relation}|${edge.to.id}`,
        x1: edge.from.x,
        y1: edge.from.y,
        x2: edge.to.x,
        y2: edge.to.y,
        stroke: "#666",
        "stroke-width": "1.2",
        "marker-end": "url(#arrow)",
      }),
    );
    svg.append(
      svgEl(
        "text",
        {
          class: "edge-label",
          x: (edge.from.x + edge.to.x) / 2,
          y: (edge.from.y + edge.to.y) / 2 - 4,
          "text-anchor": "middle",
        },
        edge.relation,
      ),
    );
  }

  const inspector = el("pre", { id: "node-inspector", class: "export-preview" }, "click a node to inspect it");
  const select = (node: PlacedNode) => {
    inspector.textContent = JSON.stringify({ id: node.id, type: node.type, attrs: node.attrs }, null, 2);
  };

  for (const node of layout.nodes) {
    const group = svgEl("g", {
      class: "prov-node",
      "data-node-id": node.id,
      "data-node-kind": node.kind,
      onclick: () => select(node),
    });
    group.append(
      svgEl("circle", { cx: node.x, cy: node.y, r: 16, fill: kindColor(node.kind), stroke: "#333" }),
      svgEl("text", { class: "node-label", x: node.x, y: node.y + 30, "text-anchor": "middle" }, node.label),
    );
    svg.append(group);
  }

  const legend = el("div", { class: "legend" });
  for (const kind of [...new Set(layout.nodes.map((n) => n.kind))].sort()) {
    legend.append(
      el("span", { class: "legend-item" }, el("span", { class: "swatch", style: `background:${kindColor(kind)}` }), kind),
    );
  }

  view.append(
    el(
      "div",
      { class: "prov-view", "data-record-id": recordId },
      el(
        "p",
        { id: "graph-caption" },
        `${layout.nodes.length} nodes, ${layout.edges.length} edges`,
      ),
      svg,
      legend,
      inspector,
    ),
  );
}

export async function renderProvenance(ctx: RouteCtx): Promise<void> {
  const { records } = await ctx.api.catalog();
  const recordId = ctx.params.id ?? records[0]?.id;
  clear(ctx.view);

  const picker = el(
    "select",
    {
      id: "prov-picker",
      onchange: (e: Event) => {
        location.hash = `#/provenance/${(e.target as HTMLSelectElement).value}`;
      },
    },
    ...records.map((r) =>
      el("option", { value: r.id, ...(r.id === recordId ? { selected: true } : {}) }, `${r.id} ${r.metadata.title}`),
    ),
  );
  ctx.view.append(el("div", { class: "view-header" }, el("h2", {}, "Provenance"), picker));

  if (!recordId) {
    ctx.view.append(el("p", {}, "no records in this catalog yet"));
    return;
  }
  const doc = await ctx.api.provenance(recordId);
  drawGraph(ctx.view, recordId, layoutGraph(doc));
}
