/**
 * Deterministic force-directed layout for provenance graphs. Nodes start
 * on a circle in sorted-id order and relax under pairwise repulsion plus
 * spring attraction along edges for a fixed number of iterations, so the
 * same document always lays out the same way; no randomness anywhere.
 */

import type { ProvDoc } from "./types.js";

export interface PlacedNode {
  id: string;
  type: string;
  kind: string;
  label: string;
  attrs: Record<string, unknown>;
  x: number;
  y: number;
}

export interface PlacedEdge {
  from: PlacedNode;
  to: PlacedNode;
  relation: string;
}

export interface Layout {
  nodes: PlacedNode[];
  edges: PlacedEdge[];
  width: number;
  height: number;
}

/** Node family from the id scheme (model:, dataset:, build:, ...). */
export function nodeKind(id: string): string {
  const colon = id.indexOf(":");
  return colon > 0 ? id.slice(0, colon) : "other";
}

export const KIND_COLORS: Record<string, string> = {
  model: "#4c72b0",
  dataset: "#55a868",
  build: "#c44e52",
  training: "#8172b2",
  author: "#ccb974",
  user: "#64b5cd",
  other: "#8c8c8c",
};

export function kindColor(kind: string): string {
  return KIND_COLORS[kind] ?? KIND_COLORS.other;
}

export function layoutGraph(doc: ProvDoc, width = 800, height = 520, iterations = 200): Layout {
  const ids = Object.keys(doc.nodes).sort();
  const n = ids.length;
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 2 - 70;

  const xs = new Float64Array(n);
  const ys = new Float64Array(n);
  const index = new Map<string, number>();
  ids.forEach((id, i) => {
    index.set(id, i);
    const angle = (2 * Math.PI * i) / Math.max(n, 1);
    xs[i] = cx + radius * Math.cos(angle);
    ys[i] = cy + radius * Math.sin(angle);
  });

  const links: [number, number][] = [];
  for (const edge of doc.edges) {
    const a = index.get(edge.subject);
    const b = index.get(edge.object);
    if (a !== undefined && b !== undefined && a !== b) links.push([a, b]);
  }

  // classic spring-embedder constants: k is the ideal pairwise distance
  const k = Math.sqrt((width * height) / Math.max(n, 1)) * 0.8;
  let temperature = Math.min(width, height) / 8;
  const cool = 0.95;

  for (let iter = 0; iter < iterations; iter++) {
    const dx = new Float64Array(n);
    const dy = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let vx = xs[i] - xs[j];
        let vy = ys[i] - ys[j];
        let dist = Math.hypot(vx, vy);
        if (dist < 0.01) {
          // deterministic nudge for coincident nodes
          vx = 0.01 * (i - j);
          vy = 0.01;
          dist = Math.hypot(vx, vy);
        }
        const force = (k * k) / dist;
        dx[i] += (vx / dist) * force;
        dy[i] += (vy / dist) * force;
        dx[j] -= (vx / dist) * force;
        dy[j] -= (vy / dist) * force;
      }
    }
    for (const [a, b] of links) {
      const vx = xs[a] - xs[b];
      const vy = ys[a] - ys[b];
      const dist = Math.max(Math.hypot(vx, vy), 0.01);
      const force = (dist * dist) / k;
      dx[a] -= (vx / dist) * force;
      dy[a] -= (vy / dist) * force;
      dx[b] += (vx / dist) * force;
      dy[b] += (vy / dist) * force;
    }
    for (let i = 0; i < n; i++) {
      const step = Math.hypot(dx[i], dy[i]);
      if (step > 0) {
        const capped = Math.min(step, temperature);
        xs[i] += (dx[i] / step) * capped;
        ys[i] += (dy[i] / step) * capped;
      }
      xs[i] = Math.min(width - 40, Math.max(40, xs[i]));
      ys[i] = Math.min(height - 40, Math.max(40, ys[i]));
    }
    temperature *= cool;
  }

  const nodes: PlacedNode[] = ids.map((id, i) => {
    const node = doc.nodes[id];
    const colon = id.indexOf(":");
    return {
      id,
      type: node.type,
      kind: nodeKind(id),
      label: colon > 0 ? id.slice(colon + 1) : id,
      attrs: node.attrs,
      x: Math.round(xs[i] * 100) / 100,
      y: Math.round(ys[i] * 100) / 100,
    };
  });
  const byId = new Map(nodes.map((node) => [node.id, node]));
  const edges: PlacedEdge[] = doc.edges
    .filter((e) => byId.has(e.subject) && byId.has(e.object))
    .map((e) => ({ from: byId.get(e.subject)!, to: byId.get(e.object)!, relation: e.relation }));
  return { nodes, edges, width, height };
}
