/**
 * Small DOM helpers: a hyperscript-style element builder, the page
 * shell, non-blocking banners, and display formatters. No framework;
 * views build real DOM nodes and replace the view container's children.
 */

import type { Capacity } from "./types.js";

type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, unknown> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value === null || value === undefined || value === false) continue;
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2), value as EventListener);
    } else if (key === "value" && "value" in node) {
      (node as HTMLInputElement).value = String(value);
    } else if (value === true) {
      node.setAttribute(key, "");
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

/** SVG twin of el(); elements need the SVG namespace to render. */
export function svgEl(tag: string, attrs: Record<string, unknown> = {}, ...children: Child[]): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value === null || value === undefined || value === false) continue;
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2), value as EventListener);
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

export function clear(node: Element): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export interface Shell {
  nav: HTMLElement;
  banners: HTMLElement;
  view: HTMLElement;
}

/** Build the fixed page frame: nav bar, banner region, view container. */
export function mountShell(root: Element): Shell {
  clear(root);
  const nav = el("nav", { id: "nav" });
  const banners = el("div", { id: "banners" });
  const view = el("main", { id: "view" });
  root.append(nav, banners, view);
  return { nav, banners, view };
}

/** Non-blocking notice; API errors land here with the server diagnostic. */
export function showBanner(message: string, kind: "error" | "info" = "error"): void {
  const region = document.getElementById("banners");
  if (!region) return;
  const banner = el(
    "div",
    { class: `banner banner-${kind}`, role: "alert" },
    el("span", {}, message),
    el("button", { class: "banner-dismiss", onclick: (e: Event) => (e.target as HTMLElement).parentElement?.remove() }, "x"),
  );
  region.append(banner);
  setTimeout(() => banner.remove(), 8000);
}

export function fmtTime(ms: number | null | undefined): string {
  if (!ms) return "-";
  return new Date(ms).toISOString().replace("T", " ").slice(0, 19);
}

export function fmtCapacity(c: Capacity): string {
  return `${c.gpus} GPU / ${c.cpu_ghz} GHz / ${c.disk_gb} GB`;
}

export function statusChip(status: string): HTMLElement {
  return el("span", { class: `chip chip-${status}` }, status);
}
