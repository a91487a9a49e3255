/**
 * Application boot: restore the session (or show the sign-in form),
 * build the nav for the session's role, and start the hash router.
 * Everything the page does goes through the public HTTP API with the
 * session's token; there is no privileged channel.
 */

import { ApiClient } from "./api.js";
import { clear, el, mountShell, type Shell } from "./dom.js";
import { Router, type Route } from "./router.js";
import { can, clearSession, loadSession, type Action, type Session } from "./session.js";
import { renderCatalog, renderRecordDetail, renderRecordForm } from "./views/catalog.js";
import { renderDeploy } from "./views/deploy.js";
import { renderDeployments } from "./views/deployments.js";
import { renderLogin } from "./views/login.js";
import { renderProvenance } from "./views/provenance.js";
import { renderSecrets } from "./views/secrets.js";
import { renderStats } from "./views/stats.js";

export function buildRoutes(): Route[] {
  return [
    { pattern: "#/catalog", action: "catalog.read", render: renderCatalog },
    { pattern: "#/catalog-new", action: "catalog.write", render: renderRecordForm },
    { pattern: "#/catalog/:id", action: "catalog.read", render: renderRecordDetail },
    { pattern: "#/deploy", action: "deploy.tryme", render: renderDeploy },
    { pattern: "#/deployments", action: "deployments.read", render: renderDeployments },
    { pattern: "#/provenance", action: "provenance", render: renderProvenance },
    { pattern: "#/provenance/:id", action: "provenance", render: renderProvenance },
    { pattern: "#/stats", action: "stats", render: renderStats },
    { pattern: "#/secrets", action: "secrets", render: renderSecrets },
  ];
}

const NAV_ITEMS: { label: string; hash: string; action: Action }[] = [
  { label: "Catalog", hash: "#/catalog", action: "catalog.read" },
  { label: "Deploy", hash: "#/deploy", action: "deploy.tryme" },
  { label: "Deployments", hash: "#/deployments", action: "deployments.read" },
  { label: "Provenance", hash: "#/provenance", action: "provenance" },
  { label: "Stats", hash: "#/stats", action: "stats" },
  { label: "Secrets", hash: "#/secrets", action: "secrets" },
];

export function renderNav(nav: HTMLElement, session: Session, onLogout: () => void): void {
  clear(nav);
  nav.append(el("span", { class: "brand" }, "fedplane"));
  for (const item of NAV_ITEMS) {
    if (!can(session.claims, item.action)) continue;
    nav.append(el("a", { href: item.hash, "data-nav": item.label.toLowerCase() }, item.label));
  }
  nav.append(
    el(
      "span",
      { class: "session-box" },
      el("span", { id: "whoami" }, `${session.claims.user} @ ${session.claims.vo} (${session.claims.role})`),
      el("button", { id: "logout", onclick: onLogout }, "sign out"),
    ),
  );
}

/** Wire a signed-in session onto the shell and return the started router. */
export function initApp(shell: Shell, session: Session, fetchFn?: ApiClient["fetchFn"]): Router {
  const api = fetchFn
    ? new ApiClient(session.apiUrl, session.token, fetchFn)
    : new ApiClient(session.apiUrl, session.token);
  renderNav(shell.nav, session, () => {
    clearSession();
    location.hash = "";
    location.reload();
  });
  const router = new Router(buildRoutes(), { session, api, view: shell.view });
  return router;
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const shell = mountShell(root);
  const session = loadSession();
  if (!session) {
    renderLogin(shell.view, () => location.reload());
    return;
  }
  const router = initApp(shell, session);
  router.start();
}

boot();
