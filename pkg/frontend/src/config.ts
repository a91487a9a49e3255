/**
 * API base URL resolution. Deployments inject `window.FEDPLANE_API_URL`
 * through the config.js shipped next to the bundle; an empty string means
 * same-origin. The login form can override either per browser.
 */

export function apiBase(): string {
  const injected = (globalThis as { FEDPLANE_API_URL?: unknown }).FEDPLANE_API_URL;
  if (typeof injected === "string") {
    return injected.replace(/\/+$/, "");
  }
  return "";
}
