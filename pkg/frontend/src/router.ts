/**
 * Hash router with capability guards. Every route names the action it
 * needs; dispatch refuses to render (and therefore to fetch) anything
 * the session's role does not allow, which is what keeps the UI from
 * ever issuing a request the server would 403.
 */

import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import { showBanner } from "./dom.js";
import type { Action, Session } from "./session.js";
import { can } from "./session.js";

export type Cleanup = () => void;

export interface RouteCtx {
  params: Record<string, string>;
  session: Session;
  api: ApiClient;
  view: HTMLElement;
}

export interface Route {
  pattern: string; // "#/catalog/:id"
  action: Action | null;
  render(ctx: RouteCtx): void | Cleanup | Promise<void | Cleanup>;
}

export function matchPattern(pattern: string, hash: string): Record<string, string> | null {
  const want = pattern.replace(/^#/, "").split("/").filter(Boolean);
  const got = hash.replace(/^#/, "").split("/").filter(Boolean);
  if (want.length !== got.length) return null;
  const params: Record<string, string> = {};
  for (let i = 0; i < want.length; i++) {
    if (want[i].startsWith(":")) {
      params[want[i].slice(1)] = decodeURIComponent(got[i]);
    } else if (want[i] !== got[i]) {
      return null;
    }
  }
  return params;
}

export class Router {
  private cleanup: Cleanup | null = null;

  constructor(
    private routes: Route[],
    private deps: { session: Session; api: ApiClient; view: HTMLElement },
    private defaultHash = "#/catalog",
  ) {}

  resolve(hash: string): { route: Route; params: Record<string, string> } | null {
    for (const route of this.routes) {
      const params = matchPattern(route.pattern, hash || this.defaultHash);
      if (params) return { route, params };
    }
    return null;
  }

  /** True when the session may visit the hash at all. */
  allowed(hash: string): boolean {
    const hit = this.resolve(hash);
    if (!hit) return false;
    return hit.route.action === null || can(this.deps.session.claims, hit.route.action);
  }

  async dispatch(hash: string): Promise<void> {
    if (this.cleanup) {
      this.cleanup();
      this.cleanup = null;
    }
    const hit = this.resolve(hash);
    if (!hit) {
      await this.dispatch(this.defaultHash);
      return;
    }
    const { route, params } = hit;
    if (route.action !== null && !can(this.deps.session.claims, route.action)) {
      showBanner(`your role does not allow ${route.action}`, "error");
      if (hash !== this.defaultHash) await this.dispatch(this.defaultHash);
      return;
    }
    try {
      const result = await route.render({
        params,
        session: this.deps.session,
        api: this.deps.api,
        view: this.deps.view,
      });
      if (typeof result === "function") this.cleanup = result;
    } catch (err) {
      if (err instanceof ApiError) {
        showBanner(`${err.code}: ${err.message}`);
      } else {
        showBanner(String(err));
      }
    }
  }

  start(win: Window = window): void {
    win.addEventListener("hashchange", () => {
      void this.dispatch(win.location.hash);
    });
    void this.dispatch(win.location.hash);
  }

  stop(): void {
    if (this.cleanup) {
      this.cleanup();
      this.cleanup = null;
    }
  }
}
