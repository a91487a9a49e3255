/**
 * Sign-in form: the API base URL plus a pasted access token. The claims
 * segment is decoded locally for display and guards; the server remains
 * the authority on every request.
 */

import { apiBase } from "../config.js";
import { clear, el, showBanner } from "../dom.js";
import { parseClaims, saveSession, type Session } from "../session.js";

export function renderLogin(view: HTMLElement, onSignedIn: (session: Session) => void): void {
  clear(view);
  const url = el("input", { name: "api-url", value: apiBase(), placeholder: "http://127.0.0.1:8080" });
  const token = el("input", { name: "token", placeholder: "paste an access token" });

  const form = el(
    "form",
    {
      class: "stack login",
      onsubmit: (e: Event) => {
        e.preventDefault();
        const claims = parseClaims(token.value.trim());
        if (!claims) {
          showBanner("that does not look like an access token");
          return;
        }
        const session: Session = {
          apiUrl: url.value.trim().replace(/\/+$/, ""),
          token: token.value.trim(),
          claims,
        };
        saveSession(session);
        onSignedIn(session);
      },
    },
    el("h2", {}, "Sign in"),
    el("label", {}, "API URL", url),
    el("label", {}, "Token", token),
    el("button", { class: "primary", type: "submit" }, "Sign in"),
  );
  view.append(form);
}
