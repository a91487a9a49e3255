/**
 * Scoped secrets: list the caller's paths with version metadata, create
 * or overwrite a value, reveal one on demand, delete. Values are never
 * fetched until the reveal button asks for exactly one.
 */

import { clear, el, fmtTime, showBanner } from "../dom.js";
import type { RouteCtx } from "../router.js";

export async function renderSecrets(ctx: RouteCtx): Promise<void> {
  const { secrets } = await ctx.api.secrets();
  clear(ctx.view);

  const rows = secrets.map((s) => {
    const reveal = el("code", { class: "secret-value" }, "");
    return el(
      "tr",
      { "data-secret-path": s.path },
      el("td", {}, s.path),
      el("td", {}, `v${s.version}`),
      el("td", {}, fmtTime(s.updated_at)),
      el(
        "td",
        { class: "row-actions" },
        el(
          "button",
          {
            "data-action": "reveal",
            onclick: async () => {
              try {
                const { value } = await ctx.api.getSecret(s.path);
                reveal.textContent = value;
              } catch (err) {
                showBanner(String(err));
              }
            },
          },
          "reveal",
        ),
        el(
          "button",
          {
            class: "danger",
            "data-action": "delete",
            onclick: async () => {
              try {
                await ctx.api.deleteSecret(s.path);
                await renderSecrets(ctx);
              } catch (err) {
                showBanner(String(err));
              }
            },
          },
          "delete",
        ),
        reveal,
      ),
    );
  });

  const path = el("input", { name: "path", placeholder: "deployments/job-0001/api-token" });
  const value = el("input", { name: "value", type: "password", placeholder: "value" });
  const form = el(
    "form",
    {
      class: "inline-form",
      onsubmit: async (e: Event) => {
        e.preventDefault();
        try {
          await ctx.api.putSecret(path.value, value.value);
          await renderSecrets(ctx);
        } catch (err) {
          showBanner(String(err));
        }
      },
    },
    path,
    value,
    el("button", { class: "primary", type: "submit" }, "Store"),
  );

  ctx.view.append(
    el("div", { class: "view-header" }, el("h2", {}, `Secrets (${secrets.length})`)),
    form,
    el(
      "table",
      { class: "grid", id: "secrets-table" },
      el("thead", {}, el("tr", {}, ...["path", "version", "updated", ""].map((h) => el("th", {}, h)))),
      el("tbody", {}, ...rows),
    ),
  );
}
