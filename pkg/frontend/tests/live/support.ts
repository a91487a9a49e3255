/**
 * Live-suite support: coordinates of the spawned server, a token mint
 * that matches the server's HMAC scheme (test-only; real operators mint
 * via the CLI), and a fetch built on node:http so DOM tests in the
 * happy-dom environment still do real network I/O, including streaming.
 */

import crypto from "node:crypto";
import { readFileSync } from "node:fs";
import http from "node:http";
import path from "node:path";
import type { FetchInit, MinimalResponse } from "../../src/api.js";

export function liveServer(): { url: string; apiKey: string } {
  const file = path.join(process.cwd(), ".tmp", "live-server.json");
  return JSON.parse(readFileSync(file, "utf-8")) as { url: string; apiKey: string };
}

/** Mirror of the server's token format: b64url(claims).b64url(hmac). */
export function mintToken(apiKey: string, user: string, vo: string, role: string, expMs?: number): string {
  const claims = { exp: expMs ?? Date.now() + 3_600_000, role, user, vo }; // keys already sorted
  const encoded = Buffer.from(JSON.stringify(claims), "utf-8").toString("base64url");
  const signature = crypto.createHmac("sha256", apiKey).update(encoded, "ascii").digest("base64url");
  return `${encoded}.${signature}`;
}

export function nodeFetch(url: string, init: FetchInit = {}): Promise<MinimalResponse> {
  return new Promise((resolve, reject) => {
    const req = http.request(
      url,
      { method: init.method ?? "GET", headers: init.headers ?? {} },
      (res) => {
        const collect = (): Promise<string> =>
          new Promise((res2, rej2) => {
            const chunks: Buffer[] = [];
            res.on("data", (c: Buffer) => chunks.push(c));
            res.on("end", () => res2(Buffer.concat(chunks).toString("utf-8")));
            res.on("error", rej2);
          });
        let collected: Promise<string> | null = null;
        const text = () => (collected ??= collect());
        resolve({
          ok: (res.statusCode ?? 0) >= 200 && (res.statusCode ?? 0) < 300,
          status: res.statusCode ?? 0,
          headers: {
            get: (name: string) => {
              const value = res.headers[name.toLowerCase()];
              return Array.isArray(value) ? (value[0] ?? null) : (value ?? null);
            },
          },
          json: async () => JSON.parse(await text()),
          text,
          body: res, // IncomingMessage async-iterates Buffer chunks
        });
      },
    );
    req.on("error", reject);
    if (init.signal) {
      init.signal.addEventListener("abort", () => req.destroy(new Error("aborted")));
    }
    if (init.body) req.write(init.body);
    req.end();
  });
}
