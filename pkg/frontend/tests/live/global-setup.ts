/**
 * Boots one real control-plane server for the whole test run and leaves
 * its coordinates in .tmp/live-server.json for the live suite. The
 * server is the Python package from this repository, started exactly as
 * an operator would start it.
 */

import { type ChildProcess, spawn } from "node:child_process";
import crypto from "node:crypto";
import { mkdirSync, mkdtempSync, rmSync, writeFileSync } from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";

export const API_KEY = "dashboard-live-key";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address && typeof address === "object") {
        const port = address.port;
        srv.close(() => resolve(port));
      } else {
        srv.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

async function waitHealthy(url: string, child: ChildProcess, stderr: () => string): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`control-plane server exited with ${child.exitCode}:\n${stderr()}`);
    }
    try {
      const res = await fetch(`${url}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`control-plane server never became healthy:\n${stderr()}`);
}

export default async function setup(): Promise<() => void> {
  const port = await freePort();
  const url = `http://127.0.0.1:${port}`;
  const stateDir = mkdtempSync(path.join(os.tmpdir(), "fedplane-dashboard-"));

  const child = spawn("python3", ["-m", "fedplane.cli", "serve", "--tick-ms", "200"], {
    env: {
      ...process.env,
      LISTEN_ADDR: `127.0.0.1:${port}`,
      STATE_DIR: stateDir,
      MASTER_KEY: crypto.randomBytes(32).toString("hex"),
      API_HMAC_KEY: API_KEY,
    },
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  child.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });

  await waitHealthy(url, child, () => stderr);

  mkdirSync(path.join(process.cwd(), ".tmp"), { recursive: true });
  writeFileSync(path.join(process.cwd(), ".tmp", "live-server.json"), JSON.stringify({ url, apiKey: API_KEY }));

  return () => {
    child.kill("SIGTERM");
    rmSync(stateDir, { recursive: true, force: true });
  };
}
