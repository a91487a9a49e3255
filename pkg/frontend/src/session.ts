/**
 * Session state: the signed token, the claims decoded from it, and the
 * capability checks every view and the router consult before acting.
 *
 * The token is opaque to us except for its first segment, which is the
 * base64url of the claims JSON. Decoding it is a display/UX aid only;
 * verification happens server-side on every request.
 */

export interface Claims {
  user: string;
  vo: string;
  role: string;
  exp: number;
}

export interface Session {
  apiUrl: string;
  token: string;
  claims: Claims;
}

const STORAGE_KEY = "fedplane.session";

function b64urlDecode(text: string): string {
  const padded = text.replace(/-/g, "+").replace(/_/g, "/") + "=".repeat((4 - (text.length % 4)) % 4);
  const raw = atob(padded);
  const bytes = Uint8Array.from(raw, (c) => c.charCodeAt(0));
  return new TextDecoder().decode(bytes);
}

/** Decode the claims segment of a token; null when it is not even shaped like one. */
export function parseClaims(token: string): Claims | null {
  const encoded = token.split(".", 1)[0];
  if (!encoded) return null;
  let claims: unknown;
  try {
    claims = JSON.parse(b64urlDecode(encoded));
  } catch {
    return null;
  }
  if (typeof claims !== "object" || claims === null) return null;
  const doc = claims as Record<string, unknown>;
  if (
    typeof doc.user !== "string" ||
    typeof doc.vo !== "string" ||
    typeof doc.role !== "string" ||
    typeof doc.exp !== "number"
  ) {
    return null;
  }
  return { user: doc.user, vo: doc.vo, role: doc.role, exp: doc.exp };
}

/**
 * Everything the UI may try on behalf of a session. The demo tier is a
 * strict allowlist mirroring the server's: catalog browsing, tryme
 * deployments plus watching their own, and endpoint invocation.
 */
export type Action =
  | "catalog.read"
  | "catalog.write"
  | "deploy.standard"
  | "deploy.batch"
  | "deploy.tryme"
  | "deployments.read"
  | "deployments.control"
  | "invoke"
  | "pipeline"
  | "provenance"
  | "secrets"
  | "stats"
  | "events"
  | "providers";

const DEMO_ALLOWED: ReadonlySet<Action> = new Set<Action>([
  "catalog.read",
  "deploy.tryme",
  "deployments.read",
  "deployments.control",
  "invoke",
]);

export function can(claims: Claims, action: Action): boolean {
  if (claims.role === "full") return true;
  return DEMO_ALLOWED.has(action);
}

export function loadSession(storage: Storage = localStorage): Session | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    const doc = JSON.parse(raw) as { apiUrl?: unknown; token?: unknown };
    if (typeof doc.apiUrl !== "string" || typeof doc.token !== "string") return null;
    const claims = parseClaims(doc.token);
    if (!claims) return null;
    return { apiUrl: doc.apiUrl, token: doc.token, claims };
  } catch {
    return null;
  }
}

export function saveSession(session: Session, storage: Storage = localStorage): void {
  storage.setItem(STORAGE_KEY, JSON.stringify({ apiUrl: session.apiUrl, token: session.token }));
}

export function clearSession(storage: Storage = localStorage): void {
  storage.removeItem(STORAGE_KEY);
}
