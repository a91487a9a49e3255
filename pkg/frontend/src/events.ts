/**
 * Client for the /events feed. The server speaks Server-Sent Events in
 * bounded windows: it replays the backlog past a cursor, follows live
 * traffic for a bit, then closes cleanly. This client reads each window
 * over fetch, keeps a monotone cursor, and reconnects with
 * ?since=<cursor>, so the feed is gapless and duplicate-free across
 * reconnects without any EventSource dependency.
 */

import type { FetchLike, MinimalResponse } from "./api.js";
import type { StreamEvent } from "./types.js";

export interface SseFrame {
  id?: string;
  event?: string;
  data?: string;
}

/**
 * Split complete frames off an SSE text buffer. Returns the frames and
 * the unterminated remainder to prepend to the next chunk.
 */
export function parseSseChunk(buffer: string): { frames: SseFrame[]; rest: string } {
  const frames: SseFrame[] = [];
  const parts = buffer.split("\n\n");
  const rest = parts.pop() ?? "";
  for (const part of parts) {
    const frame: SseFrame = {};
    for (const line of part.split("\n")) {
      const colon = line.indexOf(":");
      if (colon < 0) continue;
      const field = line.slice(0, colon);
      const value = line.slice(colon + 1).replace(/^ /, "");
      if (field === "id") frame.id = value;
      else if (field === "event") frame.event = value;
      else if (field === "data") frame.data = frame.data === undefined ? value : `${frame.data}\n${value}`;
    }
    if (frame.id !== undefined || frame.event !== undefined || frame.data !== undefined) {
      frames.push(frame);
    }
  }
  return { frames, rest };
}

/** Decode a response body to text chunks, whichever streaming shape it has. */
async function* chunksOf(body: unknown): AsyncGenerator<string> {
  const decoder = new TextDecoder();
  const reader = (body as { getReader?: () => { read(): Promise<{ done: boolean; value?: Uint8Array }> } })
    ?.getReader;
  if (typeof reader === "function") {
    const r = reader.call(body);
    while (true) {
      const { done, value } = await r.read();
      if (done) break;
      if (value) yield decoder.decode(value, { stream: true });
    }
  } else if (body && typeof (body as AsyncIterable<Uint8Array>)[Symbol.asyncIterator] === "function") {
    for await (const chunk of body as AsyncIterable<Uint8Array>) {
      yield decoder.decode(chunk, { stream: true });
    }
  }
  const tail = decoder.decode();
  if (tail) yield tail;
}

export interface EventStreamOptions {
  windowMs?: number;
  retryMs?: number;
  fetchFn?: FetchLike;
  onError?: (err: unknown) => void;
}

export class EventStream {
  cursor: number;
  private stopped = false;
  private controller: AbortController | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private windowMs: number;
  private retryMs: number;
  private fetchFn: FetchLike;
  private onError: (err: unknown) => void;

  constructor(
    private base: string,
    private token: string,
    private onEvent: (event: StreamEvent) => void,
    options: EventStreamOptions = {},
  ) {
    this.cursor = 0;
    this.windowMs = options.windowMs ?? 5000;
    this.retryMs = options.retryMs ?? 250;
    this.fetchFn = options.fetchFn ?? (globalThis.fetch as unknown as FetchLike);
    this.onError = options.onError ?? (() => {});
  }

  windowUrl(): string {
    return `${this.base}/events?since=${this.cursor}&window_ms=${this.windowMs}`;
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.window();
      } catch (err) {
        if (!this.stopped) this.onError(err);
      }
      if (this.stopped) return;
      await new Promise<void>((resolve) => {
        this.timer = setTimeout(resolve, this.retryMs);
      });
    }
  }

  /** Consume one bounded server window, advancing the cursor monotonically. */
  private async window(): Promise<void> {
    this.controller = new AbortController();
    const res: MinimalResponse = await this.fetchFn(this.windowUrl(), {
      headers: { Authorization: `Bearer ${this.token}` },
      signal: this.controller.signal,
    });
    if (!res.ok) {
      throw new Error(`event stream returned HTTP ${res.status}`);
    }
    let buffer = "";
    for await (const chunk of chunksOf(res.body)) {
      buffer += chunk;
      const { frames, rest } = parseSseChunk(buffer);
      buffer = rest;
      for (const frame of frames) {
        this.dispatch(frame);
      }
    }
  }

  private dispatch(frame: SseFrame): void {
    if (frame.data === undefined) return;
    let event: StreamEvent;
    try {
      event = JSON.parse(frame.data) as StreamEvent;
    } catch {
      return;
    }
    if (typeof event.seq !== "number" || event.seq <= this.cursor) return;
    this.cursor = event.seq;
    this.onEvent(event);
  }
}
